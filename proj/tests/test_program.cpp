#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dspl/program.hpp"
#include "support/program_gen.hpp"

using namespace dspl;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(std::string_view src) {
  try {
    parse(src);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised for: " << src);
  return ErrorCode::IoError;
}

const char* kWeather = R"(
humid(Data) ~ bernoulli(0.4).
temp(Data) ~ normal(5, 10).
good_weather(Data) :- humid(Data) =:= 1, temp(Data) < 0.
good_weather(Data) :- humid(Data) =:= 0, temp(Data) > 15.
query(good_weather(d)).
)";

}  // namespace

TEST_CASE("poisson fact") {
  const ProgramAst ast = parse("x ~ poisson(2.0).");
  REQUIRE(ast.dist_facts.size() == 1);
  CHECK(ast.dist_facts[0].family == "poisson");
  CHECK(ast.dist_facts[0].head == Term::symbol("x"));
  REQUIRE(ast.dist_facts[0].params.size() == 1);
  CHECK(ast.dist_facts[0].params[0] == Term::num(2.0));
  CHECK(ast.clauses.empty());
}

TEST_CASE("weather rules") {
  const ProgramAst ast = parse(kWeather);
  REQUIRE(ast.clauses.size() == 2);
  for (const auto& c : ast.clauses) {
    CHECK(c.head.name == "good_weather");
    REQUIRE(c.body.size() == 2);
    CHECK(c.body[0].kind == Literal::Kind::Comparison);
    CHECK(c.body[0].op == CmpOp::Eq);
    CHECK(c.body[1].kind == Literal::Kind::Comparison);
  }
  CHECK(ast.clauses[0].body[1].op == CmpOp::Lt);
  CHECK(ast.clauses[1].body[1].op == CmpOp::Gt);
  CHECK(ast.queries.size() == 1);
}

TEST_CASE("missing period is a syntax error at end of input") {
  try {
    parse("q :- p");
    FAIL("expected SyntaxError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
    CHECK(e.pos().line == 1);
    CHECK(e.pos().column == 7);
  }
}

TEST_CASE("pretty printing") {
  CHECK(pretty_print(parse("x ~ normal(0,1).")) == "x ~ normal(0, 1).\n");
  CHECK(pretty_print(parse("")).empty());
  const std::string text = pretty_print(parse("x ~ normal(t(mu), 1).\n q :- x > 0."));
  CHECK(text.find("t(mu)") != std::string::npos);
}

TEST_CASE("validation errors") {
  CHECK(code_of("x ~ gamma(1, 2).") == ErrorCode::ValidationError);
  CHECK(code_of("x ~ normal(1).") == ErrorCode::ValidationError);
  CHECK(code_of("q :- X > 0.") == ErrorCode::ValidationError);
  CHECK(code_of("p ~ bernoulli(0.5).\np :- q.\nq.") == ErrorCode::ValidationError);
  CHECK(code_of("x ~ normal(0, 1).\nq :- foo(x) > 0.") == ErrorCode::ValidationError);
  CHECK(code_of("query(nowhere).") == ErrorCode::ValidationError);
  CHECK(code_of("x ~ normal(t(_), 1).") == ErrorCode::ValidationError);
  CHECK(code_of("q :- \\+ r(X).\nr(a).") == ErrorCode::ValidationError);
}

TEST_CASE("syntax errors") {
  CHECK(code_of("q :- .") == ErrorCode::SyntaxError);
  CHECK(code_of("x ~ .") == ErrorCode::SyntaxError);
  CHECK(code_of("#bogus a = 1") == ErrorCode::SyntaxError);
  CHECK(code_of("q :- p(,).") == ErrorCode::SyntaxError);
}

TEST_CASE("directives") {
  const ProgramAst ast = parse(
      "#network net arch=[2,4,3] act=tanh out=softmax\n"
      "#data img = \"img.json\"\n"
      "#param w = [1, 2]\n"
      "c(I) ~ categorical(net(I), [1, 2, 3]).\n"
      "q :- c(img) > 1.\n");
  REQUIRE(ast.networks.size() == 1);
  CHECK(ast.networks[0].arch == std::vector<std::size_t>{2, 4, 3});
  CHECK(ast.networks[0].act == Activation::Tanh);
  CHECK(ast.networks[0].out == OutputActivation::Softmax);
  REQUIRE(ast.data.size() == 1);
  CHECK(ast.data[0].path == "img.json");
  REQUIRE(ast.params.size() == 1);
  CHECK(ast.params[0].init == std::vector<double>{1, 2});
}

TEST_CASE("annotated clauses desugar to an auxiliary fact and a guarded rule") {
  const ProgramAst ast = parse("0.3 :: p.\n0.7 :: q(X) :- r(X).\nr(a).\n");
  const LogicProgram lp = desugar(ast);
  CHECK(lp.dist_facts.size() == 2);
  for (const auto& d : lp.dist_facts) CHECK(d.family == "bernoulli");
  // the rule for q keeps its head variable in the auxiliary fact
  bool found = false;
  for (const auto& r : lp.rules) {
    if (r.head.name != "q") continue;
    found = true;
    REQUIRE(r.body.size() == 2);
    CHECK(r.body.back().kind == Literal::Kind::Comparison);
    CHECK(to_string(r.body.back()).find("=:= 1") != std::string::npos);
  }
  CHECK(found);
}

TEST_CASE("learnable parameter constraints follow their slots") {
  const auto lps = collect_learnable_params(parse(
      "x ~ normal(t(mu), t(sigma)).\n"
      "b ~ bernoulli(t(p)).\n"
      "t(a) :: h.\n"
      "q :- x > t(c).\n"));
  CHECK(lps.at("mu").constraint == ParamConstraint::None);
  CHECK(lps.at("sigma").constraint == ParamConstraint::Positive);
  CHECK(lps.at("p").constraint == ParamConstraint::Unit);
  CHECK(lps.at("a").constraint == ParamConstraint::Unit);
  CHECK(lps.at("c").constraint == ParamConstraint::None);
  CHECK(lps.at("sigma").init == std::vector<double>{1.0});
  CHECK(lps.at("p").init == std::vector<double>{0.5});
  CHECK(lps.at("mu").init == std::vector<double>{0.0});
  for (double v : {0.01, 0.5, 3.0, 40.0}) {
    CHECK(constrain(unconstrain(v, ParamConstraint::Positive), ParamConstraint::Positive) == doctest::Approx(v));
  }
  for (double v : {0.01, 0.5, 0.99}) {
    CHECK(constrain(unconstrain(v, ParamConstraint::Unit), ParamConstraint::Unit) == doctest::Approx(v));
  }
}

TEST_CASE("round trip over the shipped and generated corpus") {
  std::vector<std::string> corpus = {kWeather};
  for (const auto& e : std::filesystem::directory_iterator(DSPL_PROGRAMS_DIR)) {
    if (e.path().extension() == ".dspl") corpus.push_back(slurp(e.path()));
  }
  testgen::ProgramGenerator gen(5);
  for (int i = 0; i < 50; ++i) {
    corpus.push_back(gen.discrete().render(i % 2 == 0));
    corpus.push_back(gen.hybrid().render(i % 2 == 1));
  }
  for (const auto& src : corpus) {
    const ProgramAst a = parse(src);
    const ProgramAst b = parse(pretty_print(a));
    CHECK(a == b);
    CHECK(parse(src) == a);
  }
}

TEST_CASE("fuzzed input never crashes the parser") {
  std::mt19937_64 gen(17);
  const std::string alphabet = "abcXY_01.:-~()[],%#=<>\\+ \n\"'t";
  const std::string seed_text = kWeather;
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    if (i % 2 == 0) {
      const int len = std::uniform_int_distribution<int>(0, 60)(gen);
      for (int k = 0; k < len; ++k) s += alphabet[gen() % alphabet.size()];
    } else {
      s = seed_text;
      const int edits = std::uniform_int_distribution<int>(1, 5)(gen);
      for (int k = 0; k < edits; ++k) s[gen() % s.size()] = static_cast<char>(gen() % 256);
    }
    try {
      parse(s);
    } catch (const Error& e) {
      const bool expected = e.code() == ErrorCode::SyntaxError || e.code() == ErrorCode::ValidationError ||
                            e.code() == ErrorCode::DomainError;
      CHECK(expected);
    }
  }
}

TEST_CASE("term utilities") {
  const Term t = parse_term("f(X, g(Y, X), [1, 2.5])");
  std::vector<std::string> vars;
  collect_variables(t, vars);
  CHECK(vars == std::vector<std::string>{"X", "Y"});
  Bindings b;
  CHECK(unify(t, parse_term("f(a, g(b, a), [1, 2.5])"), b));
  CHECK(to_string(substitute(t, b)) == "f(a, g(b, a), [1, 2.5])");
  Bindings c;
  CHECK_FALSE(unify(t, parse_term("f(a, g(b, c), [1, 2.5])"), c));
  CHECK(to_string(canonical_variant(parse_term("p(Z, W, Z)"))) == "p(_V0, _V1, _V0)");
  CHECK(to_string(parse_term("'hello world'")) == "'hello world'");
}
