#include <doctest.h>

#include "dspl/circuit.hpp"
#include "dspl/inference.hpp"
#include "support/program_gen.hpp"

using namespace dspl;

namespace {

ProofFormula dnf(std::vector<Conjunction> c) { return ProofFormula{std::move(c)}; }

Circuit compile_default(const ProofFormula& f, std::size_t n) { return compile(f, default_order(f, n)); }

// Structural checks: ordered, reduced and free of duplicates.
void check_reduced(const Circuit& c) {
  for (std::uint32_t i = 2; i < c.nodes.size(); ++i) {
    const BddNode& n = c.nodes[i];
    CHECK(n.lo != n.hi);
    for (std::uint32_t child : {n.lo, n.hi}) {
      if (!Circuit::is_terminal(child)) CHECK(c.nodes[child].level > n.level);
    }
    for (std::uint32_t j = i + 1; j < c.nodes.size(); ++j) CHECK_FALSE(c.nodes[j] == n);
  }
}

}  // namespace

TEST_CASE("single atom") {
  const Circuit c = compile_default(dnf({{make_literal(0, true)}}), 1);
  CHECK(c.decision_count() == 1);
  CHECK(c.nodes[c.root].lo == kBddFalse);
  CHECK(c.nodes[c.root].hi == kBddTrue);
  const auto models = model_enumerate(c);
  REQUIRE(models.size() == 1);
  CHECK(models[0] == PartialAssignment{{0, true}});
}

TEST_CASE("contradiction and tautology") {
  ProofFormula contra;
  Conjunction out;
  CHECK_FALSE(conjoin({make_literal(0, true)}, {make_literal(0, false)}, out));
  CHECK(compile_default(contra, 1).root == kBddFalse);
  const Circuit t = compile_default(dnf({{}}), 0);
  CHECK(t.root == kBddTrue);
  const auto models = model_enumerate(t);
  REQUIRE(models.size() == 1);
  CHECK(models[0].empty());
}

TEST_CASE("weather circuit") {
  const Model m = Model::from_source(R"(
humid(Data) ~ bernoulli(0.4).
temp(Data) ~ normal(5, 10).
good_weather(Data) :- humid(Data) =:= 1, temp(Data) < 0.
good_weather(Data) :- humid(Data) =:= 0, temp(Data) > 15.
query(good_weather(d)).
)");
  const CompiledQuery q = compile_query(m, m.ast.queries[0]);
  CHECK(q.circuit.decision_count() == 3);
  check_reduced(q.circuit);
  CHECK(model_enumerate(q.circuit).size() == 2);

  // atoms: humid - 1 = 0, temp >= 0, temp - 15 > 0
  REQUIRE(q.ground.atoms.size() == 3);
  CHECK(q.ground.atoms[0].key == "sub(humid(d), 1) =:= 0");
  CHECK(q.ground.atoms[1].key == "temp(d) >= 0");
  CHECK(q.ground.atoms[2].key == "sub(temp(d), 15) > 0");
  DiscreteTable humid;
  humid.atoms = {0};
  humid.probs = {0.6, 0.4};
  humid.truth = {{false}, {true}};
  // temp < 0 holds, temp > 15 does not
  CHECK(evaluate_circuit_weighted(q.circuit, {humid}, {{1, 0.0}, {2, 0.0}}) == doctest::Approx(0.4));
  CHECK(evaluate_circuit_weighted(q.circuit, {humid}, {{1, 1.0}, {2, 1.0}}) == doctest::Approx(0.6));
}

TEST_CASE("weighted evaluation basics") {
  const Circuit one = compile_default(dnf({{make_literal(0, true)}}), 1);
  CHECK(evaluate_circuit_weighted(one, {}, {{0, 0.3}}) == doctest::Approx(0.3));
  const Circuit f = compile_default(ProofFormula{}, 0);
  CHECK(evaluate_circuit_weighted(f, {}, {}) == 0.0);

  // the rows of one variable must carry total probability one
  const Circuit two = compile_default(dnf({{make_literal(0, true)}, {make_literal(1, true)}}), 2);
  DiscreteTable bad;
  bad.atoms = {0, 1};
  bad.probs = {0.5, 0.6};
  bad.truth = {{true, false}, {false, true}};
  try {
    evaluate_circuit_weighted(two, {bad}, {});
    FAIL("expected InconsistentEncoding");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InconsistentEncoding);
  }
}

TEST_CASE("compilation is canonical") {
  testgen::ProgramGenerator gen(8);
  for (int i = 0; i < 50; ++i) {
    const Model m = Model::from_source(gen.discrete().render(false));
    const GroundResult g = ground_query(m.ast, m.ast.queries[0]);
    const auto order = default_order(g.formula, g.atoms.size());
    const Circuit a = compile(g.formula, order);
    const Circuit b = compile(g.formula, order);
    CHECK(a.nodes == b.nodes);
    CHECK(a.root == b.root);
    check_reduced(a);
    // reversing the DNF does not change the function
    ProofFormula rev = g.formula;
    std::reverse(rev.dnf.begin(), rev.dnf.end());
    const Circuit c = compile(rev, order);
    CHECK(c.nodes == a.nodes);
  }
}

TEST_CASE("models agree with truth tables") {
  testgen::ProgramGenerator gen(21);
  for (int i = 0; i < 80; ++i) {
    const Model m = Model::from_source(gen.discrete().render(false));
    const CompiledQuery q = compile_query(m, m.ast.queries[0]);
    const std::size_t n = q.ground.atoms.size();
    if (n > 12) continue;
    const auto cubes = model_enumerate(q.circuit);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::vector<bool> a(n);
      for (std::size_t k = 0; k < n; ++k) a[k] = (mask >> k) & 1;
      int covering = 0;
      for (const auto& cube : cubes) {
        bool ok = true;
        for (const auto& [atom, v] : cube) ok = ok && a[atom] == v;
        covering += ok;
      }
      CHECK(covering <= 1);
      CHECK((covering == 1) == q.ground.formula.evaluate(a));
      CHECK(q.circuit.evaluate(a) == q.ground.formula.evaluate(a));
    }
  }
}

TEST_CASE("size cap") {
  // a chain of independent pairs with a bad order blows up
  std::vector<Conjunction> c;
  const std::size_t k = 12;
  for (std::size_t i = 0; i < k; ++i) c.push_back({make_literal(i, true), make_literal(i + k, true)});
  ProofFormula f{c};
  std::vector<std::size_t> order(2 * k);
  for (std::size_t i = 0; i < 2 * k; ++i) order[i] = i;
  try {
    compile(f, order, 100);
    FAIL("expected SizeExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SizeExceeded);
  }
  CHECK(compile(f, default_order(f, 2 * k), 100).decision_count() == 2 * k);
}

TEST_CASE("dot export") {
  const Circuit c = compile_default(dnf({{make_literal(0, true), make_literal(1, false)}}), 2);
  const std::string dot = to_dot(c, [](std::size_t a) { return "atom" + std::to_string(a); });
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("atom0") != std::string::npos);
  CHECK(dot.find("atom1") != std::string::npos);
}
