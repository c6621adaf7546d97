#include <doctest.h>

#include <cmath>

#include "dspl/inference.hpp"
#include "dspl/oracle.hpp"

using namespace dspl;

namespace {

const char* kWeather = R"(
humid(Data) ~ bernoulli(0.4).
temp(Data) ~ normal(5, 10).
good_weather(Data) :- humid(Data) =:= 1, temp(Data) < 0.
good_weather(Data) :- humid(Data) =:= 0, temp(Data) > 15.
query(good_weather(d)).
)";

const char* kBurglary = R"(
0.1 :: burglary.
0.2 :: earthquake.
0.9 :: alarm :- burglary.
0.35 :: alarm :- earthquake.
0.9 :: calls :- alarm.
query(calls).
)";

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double weather_truth() { return 0.4 * phi(-0.5) + 0.6 * (1 - phi(1.0)); }

QueryResult run(const Model& m, std::size_t n, std::uint64_t seed, IndicatorMode mode = IndicatorMode::Hard,
                std::size_t threads = 1) {
  InferenceConfig cfg;
  cfg.n_samples = n;
  cfg.seed = seed;
  cfg.mode = mode;
  cfg.threads = threads;
  const CompiledQuery q = compile_query(m, m.ast.queries.at(0));
  return infer(m, q, init_parameters(m.ast, 0), cfg);
}

ErrorCode infer_code(const char* src) {
  try {
    const Model m = Model::from_source(src);
    run(m, 1000, 0);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("weather estimate") {
  const Model m = Model::from_source(kWeather);
  const QueryResult r = run(m, 100000, 1);
  CHECK_FALSE(r.exact);
  CHECK(r.std_error > 0);
  CHECK(std::abs(r.estimate - weather_truth()) <= 3 * r.std_error);
  CHECK(r.n_samples == 100000);
  CHECK(r.query == "good_weather(d)");
}

TEST_CASE("purely discrete queries are exact") {
  const Model m = Model::from_source(kBurglary);
  const QueryResult r = run(m, 100, 3);
  CHECK(r.exact);
  CHECK(r.std_error == 0.0);
  // noisy-or of the two causes, then the call
  const double alarm = 1 - (1 - 0.1 * 0.9) * (1 - 0.2 * 0.35);
  CHECK(r.estimate == doctest::Approx(alarm * 0.9).epsilon(1e-14));
  CHECK(r.estimate == doctest::Approx(oracle::enumerate_worlds(m.ast, m.ast.queries[0])).epsilon(1e-14));
  CHECK(r.discrete_exact_fraction == 1.0);

  const Model t = Model::from_source("x ~ normal(0, 1).\nq.\nquery(q).");
  const QueryResult tr = run(t, 10, 0);
  CHECK(tr.estimate == 1.0);
  CHECK(tr.std_error == 0.0);
}

TEST_CASE("Monte-Carlo consistency over seeds") {
  const Model m = Model::from_source(kWeather);
  const CompiledQuery q = compile_query(m, m.ast.queries[0]);
  const ParameterStore store;
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    InferenceConfig cfg;
    cfg.n_samples = 10000;
    cfg.seed = seed;
    const QueryResult r = infer(m, q, store, cfg);
    inside += std::abs(r.estimate - weather_truth()) <= 4 * r.std_error;
  }
  CHECK(inside >= 99);
}

TEST_CASE("standard error shrinks like one over root n") {
  const Model m = Model::from_source(kWeather);
  const double se2 = run(m, 100, 5).std_error;
  const double se3 = run(m, 1000, 5).std_error;
  const double se4 = run(m, 10000, 5).std_error;
  const double root10 = std::sqrt(10.0);
  CHECK(se2 / se3 > root10 / 1.5);
  CHECK(se2 / se3 < root10 * 1.5);
  CHECK(se3 / se4 > root10 / 1.5);
  CHECK(se3 / se4 < root10 * 1.5);
}

TEST_CASE("straight-through forward pass equals hard mode") {
  const Model m = Model::from_source(kWeather);
  for (std::uint64_t seed : {0, 9, 31}) {
    const QueryResult h = run(m, 5000, seed, IndicatorMode::Hard);
    const QueryResult s = run(m, 5000, seed, IndicatorMode::StraightThrough);
    CHECK(h.estimate == s.estimate);
    CHECK(h.std_error == s.std_error);
  }
}

TEST_CASE("same seed, same answer, any thread count") {
  const Model m = Model::from_source(kWeather);
  const QueryResult a = run(m, 20000, 4, IndicatorMode::Hard, 1);
  const QueryResult b = run(m, 20000, 4, IndicatorMode::Hard, 1);
  const QueryResult c = run(m, 20000, 4, IndicatorMode::Hard, 4);
  CHECK(a.estimate == b.estimate);
  CHECK(a.estimate == c.estimate);
  CHECK(a.std_error == c.std_error);
  CHECK(run(m, 20000, 5).estimate != a.estimate);
}

TEST_CASE("soft mode approaches hard mode as coolness grows") {
  const Model m = Model::from_source(kWeather);
  const CompiledQuery q = compile_query(m, m.ast.queries[0]);
  InferenceConfig cfg;
  cfg.n_samples = 20000;
  cfg.mode = IndicatorMode::Soft;
  cfg.beta = 1e4;
  const double soft = infer(m, q, {}, cfg).estimate;
  cfg.mode = IndicatorMode::Hard;
  CHECK(std::abs(soft - infer(m, q, {}, cfg).estimate) < 1e-3);
}

TEST_CASE("errors") {
  // a NaN reaches a comparison
  CHECK(infer_code("x ~ normal(0, 1).\nq :- log(x) > 0.\nquery(q).") == ErrorCode::NumericError);
  // joint discrete table too large for an atom that also reads a continuous variable
  CHECK(infer_code("a ~ poisson(500).\nb ~ poisson(500).\ny ~ normal(0, 1).\n"
                   "q :- add(add(a, b), y) > 1000.\nquery(q).") == ErrorCode::MixedAtomUnsupported);
  CHECK(infer_code("a ~ poisson(500).\nb ~ poisson(500).\nq :- add(a, b) > 1000.\nquery(q).") ==
        ErrorCode::TooLarge);
}

TEST_CASE("continuous equality warns") {
  const Model m = Model::from_source("x ~ normal(0, 1).\nq :- x =:= 0.\nquery(q).");
  const QueryResult r = run(m, 1000, 0);
  CHECK(r.estimate == 0.0);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("equality") != std::string::npos);
}

TEST_CASE("resolved distributions") {
  const Model m = Model::from_source(
      "x ~ normal(t(mu), t(sigma)).\n#param mu = 2\n#param sigma = 3\nb ~ bernoulli(0.25).\n"
      "q :- x > 0, b =:= 1.\nquery(q).");
  const CompiledQuery q = compile_query(m, m.ast.queries[0]);
  ParameterStore store = init_parameters(m.ast, 0);
  const auto dists = resolve_distributions(m, q, store);
  REQUIRE(dists.size() == 2);
  bool saw_normal = false, saw_bernoulli = false;
  for (const auto& d : dists) {
    if (d.family == Family::Normal) {
      saw_normal = true;
      CHECK(d.params[0] == doctest::Approx(2.0));
      CHECK(d.params[1] == doctest::Approx(3.0));
    }
    if (d.family == Family::Bernoulli) {
      saw_bernoulli = true;
      CHECK(d.params[0] == doctest::Approx(0.25));
    }
  }
  CHECK(saw_normal);
  CHECK(saw_bernoulli);

  InferenceConfig cfg;
  cfg.n_samples = 200000;
  const QueryResult r = infer(m, q, store, cfg);
  CHECK(std::abs(r.estimate - 0.25 * phi(2.0 / 3.0)) <= 4 * r.std_error);
  CHECK(r.discrete_exact_fraction == doctest::Approx(0.5));
}
