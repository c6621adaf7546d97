#include <doctest.h>

#include <cmath>

#include "dspl/inference.hpp"
#include "dspl/oracle.hpp"
#include "dspl/relax.hpp"

using namespace dspl;

namespace {

RelaxationSpec spec(CmpOp op, double beta) { return {op, beta, beta}; }

}  // namespace

TEST_CASE("relaxed comparisons at zero") {
  CHECK(relax(0.0, spec(CmpOp::Gt, 10)) == doctest::Approx(0.5));
  CHECK(relax(0.0, spec(CmpOp::Lt, 10)) == doctest::Approx(0.5));
  CHECK(relax(0.0, spec(CmpOp::Eq, 10)) == doctest::Approx(0.25));
  CHECK(relax(0.0, spec(CmpOp::Ne, 10)) == doctest::Approx(0.75));
  CHECK(relax(1.0, spec(CmpOp::Gt, 5)) == doctest::Approx(0.993307).epsilon(1e-6));
  CHECK(relax(1.0, spec(CmpOp::Lt, 5)) == doctest::Approx(1 - 0.993307).epsilon(1e-4));
}

TEST_CASE("relaxation error bound") {
  for (CmpOp op : {CmpOp::Gt, CmpOp::Ge, CmpOp::Lt, CmpOp::Le}) {
    for (double beta : {1.0, 10.0, 100.0}) {
      for (double g = -5; g <= 5; g += 0.125) {
        if (g == 0) continue;
        const double hard = hard_indicator(g, op) ? 1.0 : 0.0;
        CHECK(std::abs(relax(g, spec(op, beta)) - hard) < std::exp(-beta * std::abs(g) / 2));
      }
    }
  }
}

TEST_CASE("relaxation derivative matches the taped one") {
  for (CmpOp op : {CmpOp::Gt, CmpOp::Lt, CmpOp::Eq, CmpOp::Ne}) {
    for (double g : {-0.7, -0.05, 0.0, 0.3, 2.0}) {
      RelaxationSpec s{op, 3.0, 5.0};
      Tape t;
      const Var v = t.variable(g);
      const double taped = t.backward(relax(v, s))[v.index()];
      CHECK(relax_derivative(g, s) == doctest::Approx(taped).epsilon(1e-12));
      const double fd = (relax(g + 1e-6, s) - relax(g - 1e-6, s)) / 2e-6;
      CHECK(relax_derivative(g, s) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("straight-through keeps the hard value") {
  Tape t;
  const Var v = t.variable(0.2);
  const Var st = indicator(v, spec(CmpOp::Lt, 4), IndicatorMode::StraightThrough);
  CHECK(st.value() == 0.0);
  CHECK(t.backward(st)[v.index()] == doctest::Approx(relax_derivative(0.2, spec(CmpOp::Lt, 4))));
  CHECK(indicator(0.2, spec(CmpOp::Gt, 4), IndicatorMode::Hard) == 1.0);
}

TEST_CASE("schedules") {
  CHECK(anneal(parse_schedule("constant:50"), 7) == 50);
  CHECK(anneal(parse_schedule("linear:5:1"), 2) == 7);
  CHECK(anneal(parse_schedule("exponential:2:2"), 2) == 8);
  CHECK(parse_schedule("linear:1:0.5").to_string() == "linear:1:0.5");
  for (const char* bad : {"", "constant", "constant:x", "linear:1", "exponential:1:0.5", "cubic:1:1", "constant:0"}) {
    try {
      parse_schedule(bad);
      FAIL("accepted " << bad);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ValidationError);
    }
  }
  CHECK(mode_from_name("st") == IndicatorMode::StraightThrough);
  CHECK(mode_name(IndicatorMode::Soft) == "soft");
}

TEST_CASE("gradient of a threshold probability") {
  const Model m = Model::from_source("x ~ normal(t(mu), 1).\nq :- x < 0.\nquery(q).");
  const CompiledQuery q = compile_query(m, m.ast.queries[0]);
  const ParameterStore store = init_parameters(m.ast, 0);
  InferenceConfig cfg;
  cfg.mode = IndicatorMode::Soft;
  cfg.beta = 1000;
  cfg.n_samples = 100000;
  const GradResult g = grad_query(m, q, store, cfg);
  // minus the standard normal density at zero
  CHECK(std::abs(g.gradients.at("mu")[0] + 0.398942) < 0.02);

  // forward value of grad_query equals infer on the same seed
  CHECK(g.result.estimate == infer(m, q, store, cfg).estimate);
  cfg.mode = IndicatorMode::StraightThrough;
  const GradResult st = grad_query(m, q, store, cfg);
  cfg.mode = IndicatorMode::Hard;
  CHECK(st.result.estimate == infer(m, q, store, cfg).estimate);
}

TEST_CASE("constant queries have zero gradients") {
  const Model m = Model::from_source("x ~ normal(t(mu), 1).\nq.\nr :- x > 0.\nquery(q).");
  const CompiledQuery q = compile_query(m, m.ast.queries[0]);
  InferenceConfig cfg;
  cfg.mode = IndicatorMode::Soft;
  const GradResult g = grad_query(m, q, init_parameters(m.ast, 0), cfg);
  CHECK(g.result.estimate == 1.0);
  CHECK(g.gradients.at("mu") == std::vector<double>{0.0});
}

TEST_CASE("discrete gradients are exact") {
  const Model m = Model::from_source("t(p) :: a.\n0.3 :: b.\nq :- a, \\+ b.\nq :- b.\nquery(q).\n#param p = 0.2");
  const CompiledQuery q = compile_query(m, m.ast.queries[0]);
  const ParameterStore store = init_parameters(m.ast, 0);
  const GradResult g = grad_query(m, q, store, {});
  // P(q) = 0.7 p + 0.3, differentiated through the sigmoid of the raw value
  const double p = 0.2;
  CHECK(g.result.estimate == doctest::Approx(0.7 * p + 0.3).epsilon(1e-14));
  CHECK(g.gradients.at("p")[0] == doctest::Approx(0.7 * p * (1 - p)).epsilon(1e-12));
  InferenceConfig cfg;
  CHECK(oracle::fd_gradient(m, q, store, "p", 0, 1e-6, cfg) == doctest::Approx(g.gradients.at("p")[0]).epsilon(1e-6));
}
