#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include <nlohmann/json.hpp>

#include "dspl/autodiff.hpp"

using namespace dspl;

namespace {

bool close(double a, double b, double rel = 1e-4, double abs_floor = 1e-6) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs_floor);
}

// Derivative check of a scalar primitive at x.
void check_unary(const std::function<Var(const Var&)>& f, const std::function<double(double)>& g, double x) {
  Tape t;
  const Var v = t.variable(x);
  const Var y = f(v);
  CHECK(y.value() == doctest::Approx(g(x)));
  const double ad = t.backward(y)[v.index()];
  const double h = 1e-5;
  const double fd = (g(x + h) - g(x - h)) / (2 * h);
  CHECK(close(ad, fd));
}

}  // namespace

TEST_CASE("square and sigmoid derivatives") {
  Tape t;
  const Var x = t.variable(3.0);
  CHECK(t.backward(x * x)[x.index()] == 6.0);
  Tape t2;
  const Var z = t2.variable(0.0);
  CHECK(t2.backward(sigmoid(z))[z.index()] == doctest::Approx(0.25));
}

TEST_CASE("primitives match finite differences") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> any(-3, 3), pos(0.2, 4);
  for (int i = 0; i < 50; ++i) {
    const double x = any(gen), p = pos(gen);
    check_unary([](const Var& v) { return exp(v); }, [](double v) { return std::exp(v); }, x);
    check_unary([](const Var& v) { return log(v); }, [](double v) { return std::log(v); }, p);
    check_unary([](const Var& v) { return sqrt(v); }, [](double v) { return std::sqrt(v); }, p);
    check_unary([](const Var& v) { return tanh(v); }, [](double v) { return std::tanh(v); }, x);
    check_unary([](const Var& v) { return sigmoid(v); }, [](double v) { return sigmoid(v); }, x);
    check_unary([](const Var& v) { return softplus(v); }, [](double v) { return softplus(v); }, x);
    check_unary([](const Var& v) { return abs(v); }, [](double v) { return std::abs(v); }, x);
    check_unary([](const Var& v) { return relu(v); }, [](double v) { return relu(v); }, x);
    check_unary([](const Var& v) { return -v; }, [](double v) { return -v; }, x);
    const double y = any(gen);
    check_unary([&](const Var& v) { return v * y + v / p - (v - y); }, [&](double v) { return v * y + v / p - (v - y); }, x);
    check_unary([&](const Var& v) { return Var(p) / v; }, [&](double v) { return p / v; }, p);
  }
  CHECK(relu(-2.0) == 0.0);
}

TEST_CASE("backward is linear") {
  Tape t;
  const Var x = t.variable(0.7), y = t.variable(-1.3);
  const Var f = x * y + exp(x);
  const Var g = sigmoid(y) * x;
  const std::pair<Var, double> seeds[] = {{f, 2.0}, {g, -3.0}};
  const auto both = t.backward(seeds);
  const auto df = t.backward(f);
  const auto dg = t.backward(g);
  for (const Var& v : {x, y}) CHECK(both[v.index()] == doctest::Approx(2.0 * df[v.index()] - 3.0 * dg[v.index()]).epsilon(1e-15));
}

TEST_CASE("dense and softmax") {
  const std::vector<double> w = {1, 1}, b = {0}, x = {3, 4};
  CHECK(dense<double>(w, b, x) == std::vector<double>{7});
  const std::vector<double> z = {0, 0};
  const auto s = softmax<double>(z);
  CHECK(s[0] == doctest::Approx(0.5));
  CHECK(s[1] == doctest::Approx(0.5));
}

TEST_CASE("two-layer network gradients match finite differences") {
  const ProgramAst ast = parse("#network net arch=[3,5,2] act=tanh out=softmax\n");
  const NetworkDecl& net = ast.networks[0];
  ParameterStore store = init_parameters(ast, 42);
  const std::vector<double> input = {0.3, -1.2, 0.8};
  auto objective = [&](const ParameterStore& s) {
    auto out = network_forward<double>(net, [&](const std::string& n) { return std::span<const double>(s.get(n).values); },
                                       std::span<const double>(input));
    return out[0] * 0.7 + out[1] * out[1];
  };
  Tape tape;
  ParamBinding bind(store, tape);
  std::vector<Var> in(input.begin(), input.end());
  auto out = network_forward<Var>(net, [&](const std::string& n) { return bind.get(n); }, std::span<const Var>(in));
  const Var y = out[0] * 0.7 + out[1] * out[1];
  const Gradients g = bind.gradients(tape.backward(y));
  int checked = 0;
  for (const auto& [name, grads] : g) {
    for (std::size_t i = 0; i < grads.size(); ++i) {
      ParameterStore plus = store, minus = store;
      plus.get_mut(name).values[i] += 1e-5;
      minus.get_mut(name).values[i] -= 1e-5;
      const double fd = (objective(plus) - objective(minus)) / 2e-5;
      CHECK(close(grads[i], fd));
      ++checked;
    }
  }
  CHECK(checked == 3 * 5 + 5 + 5 * 2 + 2);
}

TEST_CASE("network input size is checked") {
  const ProgramAst ast = parse("#network net arch=[3,2] out=linear\n");
  const ParameterStore store = init_parameters(ast, 1);
  const std::vector<double> x = {1, 2};
  try {
    network_forward<double>(ast.networks[0], [&](const std::string& n) { return std::span<const double>(store.get(n).values); },
                            std::span<const double>(x));
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("optimizers") {
  ParameterStore s;
  s.add("theta", {{}, {1.0}});
  OptimizerConfig sgd;
  sgd.lr = 0.1;
  step(sgd, s, {{"theta", {2.0}}});
  CHECK(s.get("theta").values[0] == doctest::Approx(0.8));

  ParameterStore a;
  a.add("theta", {{}, {1.0}});
  OptimizerConfig adam;
  adam.kind = OptimizerKind::Adam;
  adam.lr = 1e-3;
  step(adam, a, {{"theta", {5.0}}});
  CHECK(a.get("theta").values[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-8));

  ParameterStore m;
  m.add("theta", {{}, {1.0}});
  OptimizerConfig adamax;
  adamax.kind = OptimizerKind::Adamax;
  adamax.lr = 1e-3;
  step(adamax, m, {{"theta", {5.0}}});
  CHECK(m.get("theta").values[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-8));
  step(adamax, m, {{"theta", {0.0}}});
  CHECK(m.get("theta").values[0] < 1.0 - 1e-3);

  ParameterStore z;
  z.add("theta", {{}, {1.0}});
  step(adam, z, {{"theta", {0.0}}});
  CHECK(z.get("theta").values[0] == 1.0);

  try {
    step(sgd, z, {{"nope", {1.0}}});
    FAIL("expected UnknownParam");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownParam);
  }
}

TEST_CASE("learning-rate multipliers") {
  OptimizerConfig c;
  c.lr = 0.1;
  c.lr_multipliers = {{"mu", 20}, {"net", 0.5}};
  CHECK(c.multiplier("mu") == 20);
  CHECK(c.multiplier("net.W0") == 0.5);
  CHECK(c.multiplier("sigma") == 1);
  ParameterStore s;
  s.add("mu", {{}, {0.0}});
  step(c, s, {{"mu", {1.0}}});
  CHECK(s.get("mu").values[0] == doctest::Approx(-2.0));
}

TEST_CASE("checkpoint round trip") {
  const ProgramAst ast = parse("#network net arch=[2,3,1]\nx ~ normal(t(mu), t(sigma)).\n#param mu = 2\nq :- x > 0.\n");
  ParameterStore s = init_parameters(ast, 9);
  CHECK(s.contains("mu"));
  CHECK(s.get("mu").values[0] == 2.0);
  CHECK(constrain(s.get("sigma").values[0], ParamConstraint::Positive) == doctest::Approx(1.0));
  CHECK(s.get(network_weight_name("net", 0)).shape == std::vector<std::size_t>{3, 2});
  const auto path = std::filesystem::temp_directory_path() / "dspl_ckpt_test.json";
  s.save(path.string());
  const ParameterStore back = ParameterStore::load(path.string());
  CHECK(back.tensors().size() == s.tensors().size());
  for (const auto& [name, t] : s.tensors()) CHECK(back.get(name).values == t.values);
  const auto j = s.to_json();
  CHECK(j.contains("mu"));
  CHECK(j["mu"].contains("values"));
  std::filesystem::remove(path);
}

TEST_CASE("initialization is seeded") {
  const ProgramAst ast = parse("#network net arch=[4,8,2]\n");
  CHECK(init_parameters(ast, 3) == init_parameters(ast, 3));
  CHECK_FALSE(init_parameters(ast, 3) == init_parameters(ast, 4));
}
