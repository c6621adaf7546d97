#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dspl/autodiff.hpp"
#include "dspl/error.hpp"
#include "dspl/family.hpp"
#include "dspl/rng.hpp"

namespace dspl {

// One ground random variable's distribution with resolved parameters.
// Scalar slots: bernoulli(p), categorical(probs...), normal(mu, sigma),
// beta(a, b), poisson(rate), generalized_normal(mu, scale), uniform(lo, hi).
template <class S>
struct DistributionInstance {
  Family family = Family::Normal;
  std::vector<S> params;
  std::vector<double> values;  // categorical outcomes
  double shape = kDefaultGenNormalShape;

  SupportKind kind() const { return support_kind(family); }
};

template <class S>
struct SupportPoint {
  double value;
  S prob;
};

struct BaseSample {
  Family family;
  std::vector<double> u;
};

inline constexpr double kPoissonTruncationMass = 1.0 - 1e-9;
inline constexpr std::size_t kMaxPoissonSupport = 100000;

// Throws DomainError for out-of-range parameters.
void check_params(Family family, const std::vector<double>& params, const std::vector<double>& values,
                  double shape);

template <class S>
void check_params(const DistributionInstance<S>& d) {
  std::vector<double> ps;
  ps.reserve(d.params.size());
  for (const auto& p : d.params) ps.push_back(value_of(p));
  check_params(d.family, ps, d.values, d.shape);
}

// Smallest k with P(X <= k) >= mass.
std::size_t poisson_cutoff(double rate, double mass = kPoissonTruncationMass);

template <class S>
std::vector<SupportPoint<S>> enumerate_support(const DistributionInstance<S>& d) {
  using std::exp;
  using std::log;
  check_params(d);
  std::vector<SupportPoint<S>> out;
  switch (d.family) {
    case Family::Bernoulli:
      out.push_back({0.0, S(1.0) - d.params[0]});
      out.push_back({1.0, d.params[0]});
      return out;
    case Family::Categorical: {
      S total = 0.0;
      for (const auto& p : d.params) total = total + p;
      std::vector<std::size_t> order(d.params.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return d.values[a] < d.values[b]; });
      for (std::size_t i : order) {
        S p = d.params[i] / total;
        if (!out.empty() && out.back().value == d.values[i]) {
          out.back().prob = out.back().prob + p;
        } else {
          out.push_back({d.values[i], p});
        }
      }
      return out;
    }
    case Family::Poisson: {
      const S& rate = d.params[0];
      const std::size_t cut = poisson_cutoff(value_of(rate));
      S log_rate = log(rate);
      S total = 0.0;
      for (std::size_t k = 0; k <= cut; ++k) {
        const double kk = static_cast<double>(k);
        S p = exp(kk * log_rate - rate - std::lgamma(kk + 1.0));
        total = total + p;
        out.push_back({kk, p});
      }
      for (auto& sp : out) sp.prob = sp.prob / total;
      return out;
    }
    default:
      fail(ErrorCode::NotDiscrete, std::string(family_name(d.family)) + " has no enumerable support");
  }
}

// Parameter-free base draws: standard normal for the normal family,
// U(0, 1) otherwise. Draw i uses counter i of `rng`.
BaseSample sample_base(Family family, std::size_t n, const CounterRng& rng);
double base_draw(Family family, const CounterRng& rng, std::uint64_t counter);

// Standard generalized normal quantile (location 0, scale 1).
double gen_normal_std_quantile(double u, double shape);
double beta_quantile(double u, double a, double b);

// x = r(u, params), differentiable in the parameters.
template <class S>
S reparam(const DistributionInstance<S>& d, double u) {
  switch (d.family) {
    case Family::Normal: return d.params[0] + d.params[1] * S(u);
    case Family::Uniform: return d.params[0] + (d.params[1] - d.params[0]) * S(u);
    case Family::GeneralizedNormal:
      return d.params[0] + d.params[1] * S(gen_normal_std_quantile(u, d.shape));
    case Family::Beta: {
      const double a = value_of(d.params[0]);
      const double b = value_of(d.params[1]);
      const double x = beta_quantile(u, a, b);
      if constexpr (std::is_same_v<S, double>) {
        return x;
      } else {
        const double ha = 1e-6 * std::max(1.0, a);
        const double hb = 1e-6 * std::max(1.0, b);
        const double dxa = (beta_quantile(u, a + ha, b) - beta_quantile(u, a - ha, b)) / (2 * ha);
        const double dxb = (beta_quantile(u, a, b + hb) - beta_quantile(u, a, b - hb)) / (2 * hb);
        return make_binary(x, d.params[0], dxa, d.params[1], dxb);
      }
    }
    default:
      fail(ErrorCode::NotSupported, std::string(family_name(d.family)) + " is not reparametrized");
  }
}

template <class S>
std::vector<S> reparam(const DistributionInstance<S>& d, const BaseSample& base) {
  std::vector<S> out;
  out.reserve(base.u.size());
  for (double u : base.u) out.push_back(reparam(d, u));
  return out;
}

// Continuous families only; NotSupported otherwise.
double cdf(const DistributionInstance<double>& d, double x);
double pdf(const DistributionInstance<double>& d, double x);

}  // namespace dspl
