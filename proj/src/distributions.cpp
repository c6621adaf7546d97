#include "dspl/distributions.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace dspl {

namespace {

[[noreturn]] void bad_param(Family f, const std::string& what) {
  fail(ErrorCode::DomainError, std::string(family_name(f)) + ": " + what);
}

}  // namespace

void check_params(Family family, const std::vector<double>& params, const std::vector<double>& values,
                  double shape) {
  for (double p : params) {
    if (!std::isfinite(p)) bad_param(family, "non-finite parameter");
  }
  auto need = [&](std::size_t n) {
    if (params.size() != n) bad_param(family, "expected " + std::to_string(n) + " parameters");
  };
  switch (family) {
    case Family::Bernoulli:
      need(1);
      if (params[0] < 0 || params[0] > 1) bad_param(family, "probability outside [0, 1]");
      break;
    case Family::Categorical: {
      if (params.empty() || params.size() != values.size()) bad_param(family, "probabilities/values mismatch");
      double total = 0;
      for (double p : params) {
        if (p < 0) bad_param(family, "negative weight");
        total += p;
      }
      if (!(total > 0)) bad_param(family, "weights sum to zero");
      break;
    }
    case Family::Normal:
      need(2);
      if (!(params[1] > 0)) bad_param(family, "scale must be positive");
      break;
    case Family::GeneralizedNormal:
      need(2);
      if (!(params[1] > 0)) bad_param(family, "scale must be positive");
      if (!(shape > 0)) bad_param(family, "shape must be positive");
      break;
    case Family::Beta:
      need(2);
      if (!(params[0] > 0 && params[1] > 0)) bad_param(family, "shapes must be positive");
      break;
    case Family::Poisson:
      need(1);
      if (!(params[0] > 0)) bad_param(family, "rate must be positive");
      break;
    case Family::Uniform:
      need(2);
      if (!(params[0] < params[1])) bad_param(family, "requires lo < hi");
      break;
  }
}

std::size_t poisson_cutoff(double rate, double mass) {
  double term = std::exp(-rate);
  double cum = term;
  std::size_t k = 0;
  // Log-space start for large rates where exp(-rate) underflows.
  if (term == 0.0) {
    double log_cum = -rate;
    for (;;) {
      double log_term = static_cast<double>(k + 1) * std::log(rate) - rate - std::lgamma(k + 2.0);
      ++k;
      log_cum = std::max(log_cum, log_term) + std::log1p(std::exp(-std::abs(log_cum - log_term)));
      if (std::exp(log_cum) >= mass) return k;
      if (k > kMaxPoissonSupport) break;
    }
    fail(ErrorCode::TooLarge, "poisson rate too large for exact enumeration");
  }
  while (cum < mass) {
    ++k;
    term *= rate / static_cast<double>(k);
    cum += term;
    if (k > kMaxPoissonSupport) fail(ErrorCode::TooLarge, "poisson rate too large for exact enumeration");
  }
  return k;
}

double base_draw(Family family, const CounterRng& rng, std::uint64_t counter) {
  switch (family) {
    case Family::Normal: return rng.normal(counter);
    case Family::Uniform:
    case Family::Beta:
    case Family::GeneralizedNormal: return rng.uniform(counter);
    default:
      fail(ErrorCode::NotSupported, std::string(family_name(family)) + " is never sampled");
  }
}

BaseSample sample_base(Family family, std::size_t n, const CounterRng& rng) {
  BaseSample b{family, {}};
  b.u.reserve(n);
  for (std::size_t i = 0; i < n; ++i) b.u.push_back(base_draw(family, rng, i));
  return b;
}

double gen_normal_std_quantile(double u, double shape) {
  const double p = std::abs(2.0 * u - 1.0);
  if (p == 0.0) return 0.0;
  const double g = boost::math::gamma_p_inv(1.0 / shape, p);
  const double z = std::pow(g, 1.0 / shape);
  return u < 0.5 ? -z : z;
}

double beta_quantile(double u, double a, double b) { return boost::math::ibeta_inv(a, b, u); }

double cdf(const DistributionInstance<double>& d, double x) {
  check_params(d);
  const auto& p = d.params;
  switch (d.family) {
    case Family::Normal: return 0.5 * std::erfc(-(x - p[0]) / (p[1] * std::sqrt(2.0)));
    case Family::Uniform:
      if (x <= p[0]) return 0.0;
      if (x >= p[1]) return 1.0;
      return (x - p[0]) / (p[1] - p[0]);
    case Family::Beta:
      if (x <= 0) return 0.0;
      if (x >= 1) return 1.0;
      return boost::math::ibeta(p[0], p[1], x);
    case Family::GeneralizedNormal: {
      const double r = std::abs(x - p[0]) / p[1];
      const double half = 0.5 * boost::math::gamma_p(1.0 / d.shape, std::pow(r, d.shape));
      return x >= p[0] ? 0.5 + half : 0.5 - half;
    }
    default:
      fail(ErrorCode::NotSupported, "cdf is defined for continuous families only");
  }
}

double pdf(const DistributionInstance<double>& d, double x) {
  check_params(d);
  const auto& p = d.params;
  switch (d.family) {
    case Family::Normal: {
      const double z = (x - p[0]) / p[1];
      return std::exp(-0.5 * z * z) / (p[1] * std::sqrt(2.0 * M_PI));
    }
    case Family::Uniform: return (x < p[0] || x > p[1]) ? 0.0 : 1.0 / (p[1] - p[0]);
    case Family::Beta:
      if (x <= 0 || x >= 1) return 0.0;
      return boost::math::ibeta_derivative(p[0], p[1], x);
    case Family::GeneralizedNormal: {
      const double r = std::abs(x - p[0]) / p[1];
      return d.shape / (2.0 * p[1] * std::tgamma(1.0 / d.shape)) * std::exp(-std::pow(r, d.shape));
    }
    default:
      fail(ErrorCode::NotSupported, "pdf is defined for continuous families only");
  }
}

}  // namespace dspl
