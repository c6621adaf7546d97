#pragma once

#include <string>

#include "dspl/autodiff.hpp"
#include "dspl/program.hpp"

namespace dspl {

enum class IndicatorMode { Hard, Soft, StraightThrough };

IndicatorMode mode_from_name(const std::string& name);
std::string mode_name(IndicatorMode m);

struct RelaxationSpec {
  CmpOp op = CmpOp::Gt;
  double beta = 1.0;
  double beta_prime = 1.0;  // equality cases
};

bool hard_indicator(double g, CmpOp op);

// Smooth stand-in for [g op 0] with values in (0, 1):
//   > >= : sigmoid(beta g)        < =< : sigmoid(-beta g)
//   =    : sigmoid(beta g) sigmoid(-beta' g)
//   =\=  : 1 - sigmoid(beta g) sigmoid(-beta' g)
template <class S>
S relax(const S& g, const RelaxationSpec& spec) {
  switch (spec.op) {
    case CmpOp::Gt:
    case CmpOp::Ge: return sigmoid(S(spec.beta) * g);
    case CmpOp::Lt:
    case CmpOp::Le: return sigmoid(S(-spec.beta) * g);
    case CmpOp::Eq: return sigmoid(S(spec.beta) * g) * sigmoid(S(-spec.beta_prime) * g);
    case CmpOp::Ne: return S(1.0) - sigmoid(S(spec.beta) * g) * sigmoid(S(-spec.beta_prime) * g);
  }
  return g;
}

// d relax / d g.
double relax_derivative(double g, const RelaxationSpec& spec);

template <class S>
S indicator(const S& g, const RelaxationSpec& spec, IndicatorMode mode) {
  switch (mode) {
    case IndicatorMode::Hard: return S(hard_indicator(value_of(g), spec.op) ? 1.0 : 0.0);
    case IndicatorMode::Soft: return relax(g, spec);
    case IndicatorMode::StraightThrough: {
      const double h = hard_indicator(value_of(g), spec.op) ? 1.0 : 0.0;
      if constexpr (std::is_same_v<S, Var>) {
        return make_unary(h, g, relax_derivative(g.value(), spec));
      } else {
        return h;
      }
    }
  }
  return g;
}

struct CoolnessSchedule {
  enum class Kind { Constant, Linear, Exponential };
  Kind kind = Kind::Constant;
  double beta0 = 50.0;
  double rate = 1.0;

  std::string to_string() const;
};

// constant: beta0; linear: beta0 + rate * epoch; exponential: beta0 * rate^epoch.
double anneal(const CoolnessSchedule& s, std::size_t epoch);
// "constant:50", "linear:1:2", "exponential:1:2".
CoolnessSchedule parse_schedule(const std::string& text);

}  // namespace dspl
