#include "dspl/relax.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "dspl/error.hpp"

namespace dspl {

IndicatorMode mode_from_name(const std::string& name) {
  if (name == "hard") return IndicatorMode::Hard;
  if (name == "soft") return IndicatorMode::Soft;
  if (name == "st" || name == "straight_through") return IndicatorMode::StraightThrough;
  fail(ErrorCode::ValidationError, "unknown mode '" + name + "' (hard, soft, st)");
}

std::string mode_name(IndicatorMode m) {
  switch (m) {
    case IndicatorMode::Hard: return "hard";
    case IndicatorMode::Soft: return "soft";
    case IndicatorMode::StraightThrough: return "st";
  }
  return "hard";
}

bool hard_indicator(double g, CmpOp op) {
  switch (op) {
    case CmpOp::Gt: return g > 0;
    case CmpOp::Ge: return g >= 0;
    case CmpOp::Lt: return g < 0;
    case CmpOp::Le: return g <= 0;
    case CmpOp::Eq: return g == 0;
    case CmpOp::Ne: return g != 0;
  }
  return false;
}

double relax_derivative(double g, const RelaxationSpec& spec) {
  auto dsig = [](double s) { return s * (1.0 - s); };
  const double a = sigmoid(spec.beta * g);
  switch (spec.op) {
    case CmpOp::Gt:
    case CmpOp::Ge: return spec.beta * dsig(a);
    case CmpOp::Lt:
    case CmpOp::Le: {
      const double s = sigmoid(-spec.beta * g);
      return -spec.beta * dsig(s);
    }
    case CmpOp::Eq:
    case CmpOp::Ne: {
      const double b = sigmoid(-spec.beta_prime * g);
      const double d = spec.beta * dsig(a) * b - spec.beta_prime * dsig(b) * a;
      return spec.op == CmpOp::Eq ? d : -d;
    }
  }
  return 0.0;
}

std::string CoolnessSchedule::to_string() const {
  std::ostringstream s;
  switch (kind) {
    case Kind::Constant: s << "constant:" << beta0; break;
    case Kind::Linear: s << "linear:" << beta0 << ":" << rate; break;
    case Kind::Exponential: s << "exponential:" << beta0 << ":" << rate; break;
  }
  return s.str();
}

double anneal(const CoolnessSchedule& s, std::size_t epoch) {
  const double e = static_cast<double>(epoch);
  switch (s.kind) {
    case CoolnessSchedule::Kind::Constant: return s.beta0;
    case CoolnessSchedule::Kind::Linear: return s.beta0 + s.rate * e;
    case CoolnessSchedule::Kind::Exponential: return s.beta0 * std::pow(s.rate, e);
  }
  return s.beta0;
}

CoolnessSchedule parse_schedule(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(ErrorCode::ValidationError, "bad number '" + s + "' in schedule '" + text + "'");
    }
  };
  CoolnessSchedule out;
  if (parts[0] == "constant" && parts.size() == 2) {
    out.kind = CoolnessSchedule::Kind::Constant;
    out.beta0 = number(parts[1]);
  } else if (parts[0] == "linear" && parts.size() == 3) {
    out.kind = CoolnessSchedule::Kind::Linear;
    out.beta0 = number(parts[1]);
    out.rate = number(parts[2]);
    if (out.rate < 0) fail(ErrorCode::ValidationError, "linear schedule needs a non-negative rate");
  } else if (parts[0] == "exponential" && parts.size() == 3) {
    out.kind = CoolnessSchedule::Kind::Exponential;
    out.beta0 = number(parts[1]);
    out.rate = number(parts[2]);
    if (out.rate < 1) fail(ErrorCode::ValidationError, "exponential schedule needs a rate >= 1");
  } else {
    fail(ErrorCode::ValidationError, "schedule must be constant:B, linear:B:R or exponential:B:R");
  }
  if (!(out.beta0 > 0)) fail(ErrorCode::ValidationError, "coolness must be positive");
  return out;
}

}  // namespace dspl
