#include "dspl/family.hpp"

namespace dspl {

std::optional<Family> family_from_name(std::string_view name) {
  if (name == "bernoulli") return Family::Bernoulli;
  if (name == "categorical") return Family::Categorical;
  if (name == "normal") return Family::Normal;
  if (name == "beta") return Family::Beta;
  if (name == "poisson") return Family::Poisson;
  if (name == "generalized_normal") return Family::GeneralizedNormal;
  if (name == "uniform") return Family::Uniform;
  return std::nullopt;
}

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Bernoulli: return "bernoulli";
    case Family::Categorical: return "categorical";
    case Family::Normal: return "normal";
    case Family::Beta: return "beta";
    case Family::Poisson: return "poisson";
    case Family::GeneralizedNormal: return "generalized_normal";
    case Family::Uniform: return "uniform";
  }
  return "?";
}

SupportKind support_kind(Family f) {
  switch (f) {
    case Family::Bernoulli:
    case Family::Categorical: return SupportKind::FiniteDiscrete;
    case Family::Poisson: return SupportKind::CountableDiscrete;
    default: return SupportKind::Continuous;
  }
}

std::size_t family_arity(Family f) {
  switch (f) {
    case Family::Bernoulli:
    case Family::Poisson: return 1;
    case Family::Categorical: return 1;
    case Family::Normal:
    case Family::Beta:
    case Family::Uniform:
    case Family::GeneralizedNormal: return 2;
  }
  return 0;
}

ParamConstraint slot_constraint(Family f, std::size_t slot) {
  switch (f) {
    case Family::Bernoulli: return ParamConstraint::Unit;
    case Family::Categorical: return ParamConstraint::Positive;
    case Family::Normal:
    case Family::GeneralizedNormal: return slot >= 1 ? ParamConstraint::Positive : ParamConstraint::None;
    case Family::Beta:
    case Family::Poisson: return ParamConstraint::Positive;
    case Family::Uniform: return ParamConstraint::None;
  }
  return ParamConstraint::None;
}

}  // namespace dspl
