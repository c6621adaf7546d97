#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

namespace dspl {

enum class Family { Bernoulli, Categorical, Normal, Beta, Poisson, GeneralizedNormal, Uniform };

enum class SupportKind { FiniteDiscrete, CountableDiscrete, Continuous };

enum class ParamConstraint { None, Positive, Unit };

std::optional<Family> family_from_name(std::string_view name);
std::string_view family_name(Family f);
SupportKind support_kind(Family f);
inline bool is_discrete(Family f) { return support_kind(f) != SupportKind::Continuous; }

// Number of scalar parameter slots. Categorical is special-cased by callers
// (probability vector + optional value list).
std::size_t family_arity(Family f);

// Constraint of a scalar slot, used when a learnable source feeds it directly.
ParamConstraint slot_constraint(Family f, std::size_t slot);

inline constexpr double kDefaultGenNormalShape = 4.0;

}  // namespace dspl
