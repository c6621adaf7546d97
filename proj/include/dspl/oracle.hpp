#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dspl/autodiff.hpp"
#include "dspl/inference.hpp"
#include "dspl/program.hpp"

// Reference implementations for tests and `dspl check`. Nothing here calls
// the grounder, the compiler or the inference engine except fd_gradient,
// which differentiates the engine numerically.
namespace dspl::oracle {

struct Options {
  const ParameterStore* store = nullptr;  // needed when the program has t(...) or networks
  const DataMap* data = nullptr;
  std::size_t max_vars = 16;
  std::size_t depth_limit = 512;
  double tol = 1e-8;
  std::size_t max_evals = 0;  // continuous points visited by probability(); 0 is unbounded
};

struct Result {
  double value = 0.0;
  double error = 0.0;  // 0 for exact sums
  bool exact = true;
};

// Sum over joint assignments of the discrete variables the query touches.
// Errors: NotFinite (continuous variable), TooLarge (more than max_vars).
double enumerate_worlds(const ProgramAst& ast, const Term& query, const Options& opt = {});

// One integration axis: density on [lo, hi] plus the probability mass left
// outside the clipped range.
struct Axis {
  std::function<double(double)> density;
  double lo = 0.0;
  double hi = 1.0;
  double outside_mass = 0.0;
};

// Densities written out from their formulas. Infinite supports are clipped
// at 10 scale units. Errors: NotSupported for discrete families.
Axis density_axis(Family family, std::span<const double> params, double shape = kDefaultGenNormalShape);

// Integral of density(x) * region(x) over one or two axes by adaptive
// Simpson. Errors: NonConvergent.
Result quadrature_prob(std::span<const Axis> axes, const std::function<double(std::span<const double>)>& region,
                       double tol = 1e-8);

// Exact enumeration for discrete variables plus quadrature over at most two
// continuous ones. Errors: TooLarge, NotFinite, NonConvergent.
Result probability(const ProgramAst& ast, const Term& query, const Options& opt = {});

// Central difference of the engine estimate in one raw store entry, with the
// same seed on both sides.
double fd_gradient(const Model& model, const CompiledQuery& q, const ParameterStore& store, const std::string& name,
                   std::size_t index, double h, const InferenceConfig& cfg);

}  // namespace dspl::oracle
