#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dspl/autodiff.hpp"
#include "dspl/circuit.hpp"
#include "dspl/distributions.hpp"
#include "dspl/grounder.hpp"
#include "dspl/numeric.hpp"
#include "dspl/program.hpp"
#include "dspl/relax.hpp"

namespace dspl {

// A parsed program with everything inference needs besides parameters.
struct Model {
  ProgramAst ast;
  LogicProgram lp;
  std::map<std::string, LearnableParam> learnables;
  DataMap data;

  static Model from_ast(ProgramAst ast, DataMap data = {});
  // #data paths resolve against `base_dir`.
  static Model from_source(std::string_view source, const std::string& base_dir = "");
  static Model load(const std::string& path);
};

struct InferenceConfig {
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
  IndicatorMode mode = IndicatorMode::Hard;
  double beta = 50.0;
  double beta_prime = 0.0;  // <= 0 means "same as beta"
  std::map<std::string, double> atom_beta;  // keyed by GroundPcfAtom::key
  std::size_t threads = 1;
  std::size_t chunk_size = 256;

  RelaxationSpec spec_for(const GroundPcfAtom& atom) const;
};

struct QueryResult {
  std::string query;
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  IndicatorMode mode = IndicatorMode::Hard;
  std::uint64_t seed = 0;
  bool exact = false;  // nothing was sampled
  double discrete_exact_fraction = 0.0;
  std::vector<std::string> warnings;
};

struct GradResult {
  QueryResult result;
  Gradients gradients;  // every store entry, zero when unused
};

// Compiled numeric expression g over random variables. Subterms without
// random variables are evaluated once per query evaluation ("pool").
struct GExpr {
  enum class Kind { Const, Rv, Pool, List, Op };
  Kind kind = Kind::Const;
  double constant = 0.0;
  std::vector<std::size_t> rvs;
  std::size_t pool = 0;
  Builtin op = Builtin::Add;
  std::vector<GExpr> args;
};

struct CompiledQuery {
  struct Block {
    std::vector<std::size_t> rvs;    // discrete random variables, jointly enumerated
    std::vector<std::size_t> atoms;  // contiguous in the circuit order
    bool mixed = false;              // some atom also reads a continuous variable
  };

  GroundResult ground;
  Circuit circuit;
  std::vector<long> atom_block;  // -1 when the atom reads no discrete variable
  std::vector<long> atom_local;  // position within its block
  std::vector<Block> blocks;
  std::vector<std::size_t> continuous_rvs;
  std::vector<std::size_t> sampled_atoms;  // only continuous owners
  std::vector<std::size_t> context_atoms;  // no owners (parameters only)
  std::vector<GExpr> g;
  std::vector<Term> pool_terms;

  bool exact() const { return continuous_rvs.empty(); }
};

inline constexpr std::size_t kMaxJointRows = 10000;

CompiledQuery compile_query(const Model& model, const Term& query, const GroundConfig& cfg = {},
                            std::size_t node_cap = kDefaultNodeCap);

// Errors: MixedAtomUnsupported, NumericError, DomainError, TooLarge.
QueryResult infer(const Model& model, const CompiledQuery& q, const ParameterStore& store,
                  const InferenceConfig& cfg);
// Forward value equals infer() on the same seed; gradients are averaged over
// the same samples.
GradResult grad_query(const Model& model, const CompiledQuery& q, const ParameterStore& store,
                      const InferenceConfig& cfg);

nlohmann::json result_to_json(const QueryResult& r);

// Distribution of every ground random variable of the query, parameters
// resolved against `store`.
std::vector<DistributionInstance<double>> resolve_distributions(const Model& model, const CompiledQuery& q,
                                                                const ParameterStore& store);

// Weighted evaluation with explicit inputs: each table lists the joint rows
// of a group of atoms (contiguous in the order); remaining atoms take values
// in [0, 1] from `atom_values`. Errors: InconsistentEncoding.
struct DiscreteTable {
  std::vector<std::size_t> atoms;
  std::vector<double> probs;
  std::vector<std::vector<bool>> truth;  // [row][atom in table]
};
double evaluate_circuit_weighted(const Circuit& c, const std::vector<DiscreteTable>& tables,
                                 const std::map<std::size_t, double>& atom_values);

}  // namespace dspl
