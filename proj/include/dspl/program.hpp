#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dspl/error.hpp"
#include "dspl/family.hpp"
#include "dspl/term.hpp"

namespace dspl {

enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };

std::string_view cmp_op_text(CmpOp op);
// Logical complement: not(a < b) == (a >= b), etc.
CmpOp complement(CmpOp op);

struct Literal {
  enum class Kind { Positive, Negated, Comparison };

  Kind kind = Kind::Positive;
  Term atom;  // Positive / Negated
  CmpOp op = CmpOp::Eq;
  Term lhs, rhs;  // Comparison

  static Literal positive(Term atom);
  static Literal negated(Term atom);
  static Literal comparison(Term lhs, CmpOp op, Term rhs);

  friend bool operator==(const Literal&, const Literal&) = default;
};

struct Clause {
  Term head;
  std::vector<Literal> body;
  // `P :: head :- body` annotation.
  std::optional<Term> probability;

  friend bool operator==(const Clause&, const Clause&) = default;
};

struct DistFactDecl {
  Term head;
  std::string family;
  std::vector<Term> params;

  friend bool operator==(const DistFactDecl&, const DistFactDecl&) = default;
};

struct ParamDecl {
  std::string name;
  std::vector<std::size_t> shape;  // empty for scalars
  std::vector<double> init;        // constrained-space initial values

  friend bool operator==(const ParamDecl&, const ParamDecl&) = default;
};

enum class Activation { Relu, Tanh, Sigmoid };
enum class OutputActivation { Linear, Sigmoid, Softmax };

struct NetworkDecl {
  std::string name;
  std::vector<std::size_t> arch;  // [in, hidden..., out]
  Activation act = Activation::Relu;
  OutputActivation out = OutputActivation::Linear;

  std::size_t input_size() const { return arch.front(); }
  std::size_t output_size() const { return arch.back(); }

  friend bool operator==(const NetworkDecl&, const NetworkDecl&) = default;
};

struct DataBinding {
  std::string name;
  std::string path;

  friend bool operator==(const DataBinding&, const DataBinding&) = default;
};

struct ProgramAst {
  std::vector<ParamDecl> params;
  std::vector<NetworkDecl> networks;
  std::vector<DataBinding> data;
  std::vector<DistFactDecl> dist_facts;
  std::vector<Clause> clauses;
  std::vector<Term> queries;

  const NetworkDecl* find_network(const std::string& name) const;
  const ParamDecl* find_param(const std::string& name) const;
  bool has_dist_predicate(const std::string& name, std::size_t arity) const;

  friend bool operator==(const ProgramAst&, const ProgramAst&) = default;
};

// Throws Error{SyntaxError|ValidationError} with a source position.
ProgramAst parse(std::string_view source);
// Parses a single term, e.g. a query template from a dataset line.
Term parse_term(std::string_view source);
std::string pretty_print(const ProgramAst& ast);
std::string to_string(const Literal& lit);


struct LearnableParam {
  std::vector<std::size_t> shape;
  std::vector<double> init;  // constrained space
  ParamConstraint constraint = ParamConstraint::None;
};

// Every t(name) reference plus #param declarations. Constraint comes from the
// slot a bare t(name) occupies: scale/rate/shape slots are positive,
// probability slots are unit-interval.
std::map<std::string, LearnableParam> collect_learnable_params(const ProgramAst& ast);

double constrain(double raw, ParamConstraint c);
double unconstrain(double value, ParamConstraint c);

// Numeric builtins, name -> arity.
const std::map<std::string, std::size_t>& numeric_builtins();

// Annotated clauses become an auxiliary Bernoulli fact per ground instance
// plus a rule guarded by `aux =:= 1`.
struct LogicProgram {
  std::vector<Clause> rules;  // probability always empty
  std::vector<DistFactDecl> dist_facts;
  std::map<std::string, std::vector<std::size_t>> rules_by_pred;
  std::map<std::string, std::vector<std::size_t>> dist_by_pred;

  bool is_dist_predicate(const Term& t) const;
};

LogicProgram desugar(const ProgramAst& ast);

// name -> numeric vector, loaded from the JSON array files named by #data.
using DataMap = std::map<std::string, std::vector<double>>;
DataMap load_data_bindings(const ProgramAst& ast, const std::string& base_dir);

}  // namespace dspl
