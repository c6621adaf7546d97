#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dspl/family.hpp"
#include "dspl/program.hpp"
#include "dspl/term.hpp"

namespace dspl {

struct GroundRandomVariable {
  std::string id;  // "<head>" or "<head>[j]" for component j of a vector fact
  Term head;
  Family family = Family::Normal;
  std::vector<Term> params;  // ground parameter terms as declared
  double shape = kDefaultGenNormalShape;
  std::size_t component = 0;
  std::size_t n_components = 1;

  SupportKind kind() const { return support_kind(family); }
};

// Canonical comparison `g op 0` with op in {>, >=, =}. Negated literals
// cover <, =< and =\=.
struct GroundPcfAtom {
  Term g;
  CmpOp op = CmpOp::Gt;
  std::vector<std::size_t> owners;  // random-variable indices, ascending
  // Depends on learnable parameters, networks or #data values.
  bool needs_context = false;
  std::string key;
};

// +(atom + 1) for the atom, -(atom + 1) for its negation.
using SignedLiteral = int;
using Conjunction = std::vector<SignedLiteral>;  // sorted by atom, no duplicates

inline std::size_t literal_atom(SignedLiteral l) { return static_cast<std::size_t>(l < 0 ? -l : l) - 1; }
inline bool literal_positive(SignedLiteral l) { return l > 0; }
inline SignedLiteral make_literal(std::size_t atom, bool positive) {
  const int v = static_cast<int>(atom) + 1;
  return positive ? v : -v;
}

struct ProofFormula {
  std::vector<Conjunction> dnf;

  bool is_false() const { return dnf.empty(); }
  bool is_true() const;
  // Truth under a total assignment indexed by atom.
  bool evaluate(const std::vector<bool>& assignment) const;
};

// Conjunction of two sorted conjunctions; false when they clash.
bool conjoin(const Conjunction& a, const Conjunction& b, Conjunction& out);
// Adds `c` unless subsumed, dropping conjunctions it subsumes. Returns true
// when the DNF changed.
bool add_absorbing(std::vector<Conjunction>& dnf, Conjunction c);
std::vector<Conjunction> negate_dnf(const std::vector<Conjunction>& dnf);

struct GroundConfig {
  std::size_t depth_limit = 512;
  // Used to fold comparisons over #data constants at grounding time.
  const DataMap* data = nullptr;
};

struct GroundResult {
  Term query;  // first answer instance
  ProofFormula formula;
  std::vector<GroundPcfAtom> atoms;
  std::vector<GroundRandomVariable> rvs;
  std::map<std::string, std::vector<std::size_t>> rv_by_term;  // reference text -> components

  std::string literal_text(SignedLiteral l) const;
};

// Errors: DepthExceeded, UnboundComparison, NonStratifiedNegation,
// UnknownFunction, DomainError.
GroundResult ground_query(const ProgramAst& ast, const Term& query, const GroundConfig& cfg = {});
GroundResult ground_query(const ProgramAst& ast, const LogicProgram& lp, const Term& query,
                          const GroundConfig& cfg = {});

nlohmann::json formula_to_json(const GroundResult& g);

}  // namespace dspl
