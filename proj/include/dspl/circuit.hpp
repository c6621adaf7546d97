#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dspl/grounder.hpp"

namespace dspl {

inline constexpr std::uint32_t kBddFalse = 0;
inline constexpr std::uint32_t kBddTrue = 1;

struct BddNode {
  std::uint32_t level = 0;  // index into Circuit::order
  std::uint32_t lo = 0;     // atom false
  std::uint32_t hi = 0;     // atom true

  friend bool operator==(const BddNode&, const BddNode&) = default;
};

// Reduced ordered BDD. Nodes 0 and 1 are the terminals; decision nodes are
// numbered in post-order from the root, so equal formulas under equal
// orders give identical tables.
struct Circuit {
  std::vector<BddNode> nodes;
  std::uint32_t root = kBddFalse;
  std::vector<std::size_t> order;  // level -> atom id

  static bool is_terminal(std::uint32_t n) { return n <= kBddTrue; }
  std::size_t decision_count() const { return nodes.size() - 2; }
  std::size_t atom_at(std::uint32_t node) const { return order[nodes[node].level]; }
  // Assignment indexed by atom id.
  bool evaluate(const std::vector<bool>& assignment) const;
};

inline constexpr std::size_t kDefaultNodeCap = 1'000'000;

// First appearance in the DNF; atoms sharing a non-negative group id are
// pulled together at the position of the group's first member.
std::vector<std::size_t> default_order(const ProofFormula& f, std::size_t n_atoms,
                                       const std::vector<long>& group_of_atom = {});

// Errors: SizeExceeded.
Circuit compile(const ProofFormula& f, const std::vector<std::size_t>& order, std::size_t node_cap = kDefaultNodeCap);

using PartialAssignment = std::vector<std::pair<std::size_t, bool>>;  // (atom, value)
// Disjoint cubes covering exactly the models. Errors: TooLarge above 20 atoms.
std::vector<PartialAssignment> model_enumerate(const Circuit& c);

std::string to_dot(const Circuit& c, const std::function<std::string(std::size_t)>& atom_label);

}  // namespace dspl
