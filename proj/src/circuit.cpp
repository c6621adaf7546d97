#include "dspl/circuit.hpp"

#include <algorithm>
#include <unordered_map>

#include "dspl/error.hpp"

namespace dspl {

bool Circuit::evaluate(const std::vector<bool>& assignment) const {
  std::uint32_t n = root;
  while (!is_terminal(n)) n = assignment.at(atom_at(n)) ? nodes[n].hi : nodes[n].lo;
  return n == kBddTrue;
}

std::vector<std::size_t> default_order(const ProofFormula& f, std::size_t n_atoms,
                                       const std::vector<long>& group_of_atom) {
  std::vector<std::size_t> first;
  std::vector<bool> seen(n_atoms, false);
  for (const auto& c : f.dnf) {
    for (auto l : c) {
      const auto a = literal_atom(l);
      if (!seen.at(a)) {
        seen[a] = true;
        first.push_back(a);
      }
    }
  }
  auto group = [&](std::size_t a) { return a < group_of_atom.size() ? group_of_atom[a] : -1L; };
  std::vector<std::size_t> order;
  std::vector<bool> placed(n_atoms, false);
  for (std::size_t a : first) {
    if (placed[a]) continue;
    const long g = group(a);
    if (g < 0) {
      placed[a] = true;
      order.push_back(a);
      continue;
    }
    for (std::size_t b : first) {
      if (!placed[b] && group(b) == g) {
        placed[b] = true;
        order.push_back(b);
      }
    }
  }
  return order;
}

namespace {

struct NodeKey {
  std::uint32_t level, lo, hi;
  friend bool operator==(const NodeKey&, const NodeKey&) = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const {
    std::uint64_t h = k.level;
    h = h * 0x9E3779B97F4A7C15ULL ^ k.lo;
    h = h * 0x9E3779B97F4A7C15ULL ^ k.hi;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

class Builder {
 public:
  Builder(std::size_t levels, std::size_t cap) : levels_(levels), cap_(cap) {
    nodes_.push_back({static_cast<std::uint32_t>(levels), 0, 0});
    nodes_.push_back({static_cast<std::uint32_t>(levels), 1, 1});
  }

  std::uint32_t mk(std::uint32_t level, std::uint32_t lo, std::uint32_t hi) {
    if (lo == hi) return lo;
    NodeKey k{level, lo, hi};
    auto it = unique_.find(k);
    if (it != unique_.end()) return it->second;
    if (nodes_.size() >= cap_) {
      fail(ErrorCode::SizeExceeded, "circuit exceeds " + std::to_string(cap_) + " nodes");
    }
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({level, lo, hi});
    unique_.emplace(k, id);
    return id;
  }

  std::uint32_t level(std::uint32_t n) const { return nodes_[n].level; }

  std::uint32_t apply(bool is_and, std::uint32_t a, std::uint32_t b) {
    if (is_and) {
      if (a == kBddFalse || b == kBddFalse) return kBddFalse;
      if (a == kBddTrue) return b;
      if (b == kBddTrue) return a;
    } else {
      if (a == kBddTrue || b == kBddTrue) return kBddTrue;
      if (a == kBddFalse) return b;
      if (b == kBddFalse) return a;
    }
    if (a == b) return a;
    if (a > b) std::swap(a, b);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32 | b) * 2 + (is_and ? 1 : 0);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const std::uint32_t la = level(a), lb = level(b);
    const std::uint32_t top = std::min(la, lb);
    const std::uint32_t a0 = la == top ? nodes_[a].lo : a, a1 = la == top ? nodes_[a].hi : a;
    const std::uint32_t b0 = lb == top ? nodes_[b].lo : b, b1 = lb == top ? nodes_[b].hi : b;
    const std::uint32_t lo = apply(is_and, a0, b0);
    const std::uint32_t hi = apply(is_and, a1, b1);
    const std::uint32_t r = mk(top, lo, hi);
    cache_.emplace(key, r);
    return r;
  }

  const std::vector<BddNode>& nodes() const { return nodes_; }

 private:
  std::size_t levels_;
  std::size_t cap_;
  std::vector<BddNode> nodes_;
  std::unordered_map<NodeKey, std::uint32_t, NodeKeyHash> unique_;
  std::unordered_map<std::uint64_t, std::uint32_t> cache_;
};

}  // namespace

Circuit compile(const ProofFormula& f, const std::vector<std::size_t>& order, std::size_t node_cap) {
  std::unordered_map<std::size_t, std::uint32_t> level_of;
  for (std::size_t i = 0; i < order.size(); ++i) level_of[order[i]] = static_cast<std::uint32_t>(i);
  Builder b(order.size(), node_cap);

  std::vector<std::uint32_t> terms;
  for (const auto& c : f.dnf) {
    std::vector<std::pair<std::uint32_t, bool>> lits;
    for (auto l : c) {
      auto it = level_of.find(literal_atom(l));
      if (it == level_of.end()) {
        fail(ErrorCode::ValidationError, "atom " + std::to_string(literal_atom(l)) + " missing from the order");
      }
      lits.emplace_back(it->second, literal_positive(l));
    }
    std::sort(lits.begin(), lits.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    std::uint32_t n = kBddTrue;
    for (const auto& [lvl, pos] : lits) n = pos ? b.mk(lvl, kBddFalse, n) : b.mk(lvl, n, kBddFalse);
    terms.push_back(n);
  }
  // Pairwise disjunction keeps intermediate diagrams small.
  while (terms.size() > 1) {
    std::vector<std::uint32_t> next;
    for (std::size_t i = 0; i + 1 < terms.size(); i += 2) next.push_back(b.apply(false, terms[i], terms[i + 1]));
    if (terms.size() % 2) next.push_back(terms.back());
    terms = std::move(next);
  }
  const std::uint32_t root = terms.empty() ? kBddFalse : terms.front();

  // Post-order renumbering of the reachable part.
  Circuit c;
  c.order = order;
  c.nodes.push_back({static_cast<std::uint32_t>(order.size()), 0, 0});
  c.nodes.push_back({static_cast<std::uint32_t>(order.size()), 1, 1});
  std::unordered_map<std::uint32_t, std::uint32_t> renum{{kBddFalse, kBddFalse}, {kBddTrue, kBddTrue}};
  std::vector<std::pair<std::uint32_t, bool>> stack{{root, false}};
  while (!stack.empty()) {
    auto [n, expanded] = stack.back();
    stack.pop_back();
    if (renum.count(n)) continue;
    const BddNode& src = b.nodes()[n];
    if (!expanded) {
      stack.push_back({n, true});
      stack.push_back({src.hi, false});
      stack.push_back({src.lo, false});
      continue;
    }
    renum[n] = static_cast<std::uint32_t>(c.nodes.size());
    c.nodes.push_back({src.level, renum.at(src.lo), renum.at(src.hi)});
  }
  c.root = renum.at(root);
  return c;
}

std::vector<PartialAssignment> model_enumerate(const Circuit& c) {
  if (c.order.size() > 20) fail(ErrorCode::TooLarge, "model enumeration is limited to 20 atoms");
  std::vector<PartialAssignment> out;
  PartialAssignment path;
  std::function<void(std::uint32_t)> dfs = [&](std::uint32_t n) {
    if (n == kBddFalse) return;
    if (n == kBddTrue) {
      out.push_back(path);
      return;
    }
    const auto atom = c.atom_at(n);
    path.emplace_back(atom, false);
    dfs(c.nodes[n].lo);
    path.back().second = true;
    dfs(c.nodes[n].hi);
    path.pop_back();
  };
  dfs(c.root);
  return out;
}

std::string to_dot(const Circuit& c, const std::function<std::string(std::size_t)>& atom_label) {
  auto escape = [](const std::string& s) {
    std::string out;
    for (char ch : s) {
      if (ch == '"' || ch == '\\') out += '\\';
      out += ch;
    }
    return out;
  };
  std::string out = "digraph circuit {\n";
  out += "  n0 [shape=box,label=\"0\"];\n  n1 [shape=box,label=\"1\"];\n";
  for (std::size_t i = 2; i < c.nodes.size(); ++i) {
    const auto& n = c.nodes[i];
    out += "  n" + std::to_string(i) + " [label=\"" + escape(atom_label(c.order[n.level])) + "\"];\n";
    out += "  n" + std::to_string(i) + " -> n" + std::to_string(n.lo) + " [style=dashed];\n";
    out += "  n" + std::to_string(i) + " -> n" + std::to_string(n.hi) + ";\n";
  }
  out += "}\n";
  return out;
}

}  // namespace dspl
