#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace dspl {

// Logic term. NumericFunc is a compound sitting in a numeric position whose
// functor resolves to a builtin, a declared network or the learnable-parameter
// reference `t/1`.
struct Term {
  enum class Kind : std::uint8_t { Symbol, Number, Variable, Compound, NumericFunc, List };

  Kind kind = Kind::Symbol;
  std::string name;
  double number = 0.0;
  std::vector<Term> args;

  static Term symbol(std::string name);
  static Term num(double value);
  static Term variable(std::string name);
  static Term compound(std::string functor, std::vector<Term> args);
  static Term numeric_func(std::string functor, std::vector<Term> args);
  static Term list(std::vector<Term> items);

  bool is_symbol() const { return kind == Kind::Symbol; }
  bool is_number() const { return kind == Kind::Number; }
  bool is_variable() const { return kind == Kind::Variable; }
  bool is_list() const { return kind == Kind::List; }
  bool is_callable() const {
    return kind == Kind::Symbol || kind == Kind::Compound || kind == Kind::NumericFunc;
  }
  // Symbols count as zero-arity callables.
  std::size_t arity() const { return is_callable() ? args.size() : 0; }

  friend bool operator==(const Term&, const Term&) = default;
};

// "name/arity" key of a callable term.
std::string predicate_key(const Term& t);
std::string predicate_key(const std::string& name, std::size_t arity);

std::string to_string(const Term& t);
std::string format_number(double value);
// True when `name` can be written without quotes.
bool is_plain_symbol(const std::string& name);

bool is_ground(const Term& t);
void collect_variables(const Term& t, std::vector<std::string>& out);

using Bindings = std::unordered_map<std::string, Term>;

// Follows variable bindings at the top level only.
const Term& walk(const Term& t, const Bindings& b);
// Applies bindings recursively.
Term substitute(const Term& t, const Bindings& b);
bool unify(const Term& a, const Term& b, Bindings& bindings);
// Appends `suffix` to every variable name.
Term rename_variables(const Term& t, const std::string& suffix);
// Renames variables to _V0, _V1, ... in order of first appearance.
Term canonical_variant(const Term& t);

}  // namespace dspl
