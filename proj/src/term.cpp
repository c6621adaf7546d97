#include "dspl/term.hpp"

#include <charconv>
#include <cctype>
#include <cmath>

namespace dspl {

Term Term::symbol(std::string name) {
  Term t;
  t.kind = Kind::Symbol;
  t.name = std::move(name);
  return t;
}

Term Term::num(double value) {
  Term t;
  t.kind = Kind::Number;
  t.number = value;
  return t;
}

Term Term::variable(std::string name) {
  Term t;
  t.kind = Kind::Variable;
  t.name = std::move(name);
  return t;
}

Term Term::compound(std::string functor, std::vector<Term> args) {
  if (args.empty()) return symbol(std::move(functor));
  Term t;
  t.kind = Kind::Compound;
  t.name = std::move(functor);
  t.args = std::move(args);
  return t;
}

Term Term::numeric_func(std::string functor, std::vector<Term> args) {
  Term t;
  t.kind = Kind::NumericFunc;
  t.name = std::move(functor);
  t.args = std::move(args);
  return t;
}

Term Term::list(std::vector<Term> items) {
  Term t;
  t.kind = Kind::List;
  t.args = std::move(items);
  return t;
}

std::string predicate_key(const std::string& name, std::size_t arity) {
  return name + "/" + std::to_string(arity);
}

std::string predicate_key(const Term& t) { return predicate_key(t.name, t.arity()); }

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

bool is_plain_symbol(const std::string& name) {
  if (name.empty() || !std::islower(static_cast<unsigned char>(name[0]))) return false;
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

namespace {

void append_quoted(std::string& out, const std::string& name) {
  out += '\'';
  for (char c : name) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  out += '\'';
}

void append_term(std::string& out, const Term& t) {
  switch (t.kind) {
    case Term::Kind::Number:
      out += format_number(t.number);
      return;
    case Term::Kind::Variable:
      out += t.name;
      return;
    case Term::Kind::Symbol:
      if (is_plain_symbol(t.name)) out += t.name;
      else append_quoted(out, t.name);
      return;
    case Term::Kind::Compound:
    case Term::Kind::NumericFunc:
      if (is_plain_symbol(t.name)) out += t.name;
      else append_quoted(out, t.name);
      out += '(';
      for (std::size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ", ";
        append_term(out, t.args[i]);
      }
      out += ')';
      return;
    case Term::Kind::List:
      out += '[';
      for (std::size_t i = 0; i < t.args.size(); ++i) {
        if (i) out += ", ";
        append_term(out, t.args[i]);
      }
      out += ']';
      return;
  }
}

bool same_functor(const Term& a, const Term& b) {
  bool a_call = a.kind == Term::Kind::Compound || a.kind == Term::Kind::NumericFunc;
  bool b_call = b.kind == Term::Kind::Compound || b.kind == Term::Kind::NumericFunc;
  if (a_call && b_call) return a.name == b.name && a.args.size() == b.args.size();
  if (a.kind != b.kind) return false;
  if (a.kind == Term::Kind::List) return a.args.size() == b.args.size();
  return false;
}

}  // namespace

std::string to_string(const Term& t) {
  std::string out;
  append_term(out, t);
  return out;
}

bool is_ground(const Term& t) {
  if (t.kind == Term::Kind::Variable) return false;
  for (const auto& a : t.args) {
    if (!is_ground(a)) return false;
  }
  return true;
}

void collect_variables(const Term& t, std::vector<std::string>& out) {
  if (t.kind == Term::Kind::Variable) {
    for (const auto& v : out) {
      if (v == t.name) return;
    }
    out.push_back(t.name);
    return;
  }
  for (const auto& a : t.args) collect_variables(a, out);
}

const Term& walk(const Term& t, const Bindings& b) {
  const Term* cur = &t;
  while (cur->kind == Term::Kind::Variable) {
    auto it = b.find(cur->name);
    if (it == b.end()) break;
    cur = &it->second;
  }
  return *cur;
}

Term substitute(const Term& t, const Bindings& b) {
  const Term& w = walk(t, b);
  if (w.args.empty()) return w;
  Term out = w;
  for (auto& a : out.args) a = substitute(a, b);
  return out;
}

bool unify(const Term& a, const Term& b, Bindings& bindings) {
  const Term& x = walk(a, bindings);
  const Term& y = walk(b, bindings);
  if (x.kind == Term::Kind::Variable && y.kind == Term::Kind::Variable && x.name == y.name) {
    return true;
  }
  if (x.kind == Term::Kind::Variable) {
    bindings[x.name] = y;
    return true;
  }
  if (y.kind == Term::Kind::Variable) {
    bindings[y.name] = x;
    return true;
  }
  if (x.kind == Term::Kind::Number || y.kind == Term::Kind::Number) {
    return x.kind == y.kind && x.number == y.number;
  }
  if (x.kind == Term::Kind::Symbol || y.kind == Term::Kind::Symbol) {
    return x.kind == y.kind && x.name == y.name;
  }
  if (!same_functor(x, y)) return false;
  // Element references survive rehashing and bound entries are never
  // overwritten, so x and y stay valid while arguments are unified.
  for (std::size_t i = 0; i < x.args.size(); ++i) {
    if (!unify(x.args[i], y.args[i], bindings)) return false;
  }
  return true;
}

Term rename_variables(const Term& t, const std::string& suffix) {
  if (t.kind == Term::Kind::Variable) return Term::variable(t.name + suffix);
  if (t.args.empty()) return t;
  Term out = t;
  for (auto& a : out.args) a = rename_variables(a, suffix);
  return out;
}

namespace {

Term canonical_rec(const Term& t, std::unordered_map<std::string, std::string>& names) {
  if (t.kind == Term::Kind::Variable) {
    auto it = names.find(t.name);
    if (it == names.end()) {
      it = names.emplace(t.name, "_V" + std::to_string(names.size())).first;
    }
    return Term::variable(it->second);
  }
  if (t.args.empty()) return t;
  Term out = t;
  for (auto& a : out.args) a = canonical_rec(a, names);
  return out;
}

}  // namespace

Term canonical_variant(const Term& t) {
  std::unordered_map<std::string, std::string> names;
  return canonical_rec(t, names);
}

}  // namespace dspl
