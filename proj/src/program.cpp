#include "dspl/program.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dspl {

std::string_view cmp_op_text(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "=<";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Eq: return "=:=";
    case CmpOp::Ne: return "=\\=";
  }
  return "?";
}

CmpOp complement(CmpOp op) {
  switch (op) {
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Ge: return CmpOp::Lt;
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
  }
  return op;
}

Literal Literal::positive(Term atom) {
  Literal l;
  l.kind = Kind::Positive;
  l.atom = std::move(atom);
  return l;
}

Literal Literal::negated(Term atom) {
  Literal l;
  l.kind = Kind::Negated;
  l.atom = std::move(atom);
  return l;
}

Literal Literal::comparison(Term lhs, CmpOp op, Term rhs) {
  Literal l;
  l.kind = Kind::Comparison;
  l.lhs = std::move(lhs);
  l.op = op;
  l.rhs = std::move(rhs);
  return l;
}

const NetworkDecl* ProgramAst::find_network(const std::string& name) const {
  for (const auto& n : networks) {
    if (n.name == name) return &n;
  }
  return nullptr;
}

const ParamDecl* ProgramAst::find_param(const std::string& name) const {
  for (const auto& p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

bool ProgramAst::has_dist_predicate(const std::string& name, std::size_t arity) const {
  for (const auto& d : dist_facts) {
    if (d.head.name == name && d.head.arity() == arity) return true;
  }
  return false;
}

const std::map<std::string, std::size_t>& numeric_builtins() {
  static const std::map<std::string, std::size_t> table = {
      {"add", 2}, {"sub", 2}, {"mul", 2}, {"div", 2}, {"neg", 1},
      {"abs", 1}, {"squared_distance", 2}, {"distance", 2}, {"exp", 1}, {"log", 1},
  };
  return table;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok {
  Name,      // lowercase identifier or quoted atom
  Var,       // Uppercase or _ identifier
  Number,
  String,    // "..."
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Period,
  Neck,      // :-
  Annot,     // ::
  Tilde,     // ~
  Naf,       // \+
  Cmp,       // one of the six comparison operators
  Equals,    // = (directives only)
  Hash,      // #
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  CmpOp op = CmpOp::Eq;
  SourcePos pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.pos = {line_, col_};
      if (at_end()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      lex_one(t);
      out.push_back(std::move(t));
    }
  }

 private:
  bool at_end() const { return i_ >= src_.size(); }
  char peek(std::size_t k = 0) const { return i_ + k < src_.size() ? src_[i_ + k] : '\0'; }

  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorCode::SyntaxError, msg, {line_, col_});
  }

  void skip_space() {
    while (!at_end()) {
      char c = peek();
      if (c == '%') {
        while (!at_end() && peek() != '\n') advance();
      } else if (c == '/' && peek(1) == '*') {
        advance();
        advance();
        while (!(peek() == '*' && peek(1) == '/')) {
          if (at_end()) error("unterminated block comment");
          advance();
        }
        advance();
        advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  void lex_number(Token& t) {
    std::size_t start = i_;
    if (peek() == '-') advance();
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (std::isdigit(static_cast<unsigned char>(peek(1))) ||
         ((peek(1) == '+' || peek(1) == '-') && std::isdigit(static_cast<unsigned char>(peek(2)))))) {
      advance();
      if (peek() == '+' || peek() == '-') advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    std::string_view text = src_.substr(start, i_ - start);
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value)) {
      fail(ErrorCode::SyntaxError, "invalid number '" + std::string(text) + "'", t.pos);
    }
    t.kind = Tok::Number;
    t.number = value;
    t.text = std::string(text);
  }

  std::string lex_quoted(char quote) {
    advance();
    std::string out;
    for (;;) {
      if (at_end()) error("unterminated quoted text");
      char c = peek();
      if (c == '\n') error("newline in quoted text");
      if (c == quote) {
        advance();
        return out;
      }
      if (c == '\\') {
        advance();
        if (at_end()) error("unterminated escape");
        out += peek();
        advance();
        continue;
      }
      out += c;
      advance();
    }
  }

  void lex_one(Token& t) {
    char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      lex_number(t);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i_;
      while (ident_char(peek())) advance();
      t.text = std::string(src_.substr(start, i_ - start));
      t.kind = (std::isupper(static_cast<unsigned char>(c)) || c == '_') ? Tok::Var : Tok::Name;
      return;
    }
    if (c == '\'') {
      t.kind = Tok::Name;
      t.text = lex_quoted('\'');
      if (t.text.empty()) fail(ErrorCode::SyntaxError, "empty quoted atom", t.pos);
      return;
    }
    if (c == '"') {
      t.kind = Tok::String;
      t.text = lex_quoted('"');
      return;
    }
    auto take = [&](Tok kind, std::size_t n) {
      t.kind = kind;
      t.text = std::string(src_.substr(i_, n));
      for (std::size_t k = 0; k < n; ++k) advance();
    };
    auto cmp = [&](CmpOp op, std::size_t n) {
      take(Tok::Cmp, n);
      t.op = op;
    };
    switch (c) {
      case '(': return take(Tok::LParen, 1);
      case ')': return take(Tok::RParen, 1);
      case '[': return take(Tok::LBracket, 1);
      case ']': return take(Tok::RBracket, 1);
      case ',': return take(Tok::Comma, 1);
      case '.': return take(Tok::Period, 1);
      case '~': return take(Tok::Tilde, 1);
      case '#': return take(Tok::Hash, 1);
      case ':':
        if (peek(1) == '-') return take(Tok::Neck, 2);
        if (peek(1) == ':') return take(Tok::Annot, 2);
        break;
      case '\\':
        if (peek(1) == '+') return take(Tok::Naf, 2);
        break;
      case '<': return cmp(CmpOp::Lt, 1);
      case '>':
        if (peek(1) == '=') return cmp(CmpOp::Ge, 2);
        return cmp(CmpOp::Gt, 1);
      case '=':
        if (peek(1) == '<') return cmp(CmpOp::Le, 2);
        if (peek(1) == ':' && peek(2) == '=') return cmp(CmpOp::Eq, 3);
        if (peek(1) == '\\' && peek(2) == '=') return cmp(CmpOp::Ne, 3);
        return take(Tok::Equals, 1);
      default:
        break;
    }
    std::ostringstream msg;
    if (std::isprint(static_cast<unsigned char>(c))) {
      msg << "unexpected character '" << c << "'";
    } else {
      msg << "unexpected byte 0x" << std::hex << (static_cast<unsigned>(static_cast<unsigned char>(c)));
    }
    error(msg.str());
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

constexpr int kMaxNesting = 200;

struct StatementPos {
  enum class Kind { Clause, DistFact, Query, Param, Network, Data };
  Kind kind;
  std::size_t index;
  SourcePos pos;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

  ProgramAst parse_program() {
    ProgramAst ast;
    while (cur().kind != Tok::End) {
      if (cur().kind == Tok::Hash) {
        parse_directive(ast);
      } else {
        parse_statement(ast);
      }
    }
    return ast;
  }

  Term parse_single_term() {
    Term t = parse_term(0);
    if (cur().kind == Tok::Period) next();
    if (cur().kind != Tok::End) unexpected("end of input");
    return t;
  }

  const std::vector<StatementPos>& positions() const { return positions_; }

 private:
  const Token& cur() const { return toks_[i_]; }
  const Token& next() {
    const Token& t = toks_[i_];
    if (i_ + 1 < toks_.size()) ++i_;
    return t;
  }

  [[noreturn]] void unexpected(const std::string& expected) const {
    const Token& t = cur();
    if (t.kind == Tok::End) {
      fail(ErrorCode::SyntaxError, "unexpected end of input, expected " + expected, t.pos);
    }
    fail(ErrorCode::SyntaxError, "unexpected '" + t.text + "', expected " + expected, t.pos);
  }

  void expect(Tok kind, const char* what) {
    if (cur().kind != kind) unexpected(what);
    next();
  }

  Term fresh_anonymous() { return Term::variable("_G" + std::to_string(anon_++)); }

  Term parse_term(int depth) {
    if (depth > kMaxNesting) fail(ErrorCode::SyntaxError, "term nesting too deep", cur().pos);
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Number: {
        double v = t.number;
        next();
        return Term::num(v);
      }
      case Tok::Var: {
        std::string name = t.text;
        next();
        if (name == "_") return fresh_anonymous();
        return Term::variable(std::move(name));
      }
      case Tok::Name: {
        std::string name = t.text;
        next();
        if (cur().kind != Tok::LParen) return Term::symbol(std::move(name));
        next();
        std::vector<Term> args = parse_args(Tok::RParen, ")", depth);
        if (args.empty()) fail(ErrorCode::SyntaxError, "empty argument list", t.pos);
        return Term::compound(std::move(name), std::move(args));
      }
      case Tok::LBracket: {
        next();
        return Term::list(parse_args(Tok::RBracket, "]", depth));
      }
      default:
        unexpected("a term");
    }
  }

  std::vector<Term> parse_args(Tok close, const char* close_text, int depth) {
    std::vector<Term> args;
    if (cur().kind == close) {
      next();
      return args;
    }
    for (;;) {
      args.push_back(parse_term(depth + 1));
      if (cur().kind == Tok::Comma) {
        next();
        continue;
      }
      if (cur().kind == close) {
        next();
        return args;
      }
      unexpected(std::string("',' or '") + close_text + "'");
    }
  }

  Literal parse_literal(int depth) {
    if (depth > kMaxNesting) fail(ErrorCode::SyntaxError, "literal nesting too deep", cur().pos);
    if (cur().kind == Tok::LParen) {
      next();
      Literal l = parse_literal(depth + 1);
      expect(Tok::RParen, "')'");
      return l;
    }
    if (cur().kind == Tok::Naf) {
      next();
      SourcePos p = cur().pos;
      Term a = parse_term(depth);
      if (!a.is_callable()) fail(ErrorCode::SyntaxError, "negation expects an atom", p);
      return Literal::negated(std::move(a));
    }
    SourcePos p = cur().pos;
    Term lhs = parse_term(depth);
    if (cur().kind == Tok::Cmp) {
      CmpOp op = cur().op;
      next();
      Term rhs = parse_term(depth);
      return Literal::comparison(std::move(lhs), op, std::move(rhs));
    }
    if (!lhs.is_callable()) fail(ErrorCode::SyntaxError, "body literal must be an atom or comparison", p);
    return Literal::positive(std::move(lhs));
  }

  void parse_statement(ProgramAst& ast) {
    SourcePos start = cur().pos;
    Term first = parse_term(0);

    if (cur().kind == Tok::Tilde) {
      next();
      if (!first.is_callable()) fail(ErrorCode::SyntaxError, "distributional fact head must be an atom", start);
      SourcePos fpos = cur().pos;
      Term dist = parse_term(0);
      if (dist.kind != Term::Kind::Compound) {
        fail(ErrorCode::SyntaxError, "expected distribution(params...)", fpos);
      }
      expect(Tok::Period, "'.'");
      positions_.push_back({StatementPos::Kind::DistFact, ast.dist_facts.size(), start});
      ast.dist_facts.push_back({std::move(first), dist.name, std::move(dist.args)});
      return;
    }

    std::optional<Term> prob;
    Term head;
    if (cur().kind == Tok::Annot) {
      next();
      prob = std::move(first);
      SourcePos hp = cur().pos;
      head = parse_term(0);
      if (!head.is_callable()) fail(ErrorCode::SyntaxError, "clause head must be an atom", hp);
    } else {
      head = std::move(first);
    }

    if (!prob && head.kind == Term::Kind::Compound && head.name == "query" && head.args.size() == 1 &&
        cur().kind == Tok::Period) {
      next();
      if (!head.args[0].is_callable()) fail(ErrorCode::SyntaxError, "query expects an atom", start);
      positions_.push_back({StatementPos::Kind::Query, ast.queries.size(), start});
      ast.queries.push_back(std::move(head.args[0]));
      return;
    }
    if (!head.is_callable()) fail(ErrorCode::SyntaxError, "clause head must be an atom", start);

    Clause clause;
    clause.head = std::move(head);
    clause.probability = std::move(prob);
    if (cur().kind == Tok::Neck) {
      next();
      for (;;) {
        clause.body.push_back(parse_literal(0));
        if (cur().kind == Tok::Comma) {
          next();
          continue;
        }
        break;
      }
    }
    expect(Tok::Period, "'.'");
    positions_.push_back({StatementPos::Kind::Clause, ast.clauses.size(), start});
    ast.clauses.push_back(std::move(clause));
  }

  // Directives run to the end of their line; a trailing '.' is allowed.
  void parse_directive(ProgramAst& ast) {
    SourcePos start = cur().pos;
    int line = start.line;
    next();
    if (cur().kind != Tok::Name || cur().pos.line != line) {
      fail(ErrorCode::SyntaxError, "expected directive name after '#'", start);
    }
    std::string which = next().text;
    auto on_line = [&] { return cur().kind != Tok::End && cur().pos.line == line; };
    auto need = [&](Tok kind, const char* what) {
      if (!on_line() || cur().kind != kind) unexpected(what);
      return next();
    };
    auto finish = [&] {
      if (on_line() && cur().kind == Tok::Period) next();
      if (on_line()) unexpected("end of directive");
    };

    if (which == "network") {
      NetworkDecl net;
      net.name = need(Tok::Name, "network name").text;
      bool have_arch = false;
      while (on_line() && cur().kind == Tok::Name) {
        std::string key = next().text;
        need(Tok::Equals, "'='");
        if (key == "arch") {
          need(Tok::LBracket, "'['");
          for (;;) {
            const Token& n = need(Tok::Number, "layer width");
            if (n.number < 1 || n.number != std::floor(n.number) || n.number > 1e6) {
              fail(ErrorCode::ValidationError, "layer widths must be positive integers", n.pos);
            }
            net.arch.push_back(static_cast<std::size_t>(n.number));
            if (on_line() && cur().kind == Tok::Comma) {
              next();
              continue;
            }
            need(Tok::RBracket, "']'");
            break;
          }
          have_arch = true;
        } else if (key == "act") {
          const Token& v = need(Tok::Name, "activation");
          if (v.text == "relu") net.act = Activation::Relu;
          else if (v.text == "tanh") net.act = Activation::Tanh;
          else if (v.text == "sigmoid") net.act = Activation::Sigmoid;
          else fail(ErrorCode::ValidationError, "unknown activation '" + v.text + "'", v.pos);
        } else if (key == "out") {
          const Token& v = need(Tok::Name, "output activation");
          if (v.text == "linear") net.out = OutputActivation::Linear;
          else if (v.text == "sigmoid") net.out = OutputActivation::Sigmoid;
          else if (v.text == "softmax") net.out = OutputActivation::Softmax;
          else fail(ErrorCode::ValidationError, "unknown output activation '" + v.text + "'", v.pos);
        } else {
          fail(ErrorCode::SyntaxError, "unknown network option '" + key + "'", start);
        }
      }
      finish();
      if (!have_arch || net.arch.size() < 2) {
        fail(ErrorCode::ValidationError, "network '" + net.name + "' needs arch=[in,...,out]", start);
      }
      positions_.push_back({StatementPos::Kind::Network, ast.networks.size(), start});
      ast.networks.push_back(std::move(net));
    } else if (which == "data") {
      DataBinding d;
      d.name = need(Tok::Name, "data name").text;
      need(Tok::Equals, "'='");
      d.path = need(Tok::String, "quoted path").text;
      finish();
      positions_.push_back({StatementPos::Kind::Data, ast.data.size(), start});
      ast.data.push_back(std::move(d));
    } else if (which == "param") {
      ParamDecl p;
      p.name = need(Tok::Name, "parameter name").text;
      need(Tok::Equals, "'='");
      if (on_line() && cur().kind == Tok::LBracket) {
        next();
        for (;;) {
          p.init.push_back(need(Tok::Number, "number").number);
          if (on_line() && cur().kind == Tok::Comma) {
            next();
            continue;
          }
          need(Tok::RBracket, "']'");
          break;
        }
        p.shape = {p.init.size()};
      } else {
        p.init.push_back(need(Tok::Number, "number").number);
      }
      finish();
      positions_.push_back({StatementPos::Kind::Param, ast.params.size(), start});
      ast.params.push_back(std::move(p));
    } else {
      fail(ErrorCode::SyntaxError, "unknown directive '#" + which + "'", start);
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  int anon_ = 0;
  std::vector<StatementPos> positions_;
};

// ---------------------------------------------------------------------------
// Validation

class Validator {
 public:
  Validator(ProgramAst& ast, const std::vector<StatementPos>& positions)
      : ast_(ast), positions_(positions) {
    for (const auto& d : ast_.dist_facts) dist_preds_.insert(predicate_key(d.head));
    for (const auto& d : ast_.data) data_names_.insert(d.name);
  }

  void run() {
    check_declarations();
    for (const auto& sp : positions_) {
      pos_ = sp.pos;
      switch (sp.kind) {
        case StatementPos::Kind::DistFact: check_dist_fact(ast_.dist_facts[sp.index]); break;
        case StatementPos::Kind::Clause: check_clause(ast_.clauses[sp.index]); break;
        case StatementPos::Kind::Query: check_query(ast_.queries[sp.index]); break;
        default: break;
      }
    }
    pos_ = {};
    collect_learnable_params(ast_);  // throws on constraint conflicts
  }

 private:
  [[noreturn]] void invalid(const std::string& msg) const { fail(ErrorCode::ValidationError, msg, pos_); }

  void check_declarations() {
    std::set<std::string> names;
    for (const auto& sp : positions_) {
      pos_ = sp.pos;
      if (sp.kind == StatementPos::Kind::Network) {
        const auto& n = ast_.networks[sp.index];
        if (!names.insert(n.name).second) invalid("duplicate declaration of '" + n.name + "'");
        if (numeric_builtins().count(n.name) || n.name == "t") {
          invalid("network name '" + n.name + "' shadows a builtin");
        }
      } else if (sp.kind == StatementPos::Kind::Param) {
        const auto& p = ast_.params[sp.index];
        if (!param_names_.insert(p.name).second) invalid("duplicate parameter '" + p.name + "'");
      } else if (sp.kind == StatementPos::Kind::Data) {
        const auto& d = ast_.data[sp.index];
        if (!names.insert(d.name).second) invalid("duplicate declaration of '" + d.name + "'");
      }
    }
  }

  bool is_network(const std::string& name) const { return ast_.find_network(name) != nullptr; }

  // Rewrites compounds in a numeric position into NumericFunc and checks
  // that every functor resolves.
  void classify_numeric(Term& t) {
    switch (t.kind) {
      case Term::Kind::Number:
      case Term::Kind::Variable:
        return;
      case Term::Kind::List:
        for (auto& a : t.args) classify_numeric(a);
        return;
      case Term::Kind::Symbol:
        if (dist_preds_.count(predicate_key(t))) return;
        if (data_names_.count(t.name)) return;
        invalid("'" + t.name + "' is not a random variable or numeric value");
      case Term::Kind::Compound:
      case Term::Kind::NumericFunc:
        break;
    }
    const std::string key = predicate_key(t);
    if (t.name == "t" && t.args.size() == 1) {
      if (!t.args[0].is_symbol()) invalid("learnable parameters must be named: t(name)");
      t.kind = Term::Kind::NumericFunc;
      return;
    }
    auto b = numeric_builtins().find(t.name);
    if (b != numeric_builtins().end()) {
      if (b->second != t.args.size()) {
        invalid("builtin '" + t.name + "' expects " + std::to_string(b->second) + " arguments");
      }
      t.kind = Term::Kind::NumericFunc;
      for (auto& a : t.args) classify_numeric(a);
      return;
    }
    if (is_network(t.name)) {
      t.kind = Term::Kind::NumericFunc;
      for (auto& a : t.args) classify_network_input(a);
      return;
    }
    if (dist_preds_.count(key)) {
      t.kind = Term::Kind::Compound;
      return;
    }
    invalid("unknown numeric function '" + key + "'");
  }

  void classify_network_input(Term& t) {
    if (t.is_symbol()) return;  // data constant, checked when grounded
    classify_numeric(t);
  }

  // Expanded scalar-slot count of a parameter term (networks splat).
  std::size_t slot_width(const Term& t) const {
    if (t.kind == Term::Kind::NumericFunc && is_network(t.name)) {
      return ast_.find_network(t.name)->output_size();
    }
    return 1;
  }

  void check_dist_fact(DistFactDecl& d) {
    auto fam = family_from_name(d.family);
    if (!fam) invalid("unknown distribution family '" + d.family + "'");
    if (d.head.name == "t" || numeric_builtins().count(d.head.name) || is_network(d.head.name)) {
      invalid("random variable '" + d.head.name + "' shadows a numeric function");
    }
    for (auto& p : d.params) classify_numeric(p);

    if (*fam == Family::Categorical) {
      if (d.params.empty() || d.params.size() > 2) invalid("categorical expects (probabilities[, values])");
      const Term& probs = d.params[0];
      std::size_t width = 0;
      if (probs.is_list()) width = probs.args.size();
      else if (probs.kind == Term::Kind::NumericFunc && is_network(probs.name)) width = slot_width(probs);
      else if (probs.kind == Term::Kind::NumericFunc && probs.name == "t") width = 0;  // checked at resolution
      else invalid("categorical probabilities must be a list, network or t(name)");
      if (d.params.size() == 2) {
        const Term& vals = d.params[1];
        if (!vals.is_list()) invalid("categorical values must be a list of numbers");
        for (const auto& v : vals.args) {
          if (!v.is_number()) invalid("categorical values must be numbers");
        }
        if (width && width != vals.args.size()) invalid("categorical probabilities and values differ in length");
      }
      return;
    }

    std::size_t slots = 0;
    std::size_t list_len = 0;
    for (const auto& p : d.params) {
      if (p.is_list()) {
        if (is_discrete(*fam)) invalid(d.family + " does not take vector parameters");
        if (list_len && list_len != p.args.size()) invalid("vector parameters differ in length");
        list_len = p.args.size();
        if (list_len == 0) invalid("empty vector parameter");
      }
      slots += slot_width(p);
    }
    std::size_t arity = family_arity(*fam);
    bool ok = slots == arity;
    if (*fam == Family::GeneralizedNormal && slots == 3) {
      ok = d.params.back().is_number() && d.params.back().number > 0;
      if (!ok) invalid("generalized_normal shape must be a positive number");
    }
    if (!ok) {
      invalid(d.family + " expects " + std::to_string(arity) + " parameters, got " + std::to_string(slots));
    }
  }

  void check_clause(Clause& c) {
    if (c.probability) classify_numeric(*c.probability);
    if (dist_preds_.count(predicate_key(c.head))) {
      invalid("predicate '" + predicate_key(c.head) + "' is defined by both a distributional fact and a clause");
    }
    std::vector<std::string> bound;
    collect_variables(c.head, bound);
    for (const auto& l : c.body) {
      if (l.kind == Literal::Kind::Positive) collect_variables(l.atom, bound);
    }
    auto require_bound = [&](const Term& t, const char* where) {
      std::vector<std::string> vs;
      collect_variables(t, vs);
      for (const auto& v : vs) {
        if (std::find(bound.begin(), bound.end(), v) == bound.end()) {
          invalid("variable " + v + " in " + where + " does not occur in the head or a positive body literal");
        }
      }
    };
    for (auto& l : c.body) {
      if (l.kind == Literal::Kind::Comparison) {
        classify_numeric(l.lhs);
        classify_numeric(l.rhs);
        require_bound(l.lhs, "comparison");
        require_bound(l.rhs, "comparison");
      } else if (l.kind == Literal::Kind::Negated) {
        require_bound(l.atom, "negated literal");
      }
    }
    if (c.probability) require_bound(*c.probability, "probability annotation");
  }

  void check_query(const Term& q) {
    const std::string key = predicate_key(q);
    for (const auto& c : ast_.clauses) {
      if (predicate_key(c.head) == key) return;
    }
    invalid("query predicate '" + key + "' is not defined by any clause");
  }

  ProgramAst& ast_;
  const std::vector<StatementPos>& positions_;
  std::set<std::string> dist_preds_;
  std::set<std::string> data_names_;
  std::set<std::string> param_names_;
  SourcePos pos_;
};

}  // namespace

ProgramAst parse(std::string_view source) {
  Parser parser(source);
  ProgramAst ast = parser.parse_program();
  Validator(ast, parser.positions()).run();
  return ast;
}

Term parse_term(std::string_view source) {
  Parser parser(source);
  return parser.parse_single_term();
}

// ---------------------------------------------------------------------------
// Printing

std::string to_string(const Literal& lit) {
  switch (lit.kind) {
    case Literal::Kind::Positive: return to_string(lit.atom);
    case Literal::Kind::Negated: return "\\+ " + to_string(lit.atom);
    case Literal::Kind::Comparison:
      return to_string(lit.lhs) + " " + std::string(cmp_op_text(lit.op)) + " " + to_string(lit.rhs);
  }
  return {};
}

namespace {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "relu";
}

std::string_view output_name(OutputActivation a) {
  switch (a) {
    case OutputActivation::Linear: return "linear";
    case OutputActivation::Sigmoid: return "sigmoid";
    case OutputActivation::Softmax: return "softmax";
  }
  return "linear";
}

std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string pretty_print(const ProgramAst& ast) {
  std::string out;
  for (const auto& p : ast.params) {
    out += "#param " + p.name + " = ";
    if (p.shape.empty()) {
      out += format_number(p.init.at(0));
    } else {
      out += '[';
      for (std::size_t i = 0; i < p.init.size(); ++i) {
        if (i) out += ", ";
        out += format_number(p.init[i]);
      }
      out += ']';
    }
    out += '\n';
  }
  for (const auto& n : ast.networks) {
    out += "#network " + n.name + " arch=[";
    for (std::size_t i = 0; i < n.arch.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(n.arch[i]);
    }
    out += "] act=";
    out += activation_name(n.act);
    out += " out=";
    out += output_name(n.out);
    out += '\n';
  }
  for (const auto& d : ast.data) {
    out += "#data " + d.name + " = " + quote_string(d.path) + "\n";
  }
  for (const auto& d : ast.dist_facts) {
    out += to_string(d.head) + " ~ " + to_string(Term::compound(d.family, d.params)) + ".\n";
  }
  for (const auto& c : ast.clauses) {
    if (c.probability) out += to_string(*c.probability) + " :: ";
    out += to_string(c.head);
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      out += i ? ", " : " :- ";
      out += to_string(c.body[i]);
    }
    out += ".\n";
  }
  for (const auto& q : ast.queries) out += "query(" + to_string(q) + ").\n";
  return out;
}

// ---------------------------------------------------------------------------
// Learnable parameters

double constrain(double raw, ParamConstraint c) {
  switch (c) {
    case ParamConstraint::None: return raw;
    case ParamConstraint::Positive: return raw > 30 ? raw : std::log1p(std::exp(raw));
    case ParamConstraint::Unit: return 1.0 / (1.0 + std::exp(-raw));
  }
  return raw;
}

double unconstrain(double value, ParamConstraint c) {
  switch (c) {
    case ParamConstraint::None: return value;
    case ParamConstraint::Positive:
      if (!(value > 0)) fail(ErrorCode::DomainError, "positive parameter initialised to " + format_number(value));
      return value > 30 ? value : std::log(std::expm1(value));
    case ParamConstraint::Unit:
      if (!(value > 0 && value < 1)) {
        fail(ErrorCode::DomainError, "probability parameter initialised to " + format_number(value));
      }
      return std::log(value / (1.0 - value));
  }
  return value;
}

namespace {

void note_constraint(std::map<std::string, LearnableParam>& out, const Term& t, ParamConstraint c) {
  if (t.kind != Term::Kind::NumericFunc || t.name != "t") return;
  auto& p = out[t.args.at(0).name];
  if (c == ParamConstraint::None) return;
  if (p.constraint != ParamConstraint::None && p.constraint != c) {
    fail(ErrorCode::ValidationError,
         "parameter '" + t.args[0].name + "' is used both as a probability and as a positive scale");
  }
  p.constraint = c;
}

void collect_refs(const Term& t, std::map<std::string, LearnableParam>& out) {
  if (t.kind == Term::Kind::NumericFunc && t.name == "t" && t.args.size() == 1) {
    out[t.args[0].name];
    return;
  }
  for (const auto& a : t.args) collect_refs(a, out);
}

}  // namespace

std::map<std::string, LearnableParam> collect_learnable_params(const ProgramAst& ast) {
  std::map<std::string, LearnableParam> out;
  for (const auto& d : ast.dist_facts) {
    for (const auto& p : d.params) collect_refs(p, out);
  }
  for (const auto& c : ast.clauses) {
    if (c.probability) collect_refs(*c.probability, out);
    for (const auto& l : c.body) {
      collect_refs(l.lhs, out);
      collect_refs(l.rhs, out);
    }
  }
  for (const auto& d : ast.dist_facts) {
    auto fam = family_from_name(d.family);
    if (!fam) continue;
    std::size_t slot = 0;
    for (const auto& p : d.params) {
      if (p.is_list()) {
        for (const auto& e : p.args) note_constraint(out, e, slot_constraint(*fam, slot));
      } else {
        note_constraint(out, p, slot_constraint(*fam, slot));
      }
      if (p.kind == Term::Kind::NumericFunc) {
        if (const auto* net = ast.find_network(p.name)) {
          slot += net->output_size();
          continue;
        }
      }
      ++slot;
      if (*fam == Family::Categorical) break;
    }
  }
  for (const auto& c : ast.clauses) {
    if (c.probability) note_constraint(out, *c.probability, ParamConstraint::Unit);
  }
  for (auto& [name, p] : out) {
    if (const auto* decl = ast.find_param(name)) {
      p.shape = decl->shape;
      p.init = decl->init;
    } else {
      double v = p.constraint == ParamConstraint::Positive ? 1.0
                 : p.constraint == ParamConstraint::Unit   ? 0.5
                                                           : 0.0;
      p.init = {v};
    }
    for (double v : p.init) unconstrain(v, p.constraint);  // validates the range
  }
  return out;
}

// ---------------------------------------------------------------------------
// Desugaring

bool LogicProgram::is_dist_predicate(const Term& t) const {
  return t.is_callable() && dist_by_pred.count(predicate_key(t)) > 0;
}

LogicProgram desugar(const ProgramAst& ast) {
  LogicProgram out;
  out.dist_facts = ast.dist_facts;
  for (std::size_t i = 0; i < ast.clauses.size(); ++i) {
    const Clause& c = ast.clauses[i];
    if (!c.probability) {
      out.rules.push_back(c);
      continue;
    }
    std::vector<std::string> vars;
    collect_variables(c.head, vars);
    for (const auto& l : c.body) {
      collect_variables(l.atom, vars);
      collect_variables(l.lhs, vars);
      collect_variables(l.rhs, vars);
    }
    collect_variables(*c.probability, vars);
    std::vector<Term> args;
    for (const auto& v : vars) args.push_back(Term::variable(v));
    Term aux = Term::compound(c.head.name + "#" + std::to_string(i), std::move(args));
    out.dist_facts.push_back({aux, "bernoulli", {*c.probability}});
    Clause rule;
    rule.head = c.head;
    rule.body = c.body;
    rule.body.push_back(Literal::comparison(aux, CmpOp::Eq, Term::num(1.0)));
    out.rules.push_back(std::move(rule));
  }
  for (std::size_t i = 0; i < out.rules.size(); ++i) {
    out.rules_by_pred[predicate_key(out.rules[i].head)].push_back(i);
  }
  for (std::size_t i = 0; i < out.dist_facts.size(); ++i) {
    out.dist_by_pred[predicate_key(out.dist_facts[i].head)].push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// #data

DataMap load_data_bindings(const ProgramAst& ast, const std::string& base_dir) {
  DataMap out;
  for (const auto& d : ast.data) {
    std::filesystem::path p(d.path);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    std::ifstream in(p);
    if (!in) fail(ErrorCode::IoError, "cannot open data file '" + p.string() + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::IoError, "data file '" + p.string() + "': " + e.what());
    }
    if (!j.is_array()) fail(ErrorCode::IoError, "data file '" + p.string() + "' must hold a JSON array");
    std::vector<double> values;
    for (const auto& v : j) {
      if (!v.is_number()) fail(ErrorCode::IoError, "data file '" + p.string() + "' must hold numbers");
      values.push_back(v.get<double>());
    }
    out[d.name] = std::move(values);
  }
  return out;
}

}  // namespace dspl
