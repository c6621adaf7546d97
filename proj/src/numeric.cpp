#include "dspl/numeric.hpp"

namespace dspl {

namespace {

struct BuiltinInfo {
  Builtin b;
  const char* name;
  std::size_t arity;
};

constexpr BuiltinInfo kBuiltins[] = {
    {Builtin::Add, "add", 2},
    {Builtin::Sub, "sub", 2},
    {Builtin::Mul, "mul", 2},
    {Builtin::Div, "div", 2},
    {Builtin::Neg, "neg", 1},
    {Builtin::Abs, "abs", 1},
    {Builtin::SquaredDistance, "squared_distance", 2},
    {Builtin::Distance, "distance", 2},
    {Builtin::Exp, "exp", 1},
    {Builtin::Log, "log", 1},
};

}  // namespace

std::optional<Builtin> builtin_from_name(const std::string& name, std::size_t arity) {
  for (const auto& info : kBuiltins) {
    if (name == info.name && arity == info.arity) return info.b;
  }
  return std::nullopt;
}

std::string_view builtin_name(Builtin b) {
  for (const auto& info : kBuiltins) {
    if (info.b == b) return info.name;
  }
  return "?";
}

std::size_t builtin_arity(Builtin b) {
  for (const auto& info : kBuiltins) {
    if (info.b == b) return info.arity;
  }
  return 0;
}

}  // namespace dspl
