#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gamnet/combinators.hpp"

namespace gamnet::ica {

struct SyntaxError : Error {
  std::size_t pos;
  SyntaxError(const std::string& msg, std::size_t p) : Error(msg), pos(p) {}
};

struct TypeError : Error {
  std::size_t pos;
  TypeError(const std::string& msg, std::size_t p) : Error(msg), pos(p) {}
};

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
  enum Kind { Exp, Com, Arrow, Prod } kind;
  TypePtr left, right;
};

TypePtr exp_type();
TypePtr com_type();
TypePtr arrow_type(TypePtr a, TypePtr b);
TypePtr prod_type(TypePtr a, TypePtr b);
// exp × (exp → com)
TypePtr var_type();
bool type_equal(const TypePtr& a, const TypePtr& b);
bool is_ground(const TypePtr& t);
std::string to_string(const TypePtr& t);

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  enum Kind { Var, Lam, App, Fix, Int, Skip, Add, Sub, Mul, Succ, If, Seq, Assign, Deref, New, Par, At } kind;
  std::string name;  // variable, binder, or node name for At
  TypePtr type;      // binder type for Lam
  std::int64_t value = 0;
  std::vector<TermPtr> kids;
  std::size_t pos = 0;
};

std::string to_string(const TermPtr& t);

TermPtr parse(const std::string& source);
TypePtr parse_type(const std::string& source);

using Context = std::vector<std::pair<std::string, TypePtr>>;

TypePtr typecheck(const TermPtr& t, const Context& ctx = {});

// One question and one answer per ground type; products are tensors, arrows per game_arrow.
GameInterface arena_of(const TypePtr& t);
// Answer ports of com components, which carry no value.
std::set<PortName> unit_answers(const TypePtr& t, const GameInterface& a);

enum class Constant { Lit, Skip, If, Add, Sub, Mul, Succ, Seq, NewVar, Par, Fix };

// Closed constant nets. `ground` selects exp or com for if/seq/newvar;
// `of` is the type at which fix is taken.
GamNet constant_net(Constant c, std::int64_t n = 0, const TypePtr& ground = exp_type(), const TypePtr& of = nullptr);
TypePtr constant_type(Constant c, const TypePtr& ground = exp_type(), const TypePtr& of = nullptr);

struct CompileOptions {
  bool allow_parallel = false;
};

// Γ ⊢ M compiled to a net over arena(Γ) ⇒ arena(type of M). Engines carry the
// placement of the innermost enclosing annotation; the rest stay unplaced.
GamNet compile(const TermPtr& t, const Context& ctx = {}, const CompileOptions& opt = {});

struct Value {
  enum Kind { Int, Done } kind = Done;
  std::int64_t n = 0;
  bool operator==(const Value&) const = default;
};

struct Timeout : Error {
  using Error::Error;
};

// Call-by-name evaluator for closed sequential terms of ground type.
Value reference_interpret(const TermPtr& t, std::uint64_t fuel = 10'000'000);

}  // namespace gamnet::ica
