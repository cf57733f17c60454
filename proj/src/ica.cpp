#include "gamnet/ica.hpp"

#include <pthread.h>

#include <cctype>
#include <exception>
#include <functional>

namespace gamnet::ica {

TypePtr exp_type() {
  static const TypePtr t = std::make_shared<Type>(Type{Type::Exp, nullptr, nullptr});
  return t;
}
TypePtr com_type() {
  static const TypePtr t = std::make_shared<Type>(Type{Type::Com, nullptr, nullptr});
  return t;
}
TypePtr arrow_type(TypePtr a, TypePtr b) { return std::make_shared<Type>(Type{Type::Arrow, std::move(a), std::move(b)}); }
TypePtr prod_type(TypePtr a, TypePtr b) { return std::make_shared<Type>(Type{Type::Prod, std::move(a), std::move(b)}); }
TypePtr var_type() { return prod_type(exp_type(), arrow_type(exp_type(), com_type())); }

bool type_equal(const TypePtr& a, const TypePtr& b) {
  if (a->kind != b->kind) return false;
  if (a->kind == Type::Exp || a->kind == Type::Com) return true;
  return type_equal(a->left, b->left) && type_equal(a->right, b->right);
}

bool is_ground(const TypePtr& t) { return t->kind == Type::Exp || t->kind == Type::Com; }

std::string to_string(const TypePtr& t) {
  switch (t->kind) {
    case Type::Exp: return "exp";
    case Type::Com: return "com";
    case Type::Arrow: {
      std::string l = to_string(t->left);
      if (t->left->kind == Type::Arrow) l = "(" + l + ")";
      return l + " -> " + to_string(t->right);
    }
    case Type::Prod: {
      auto side = [](const TypePtr& x) { return is_ground(x) ? to_string(x) : "(" + to_string(x) + ")"; };
      return side(t->left) + " * " + side(t->right);
    }
  }
  return "?";
}

std::string to_string(const TermPtr& t) {
  auto k = [&](std::size_t i) { return to_string(t->kids[i]); };
  switch (t->kind) {
    case Term::Var: return t->name;
    case Term::Lam: return "(\\" + t->name + ":" + to_string(t->type) + ". " + k(0) + ")";
    case Term::App: return "(" + k(0) + " " + k(1) + ")";
    case Term::Fix: return "(fix " + k(0) + ")";
    case Term::Int: return std::to_string(t->value);
    case Term::Skip: return "skip";
    case Term::Succ: return "succ";
    case Term::Add: return "(" + k(0) + " + " + k(1) + ")";
    case Term::Sub: return "(" + k(0) + " - " + k(1) + ")";
    case Term::Mul: return "(" + k(0) + " * " + k(1) + ")";
    case Term::If: return "(if " + k(0) + " then " + k(1) + " else " + k(2) + ")";
    case Term::Seq: return "(" + k(0) + "; " + k(1) + ")";
    case Term::Assign: return "(" + k(0) + " := " + k(1) + ")";
    case Term::Deref: return "!" + k(0);
    case Term::New: return "(new " + t->name + ". " + k(0) + ")";
    case Term::Par: return "(" + k(0) + " || " + k(1) + ")";
    case Term::At: return "{" + k(0) + "}@" + t->name;
  }
  return "?";
}

// ---------------------------------------------------------------- parsing

namespace {

struct Token {
  enum Kind { Int, Ident, Sym, End } kind;
  std::string text;
  std::size_t pos;
};

const char* const kKeywords[] = {"if", "then", "else", "new", "fix", "skip", "succ", "exp", "com", "var"};

bool is_keyword(const std::string& s) {
  for (auto* k : kKeywords)
    if (s == k) return true;
  return false;
}

std::string where(const std::string& src, std::size_t pos) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < pos && i < src.size(); ++i) {
    if (src[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto err = [&](const std::string& m) { throw SyntaxError(where(s, i) + ": " + m, i); };
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isdigit(c)) {
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      out.push_back({Token::Int, s.substr(start, i - start), start});
      continue;
    }
    if (std::isalpha(c) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '\'')) ++i;
      out.push_back({Token::Ident, s.substr(start, i - start), start});
      continue;
    }
    if (s.compare(i, 2, "\xCE\xBB") == 0) {
      out.push_back({Token::Sym, "\\", start});
      i += 2;
      continue;
    }
    if (s.compare(i, 3, "\xE2\x86\x92") == 0) {
      out.push_back({Token::Sym, "->", start});
      i += 3;
      continue;
    }
    for (const char* two : {":=", "||", "->"}) {
      if (s.compare(i, 2, two) == 0) {
        out.push_back({Token::Sym, two, start});
        i += 2;
        goto next;
      }
    }
    if (std::string("(){}@!+-*;:.\\").find(static_cast<char>(c)) != std::string::npos) {
      out.push_back({Token::Sym, std::string(1, static_cast<char>(c)), start});
      ++i;
      continue;
    }
    err(std::string("unexpected character '") + static_cast<char>(c) + "'");
  next:;
  }
  out.push_back({Token::End, "", s.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : src_(src), toks_(lex(src)) {}

  TermPtr program() {
    TermPtr t = expr();
    if (peek().kind != Token::End) fail("unexpected '" + peek().text + "'");
    return t;
  }

  TypePtr whole_type() {
    TypePtr t = type();
    if (peek().kind != Token::End) fail("unexpected '" + peek().text + "'");
    return t;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  bool is_sym(const char* s) const { return peek().kind == Token::Sym && peek().text == s; }
  bool is_kw(const char* s) const { return peek().kind == Token::Ident && peek().text == s; }
  [[noreturn]] void fail(const std::string& m) const {
    throw SyntaxError(where(src_, peek().pos) + ": " + m, peek().pos);
  }
  Token take() { return toks_[i_++]; }
  void expect_sym(const char* s) {
    if (!is_sym(s)) fail(std::string("expected '") + s + "'" + (peek().kind == Token::End ? " before end of input" : ""));
    ++i_;
  }
  void expect_kw(const char* s) {
    if (!is_kw(s)) fail(std::string("expected '") + s + "'");
    ++i_;
  }
  std::string ident() {
    if (peek().kind != Token::Ident || is_keyword(peek().text)) fail("expected identifier");
    return take().text;
  }

  static std::shared_ptr<Term> mk(Term::Kind k, std::size_t pos, std::vector<TermPtr> kids = {}, std::string name = {}) {
    auto t = std::make_shared<Term>();
    t->kind = k;
    t->pos = pos;
    t->kids = std::move(kids);
    t->name = std::move(name);
    return t;
  }

  TermPtr expr() {
    std::size_t pos = peek().pos;
    TermPtr l = par();
    if (is_sym(";")) {
      ++i_;
      return mk(Term::Seq, pos, {l, expr()});
    }
    return l;
  }

  TermPtr par() {
    std::size_t pos = peek().pos;
    TermPtr l = assign();
    while (is_sym("||")) {
      ++i_;
      l = mk(Term::Par, pos, {l, assign()});
    }
    return l;
  }

  TermPtr assign() {
    std::size_t pos = peek().pos;
    TermPtr l = additive();
    if (is_sym(":=")) {
      ++i_;
      return mk(Term::Assign, pos, {l, additive()});
    }
    return l;
  }

  TermPtr additive() {
    std::size_t pos = peek().pos;
    TermPtr l = multiplicative();
    while (is_sym("+") || is_sym("-")) {
      Term::Kind k = take().text == "+" ? Term::Add : Term::Sub;
      l = mk(k, pos, {l, multiplicative()});
    }
    return l;
  }

  TermPtr multiplicative() {
    std::size_t pos = peek().pos;
    TermPtr l = application();
    while (is_sym("*")) {
      ++i_;
      l = mk(Term::Mul, pos, {l, application()});
    }
    return l;
  }

  bool starts_atom() const {
    const Token& t = peek();
    if (t.kind == Token::Int) return true;
    if (t.kind == Token::Ident) return t.text != "then" && t.text != "else" && t.text != "exp" && t.text != "com" && t.text != "var";
    return is_sym("(") || is_sym("!") || is_sym("{") || is_sym("\\");
  }

  TermPtr application() {
    std::size_t pos = peek().pos;
    TermPtr f = atom();
    while (starts_atom()) f = mk(Term::App, pos, {f, atom()});
    return f;
  }

  TermPtr atom() {
    const Token& t = peek();
    std::size_t pos = t.pos;
    if (t.kind == Token::Int) {
      auto n = mk(Term::Int, pos);
      try {
        n->value = std::stoll(take().text);
      } catch (const std::out_of_range&) {
        throw SyntaxError(where(src_, pos) + ": integer literal out of range", pos);
      }
      return n;
    }
    if (is_sym("(")) {
      ++i_;
      TermPtr e = expr();
      expect_sym(")");
      return e;
    }
    if (is_sym("!")) {
      ++i_;
      return mk(Term::Deref, pos, {atom()});
    }
    if (is_sym("{")) {
      ++i_;
      TermPtr e = expr();
      expect_sym("}");
      expect_sym("@");
      if (peek().kind != Token::Ident) fail("expected node name");
      return mk(Term::At, pos, {e}, take().text);
    }
    if (is_sym("\\")) {
      ++i_;
      std::string x = ident();
      expect_sym(":");
      TypePtr ty = type();
      expect_sym(".");
      auto lam = mk(Term::Lam, pos, {expr()}, x);
      lam->type = ty;
      return lam;
    }
    if (is_kw("if")) {
      ++i_;
      TermPtr c = expr();
      expect_kw("then");
      TermPtr a = expr();
      expect_kw("else");
      TermPtr b = expr();
      return mk(Term::If, pos, {c, a, b});
    }
    if (is_kw("new")) {
      ++i_;
      std::string x = ident();
      expect_sym(".");
      return mk(Term::New, pos, {expr()}, x);
    }
    if (is_kw("fix")) {
      ++i_;
      return mk(Term::Fix, pos, {atom()});
    }
    if (is_kw("skip")) {
      ++i_;
      return mk(Term::Skip, pos);
    }
    if (is_kw("succ")) {
      ++i_;
      return mk(Term::Succ, pos);
    }
    if (t.kind == Token::Ident && !is_keyword(t.text)) return mk(Term::Var, pos, {}, take().text);
    if (t.kind == Token::End) fail("unexpected end of input");
    fail("unexpected '" + t.text + "'");
  }

  TypePtr type() {
    TypePtr l = product();
    if (is_sym("->")) {
      ++i_;
      return arrow_type(l, type());
    }
    return l;
  }

  TypePtr product() {
    TypePtr l = type_atom();
    while (is_sym("*")) {
      ++i_;
      l = prod_type(l, type_atom());
    }
    return l;
  }

  TypePtr type_atom() {
    if (is_kw("exp")) {
      ++i_;
      return exp_type();
    }
    if (is_kw("com")) {
      ++i_;
      return com_type();
    }
    if (is_kw("var")) {
      ++i_;
      return var_type();
    }
    if (is_sym("(")) {
      ++i_;
      TypePtr t = type();
      expect_sym(")");
      return t;
    }
    fail("expected a type");
  }

  const std::string& src_;
  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

}  // namespace

TermPtr parse(const std::string& source) { return Parser(source).program(); }
TypePtr parse_type(const std::string& source) { return Parser(source).whole_type(); }

// ---------------------------------------------------------------- typing

namespace {

std::optional<std::size_t> lookup(const Context& ctx, const std::string& x) {
  for (std::size_t i = ctx.size(); i-- > 0;)
    if (ctx[i].first == x) return i;
  return std::nullopt;
}

[[noreturn]] void type_fail(const TermPtr& t, const std::string& m) { throw TypeError(m, t->pos); }

void want(const TermPtr& t, const TypePtr& got, const TypePtr& expected) {
  if (!type_equal(got, expected))
    type_fail(t, "expected " + to_string(expected) + " but found " + to_string(got) + " in " + to_string(t));
}

}  // namespace

TypePtr typecheck(const TermPtr& t, const Context& ctx) {
  auto sub = [&](std::size_t i, const Context& c) { return typecheck(t->kids[i], c); };
  switch (t->kind) {
    case Term::Var: {
      auto i = lookup(ctx, t->name);
      if (!i) type_fail(t, "unbound variable " + t->name);
      return ctx[*i].second;
    }
    case Term::Lam: {
      Context c = ctx;
      c.push_back({t->name, t->type});
      return arrow_type(t->type, sub(0, c));
    }
    case Term::App: {
      TypePtr f = sub(0, ctx);
      if (f->kind != Type::Arrow) type_fail(t, "applying a non-function of type " + to_string(f));
      want(t->kids[1], sub(1, ctx), f->left);
      return f->right;
    }
    case Term::Fix: {
      TypePtr f = sub(0, ctx);
      if (f->kind != Type::Arrow || !type_equal(f->left, f->right))
        type_fail(t, "fix expects a function of type T -> T, found " + to_string(f));
      return f->left;
    }
    case Term::Int: return exp_type();
    case Term::Skip: return com_type();
    case Term::Succ: return arrow_type(exp_type(), exp_type());
    case Term::Add:
    case Term::Sub:
    case Term::Mul:
      want(t->kids[0], sub(0, ctx), exp_type());
      want(t->kids[1], sub(1, ctx), exp_type());
      return exp_type();
    case Term::If: {
      want(t->kids[0], sub(0, ctx), exp_type());
      TypePtr a = sub(1, ctx);
      if (!is_ground(a)) type_fail(t, "conditional branches must be exp or com");
      want(t->kids[2], sub(2, ctx), a);
      return a;
    }
    case Term::Seq: {
      want(t->kids[0], sub(0, ctx), com_type());
      TypePtr b = sub(1, ctx);
      if (!is_ground(b)) type_fail(t, "sequencing must end in exp or com");
      return b;
    }
    case Term::Assign:
      want(t->kids[0], sub(0, ctx), var_type());
      want(t->kids[1], sub(1, ctx), exp_type());
      return com_type();
    case Term::Deref:
      want(t->kids[0], sub(0, ctx), var_type());
      return exp_type();
    case Term::New: {
      Context c = ctx;
      c.push_back({t->name, var_type()});
      TypePtr b = sub(0, c);
      if (!is_ground(b)) type_fail(t, "the scope of new must be exp or com");
      return b;
    }
    case Term::Par:
      want(t->kids[0], sub(0, ctx), com_type());
      want(t->kids[1], sub(1, ctx), com_type());
      return com_type();
    case Term::At: return sub(0, ctx);
  }
  type_fail(t, "unknown term");
}

// ---------------------------------------------------------------- arenas and constants

GameInterface arena_of(const TypePtr& t) {
  switch (t->kind) {
    case Type::Exp:
    case Type::Com: return base_arena();
    case Type::Arrow: return game_arrow(arena_of(t->left), arena_of(t->right));
    case Type::Prod: return game_tensor(arena_of(t->left), arena_of(t->right));
  }
  return {};
}

namespace {

void collect_units(const TypePtr& t, const GameInterface& a, std::size_t& at, std::set<PortName>& out) {
  if (t->kind == Type::Exp || t->kind == Type::Com) {
    if (t->kind == Type::Com) out.insert(a.order.at(at + 1));
    at += 2;
    return;
  }
  collect_units(t->left, a, at, out);
  collect_units(t->right, a, at, out);
}

}  // namespace

std::set<PortName> unit_answers(const TypePtr& t, const GameInterface& a) {
  std::set<PortName> out;
  std::size_t at = 0;
  collect_units(t, a, at, out);
  return out;
}

TypePtr constant_type(Constant c, const TypePtr& ground, const TypePtr& of) {
  auto e = exp_type();
  auto g = ground;
  switch (c) {
    case Constant::Lit: return e;
    case Constant::Skip: return com_type();
    case Constant::If: return arrow_type(e, arrow_type(g, arrow_type(g, g)));
    case Constant::Add:
    case Constant::Sub:
    case Constant::Mul: return arrow_type(e, arrow_type(e, e));
    case Constant::Succ: return arrow_type(e, e);
    case Constant::Seq: return arrow_type(com_type(), arrow_type(g, g));
    case Constant::NewVar: return arrow_type(arrow_type(var_type(), g), g);
    case Constant::Par: return arrow_type(com_type(), arrow_type(com_type(), com_type()));
    case Constant::Fix:
      if (!of) throw PreconditionError("fix constant needs a type");
      return arrow_type(arrow_type(of, of), of);
  }
  return e;
}

namespace {

using ins::Flip, ins::Set, ins::New, ins::Get, ins::Free, ins::Update, ins::Arith, ins::Fork;

std::vector<Instr> cat(std::vector<Instr> a, const std::vector<Instr>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void fill_engine(Constant c, std::int64_t n, Engine& e, const std::vector<PortName>& p) {
  auto& m = e.port_map;
  auto cci = macro::cci();
  auto cca = macro::cca();
  switch (c) {
    case Constant::Lit:
      m[p[0]] = seq({Flip{0, 1}, Set{1, std::nullopt}, Set{2, n}}, spark(p[1]));
      break;
    case Constant::Skip:
      m[p[0]] = seq({Flip{0, 1}, Set{1, std::nullopt}, Set{2, std::nullopt}}, spark(p[1]));
      break;
    case Constant::Succ:
      m[p[2]] = seq(cci, spark(p[0]));
      m[p[1]] = seq(cat(cca, {Set{3, 1}, Arith{ins::Op::Add, 2, 2, 3}, Set{3, std::nullopt}}), spark(p[3]));
      break;
    case Constant::If:
      // q1 a1 | q2 a2 | q3 a3 | q4 a4
      m[p[6]] = seq(cci, spark(p[0]));
      m[p[1]] = seq(cat(cat(cca, {Flip{0, 1}}), cci), ifzero(2, spark(p[4]), spark(p[2])));
      m[p[3]] = seq(cca, spark(p[7]));
      m[p[5]] = seq(cca, spark(p[7]));
      break;
    case Constant::Add:
    case Constant::Sub:
    case Constant::Mul: {
      ins::Op op = c == Constant::Add ? ins::Op::Add : c == Constant::Sub ? ins::Op::Sub : ins::Op::Mul;
      m[p[4]] = seq(cci, spark(p[0]));
      m[p[1]] = seq({Flip{0, 1}, Get{0, 3, 1}, Free{1}, New{1, 0, 2}, Set{2, std::nullopt}}, spark(p[2]));
      m[p[3]] = seq({Flip{0, 1}, Get{0, 3, 1}, Free{1}, Arith{op, 2, 3, 2}, Set{3, std::nullopt}}, spark(p[5]));
      break;
    }
    case Constant::Seq:
      m[p[4]] = seq(cci, spark(p[0]));
      m[p[1]] = seq(cat(cat(cat(cca, {Flip{0, 1}}), cci), {Set{2, std::nullopt}}), spark(p[2]));
      m[p[3]] = seq(cca, spark(p[5]));
      break;
    case Constant::NewVar:
      // exp1 (read) | exp2 com3 (write) | body 4 | result 5
      m[p[8]] = seq(cat({Set{3, 0}}, cci), spark(p[6]));
      m[p[0]] = seq({Get{kNull, 2, 0}, Flip{0, 1}, Set{1, std::nullopt}}, spark(p[1]));
      m[p[4]] = seq({Flip{0, 1}, New{1, 0, 1}}, spark(p[2]));
      m[p[3]] = seq(cat(cat({Get{kNull, 3, 0}, Update{3, 2}}, cca), {Set{2, std::nullopt}}), spark(p[5]));
      m[p[7]] = seq(cca, spark(p[9]));
      break;
    case Constant::Par:
      m[p[4]] = seq({Flip{0, 1}, Set{3, 0}, New{3, 0, 3}, New{1, 3, 3}, Fork{p[0]}, New{1, 3, 3}}, spark(p[2]));
      for (auto a : {p[1], p[3]})
        m[a] = seq({Flip{0, 1}, Get{0, 3, 1}, Free{1}, Set{2, 1}, Update{0, 2}},
                   ifzero(2, end_code(), seq(std::vector<Instr>{Free{3}}, spark(p[5]))));
      break;
    case Constant::Fix: break;
  }
}

}  // namespace

GamNet constant_net(Constant c, std::int64_t n, const TypePtr& ground, const TypePtr& of) {
  if ((c == Constant::If || c == Constant::Seq || c == Constant::NewVar) && !is_ground(ground))
    throw PreconditionError("constant needs a ground type");
  if (c == Constant::Fix) {
    if (!of) throw PreconditionError("fix constant needs a type");
    return fixpoint_net(arena_of(of));
  }
  GameInterface a = arena_of(constant_type(c, ground, of));
  Engine e;
  e.iface = a.base;
  fill_engine(c, n, e, a.order);
  auto [net, ext] = wrap_engine(e);
  return GamNet{net, empty_arena(), rename(ext, a)};
}

// ---------------------------------------------------------------- compilation

namespace {

GameInterface restrict_arena(const GameInterface& g, std::size_t from, std::size_t to) {
  GameInterface out;
  std::set<PortName> in(g.order.begin() + static_cast<std::ptrdiff_t>(from),
                        g.order.begin() + static_cast<std::ptrdiff_t>(to));
  for (std::size_t i = from; i < to; ++i) {
    PortName x = g.order[i];
    out.base.add(g.base.polarity(x), x);
    if (g.is_question(x)) out.questions.insert(x);
    if (g.is_initial(x)) out.initials.insert(x);
    out.order.push_back(x);
  }
  for (auto [x, y] : g.enabling)
    if (in.count(x) && in.count(y)) out.enabling.insert({x, y});
  return out;
}

class Compiler {
 public:
  explicit Compiler(const CompileOptions& opt) : opt_(opt) {}

  std::pair<GamNet, TypePtr> go(const TermPtr& t, const Context& ctx) {
    auto kid = [&](std::size_t i) { return go(t->kids[i], ctx); };
    switch (t->kind) {
      case Term::Var: {
        auto i = lookup(ctx, t->name);
        if (!i) type_fail(t, "unbound variable " + t->name);
        TypePtr ty = ctx[*i].second;
        GamNet proj = game_projection(arenas(ctx), *i);
        return {gam_compose(proj, copycat_net(arena_of(ty))), ty};
      }
      case Term::Lam: {
        Context c = ctx;
        c.push_back({t->name, t->type});
        auto [body, bt] = go(t->kids[0], c);
        std::size_t n = body.dom.order.size() - arena_of(t->type).order.size();
        GameInterface gam = restrict_arena(body.dom, 0, n);
        GameInterface arg = restrict_arena(body.dom, n, body.dom.order.size());
        return {GamNet{body.net, gam, game_arrow(arg, body.cod)}, arrow_type(t->type, bt)};
      }
      case Term::App: {
        auto [f, ft] = kid(0);
        if (ft->kind != Type::Arrow) type_fail(t, "applying a non-function");
        auto [x, xt] = kid(1);
        want(t->kids[1], xt, ft->left);
        return {apply(f, x, ctx, ft), ft->right};
      }
      case Term::Fix: {
        auto [f, ft] = kid(0);
        if (ft->kind != Type::Arrow || !type_equal(ft->left, ft->right)) type_fail(t, "fix expects T -> T");
        TypePtr ct = constant_type(Constant::Fix, nullptr, ft->left);
        return {apply(in_context(constant_net(Constant::Fix, 0, nullptr, ft->left), ctx), f, ctx, ct), ft->left};
      }
      case Term::Int: return {in_context(constant_net(Constant::Lit, t->value), ctx), exp_type()};
      case Term::Skip: return {in_context(constant_net(Constant::Skip), ctx), com_type()};
      case Term::Succ: return {in_context(constant_net(Constant::Succ), ctx), constant_type(Constant::Succ)};
      case Term::Add:
      case Term::Sub:
      case Term::Mul: {
        Constant c = t->kind == Term::Add ? Constant::Add : t->kind == Term::Sub ? Constant::Sub : Constant::Mul;
        return {binary(c, exp_type(), t, ctx), exp_type()};
      }
      case Term::If: {
        TypePtr g = typecheck(t->kids[1], ctx);
        if (!is_ground(g)) type_fail(t, "conditional branches must be exp or com");
        TypePtr ct = constant_type(Constant::If, g);
        GamNet c = in_context(constant_net(Constant::If, 0, g), ctx);
        // zero selects the then-branch, which the engine reaches through its third argument
        c = apply(c, expect(t->kids[0], ctx, exp_type()), ctx, ct);
        c = apply(c, expect(t->kids[2], ctx, g), ctx, ct->right);
        c = apply(c, expect(t->kids[1], ctx, g), ctx, ct->right->right);
        return {c, g};
      }
      case Term::Seq: {
        TypePtr g = typecheck(t->kids[1], ctx);
        if (!is_ground(g)) type_fail(t, "sequencing must end in exp or com");
        return {binary(Constant::Seq, g, t, ctx), g};
      }
      case Term::Assign: {
        GamNet v = expect(t->kids[0], ctx, var_type());
        GamNet write = gam_compose(v, game_projection(var_factors(), 1));
        TypePtr wt = arrow_type(exp_type(), com_type());
        return {apply(write, expect(t->kids[1], ctx, exp_type()), ctx, wt), com_type()};
      }
      case Term::Deref: {
        GamNet v = expect(t->kids[0], ctx, var_type());
        return {gam_compose(v, game_projection(var_factors(), 0)), exp_type()};
      }
      case Term::New: {
        Context c = ctx;
        c.push_back({t->name, var_type()});
        TypePtr g = typecheck(t->kids[0], c);
        if (!is_ground(g)) type_fail(t, "the scope of new must be exp or com");
        auto lam = std::make_shared<Term>(*t);
        lam->kind = Term::Lam;
        lam->type = var_type();
        auto [body, bt] = go(lam, ctx);
        TypePtr ct = constant_type(Constant::NewVar, g);
        return {apply(in_context(constant_net(Constant::NewVar, 0, g), ctx), body, ctx, ct), g};
      }
      case Term::Par: {
        if (!opt_.allow_parallel) type_fail(t, "parallel composition is disabled");
        return {binary(Constant::Par, com_type(), t, ctx), com_type()};
      }
      case Term::At: {
        auto [g, ty] = kid(0);
        place(g.net, t->name);
        return {g, ty};
      }
    }
    type_fail(t, "unknown term");
  }

 private:
  static std::vector<GameInterface> arenas(const Context& ctx) {
    std::vector<GameInterface> out;
    for (auto& [x, ty] : ctx) out.push_back(arena_of(ty));
    return out;
  }

  static GameInterface context_arena(const Context& ctx) {
    GameInterface g;
    for (auto& a : arenas(ctx)) g = game_tensor(g, a);
    return g;
  }

  static std::vector<GameInterface> var_factors() {
    return {arena_of(exp_type()), arena_of(arrow_type(exp_type(), com_type()))};
  }

  GamNet expect(const TermPtr& t, const Context& ctx, const TypePtr& ty) {
    auto [g, got] = go(t, ctx);
    want(t, got, ty);
    return g;
  }

  // A closed constant read in context Γ: the context is absorbed.
  static GamNet in_context(const GamNet& c, const Context& ctx) {
    if (ctx.empty()) return c;
    GameInterface g = context_arena(ctx);
    GamNet s{sink(g.base), g, empty_arena()};
    return gam_tensor(s, c);
  }

  // δ ; (f ⊗ x) ; eval
  GamNet apply(const GamNet& f, const GamNet& x, const Context& ctx, const TypePtr& ft) {
    GamNet both = gam_tensor(f, x);
    if (!ctx.empty()) both = gam_compose(diagonal_net(context_arena(ctx)), both);
    return gam_compose(both, eval_net(arena_of(ft->left), arena_of(ft->right)));
  }

  GamNet binary(Constant c, const TypePtr& g, const TermPtr& t, const Context& ctx) {
    TypePtr ct = constant_type(c, g);
    GamNet k = in_context(constant_net(c, 0, g), ctx);
    k = apply(k, expect(t->kids[0], ctx, ct->left), ctx, ct);
    return apply(k, expect(t->kids[1], ctx, ct->right->left), ctx, ct->right);
  }

  CompileOptions opt_;
};

}  // namespace

GamNet compile(const TermPtr& t, const Context& ctx, const CompileOptions& opt) {
  typecheck(t, ctx);
  return Compiler(opt).go(t, ctx).first;
}

// ---------------------------------------------------------------- reference interpreter

namespace {

struct Env;
using EnvPtr = std::shared_ptr<const Env>;

struct Val {
  enum Kind { Int, Done, Closure, Succ, Loc } kind = Done;
  std::int64_t n = 0;
  std::string param;
  TermPtr body;
  EnvPtr env;
  std::shared_ptr<std::int64_t> loc;
};

struct Thunk {
  TermPtr t;
  EnvPtr env;
  std::optional<Val> fixed;
};

struct Env {
  std::string name;
  std::shared_ptr<const Thunk> thunk;
  EnvPtr next;
};

EnvPtr bind(EnvPtr env, std::string x, std::shared_ptr<const Thunk> th) {
  return std::make_shared<const Env>(Env{std::move(x), std::move(th), std::move(env)});
}

class Interp {
 public:
  explicit Interp(std::uint64_t fuel) : fuel_(fuel) {}

  Val eval(const TermPtr& t, const EnvPtr& env) {
    if (fuel_-- == 0) throw Timeout("evaluation ran out of fuel");
    if (++depth_ > kMaxDepth) throw Timeout("evaluation nested too deeply");
    struct Guard {
      int& d;
      ~Guard() { --d; }
    } guard{depth_};
    auto k = [&](std::size_t i) { return eval(t->kids[i], env); };
    auto num = [&](std::size_t i) { return want_int(k(i)); };
    switch (t->kind) {
      case Term::Var: {
        for (const Env* e = env.get(); e; e = e->next.get())
          if (e->name == t->name) return force(*e->thunk);
        throw Error("unbound variable " + t->name);
      }
      case Term::Lam: return Val{Val::Closure, 0, t->name, t->kids[0], env, nullptr};
      case Term::App: return apply(k(0), std::make_shared<const Thunk>(Thunk{t->kids[1], env, std::nullopt}));
      case Term::Fix: return apply(k(0), std::make_shared<const Thunk>(Thunk{t, env, std::nullopt}));
      case Term::Int: return int_val(t->value);
      case Term::Skip: return Val{};
      case Term::Succ: return Val{Val::Succ, 0, {}, nullptr, nullptr, nullptr};
      case Term::Add: {
        auto a = num(0);
        return int_val(wrap(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(num(1))));
      }
      case Term::Sub: {
        auto a = num(0);
        return int_val(wrap(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(num(1))));
      }
      case Term::Mul: {
        auto a = num(0);
        return int_val(wrap(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(num(1))));
      }
      case Term::If: return num(0) == 0 ? k(1) : k(2);
      case Term::Seq:
        k(0);
        return k(1);
      case Term::Assign: {
        Val l = k(0);
        std::int64_t v = num(1);
        *want_loc(l) = v;
        return Val{};
      }
      case Term::Deref: return int_val(*want_loc(k(0)));
      case Term::New: {
        Val l{Val::Loc, 0, {}, nullptr, nullptr, std::make_shared<std::int64_t>(0)};
        auto th = std::make_shared<const Thunk>(Thunk{nullptr, nullptr, l});
        return eval(t->kids[0], bind(env, t->name, th));
      }
      case Term::Par: throw Error("parallel composition is outside the sequential fragment");
      case Term::At: return k(0);
    }
    throw Error("unknown term");
  }

 private:
  static constexpr int kMaxDepth = 200000;

  static std::int64_t wrap(std::uint64_t v) { return static_cast<std::int64_t>(v); }
  static Val int_val(std::int64_t n) { return Val{Val::Int, n, {}, nullptr, nullptr, nullptr}; }
  static std::int64_t want_int(const Val& v) {
    if (v.kind != Val::Int) throw Error("expected an integer");
    return v.n;
  }
  static std::shared_ptr<std::int64_t> want_loc(const Val& v) {
    if (v.kind != Val::Loc) throw Error("expected a variable");
    return v.loc;
  }

  Val force(const Thunk& th) { return th.fixed ? *th.fixed : eval(th.t, th.env); }

  Val apply(const Val& f, std::shared_ptr<const Thunk> arg) {
    if (f.kind == Val::Succ) return int_val(wrap(static_cast<std::uint64_t>(want_int(force(*arg))) + 1));
    if (f.kind != Val::Closure) throw Error("applying a non-function");
    return eval(f.body, bind(f.env, f.param, std::move(arg)));
  }

  std::uint64_t fuel_;
  int depth_ = 0;
};

}  // namespace

namespace {

// Runs f on a thread with a stack large enough for kMaxDepth nested evaluations.
void with_big_stack(const std::function<void()>& f) {
  pthread_attr_t attr;
  pthread_attr_init(&attr);
  pthread_attr_setstacksize(&attr, std::size_t{1} << 30);
  struct Job {
    const std::function<void()>* f;
    std::exception_ptr err;
  } job{&f, nullptr};
  pthread_t th;
  auto body = [](void* p) -> void* {
    auto* j = static_cast<Job*>(p);
    try {
      (*j->f)();
    } catch (...) {
      j->err = std::current_exception();
    }
    return nullptr;
  };
  int rc = pthread_create(&th, &attr, body, &job);
  pthread_attr_destroy(&attr);
  if (rc != 0) {
    f();
    return;
  }
  pthread_join(th, nullptr);
  if (job.err) std::rethrow_exception(job.err);
}

}  // namespace

Value reference_interpret(const TermPtr& t, std::uint64_t fuel) {
  TypePtr ty = typecheck(t);
  if (!is_ground(ty)) throw PreconditionError("reference_interpret needs a program of type exp or com");
  Value out;
  with_big_stack([&] {
    Val v = Interp(fuel).eval(t, nullptr);
    out = v.kind == Val::Int ? Value{Value::Int, v.n} : Value{Value::Done, 0};
  });
  return out;
}

}  // namespace gamnet::ica
