#include "gamnet/combinators.hpp"

namespace gamnet {

namespace {

void merge(Permutation& into, const Permutation& from) {
  for (auto [x, y] : from.ports) into.ports[x] = y;
}

GameInterface gcopy(const GameInterface& a, Permutation& into) {
  auto [c, pi] = fresh_copy(a);
  merge(into, pi);
  return c;
}

}  // namespace

void add_copycat(Engine& e, const GameInterface& s, const GameInterface& t, const Permutation& pi,
                 const std::vector<Instr>& init) {
  Permutation inv = pi.inverse();
  for (auto [x, l] : t.base.ports()) {
    if (l != Polarity::O) continue;
    std::vector<Instr> pre = t.is_initial(x) ? init : t.is_question(x) ? macro::ccq() : macro::cca();
    e.port_map[x] = seq(pre, spark(inv(x)));
  }
  for (auto [y, l] : s.base.ports()) {
    if (l != Polarity::P) continue;
    e.port_map[y] = seq(s.is_question(y) ? macro::ccq() : macro::cca(), spark(pi(y)));
  }
}

Engine copycat_engine(const std::vector<Instr>& init, const GameInterface& a, const Permutation& pi) {
  GameInterface t = rename(pi, a);
  Engine e;
  e.iface = arrow(a.base, t.base);
  add_copycat(e, a, t, pi, init);
  return e;
}

Net wrap_engine(const Engine& e, const Permutation& to_ext) {
  Net n;
  n.engines.push_back(e);
  n.external = rename(to_ext, e.iface);
  for (auto [x, l] : e.iface.ports()) {
    if (l == Polarity::P)
      n.chi[x] = to_ext(x);
    else
      n.chi[to_ext(x)] = x;
  }
  return n;
}

std::pair<Net, Permutation> wrap_engine(const Engine& e) {
  auto [ext, pi] = fresh_copy(e.iface);
  return {wrap_engine(e, pi), pi};
}

GamNet copycat_net(const GameInterface& a, const Permutation& pi) {
  Permutation rs, rt;
  GameInterface t = rename(pi, a);
  GameInterface si = gcopy(a, rs), ti = gcopy(t, rt);
  Permutation s_to_t;
  for (auto [x, y] : rs.ports) s_to_t.ports[y] = rt(pi(x));
  Engine e;
  e.iface = arrow(si.base, ti.base);
  add_copycat(e, si, ti, s_to_t, macro::cci());
  Permutation back = rs.inverse();
  merge(back, rt.inverse());
  return GamNet{wrap_engine(e, back), a, t};
}

GamNet copycat_net(const GameInterface& a) {
  auto [copy, pi] = fresh_copy(a);
  return copycat_net(a, pi);
}

Engine composition_operator(const GameInterface& a, const GameInterface& b, const GameInterface& b2,
                            const GameInterface& c, const GameInterface& a2, const GameInterface& c2,
                            const Permutation& a2_to_a, const Permutation& b_to_b2, const Permutation& c_to_c2) {
  Engine e;
  e.iface = arrow(tensor(arrow(a.base, b.base), arrow(b2.base, c.base)), arrow(a2.base, c2.base));
  add_copycat(e, a2, a, a2_to_a, macro::exq());
  add_copycat(e, b, b2, b_to_b2, macro::exi());
  add_copycat(e, c, c2, c_to_c2, macro::cci());
  return e;
}

GamNet gam_tensor(const GamNet& f, const GamNet& g) {
  return GamNet{tensor_nets(f.net, g.net), game_tensor(f.dom, g.dom), game_tensor(f.cod, g.cod)};
}

GamNet gam_compose(const GamNet& f, const GamNet& g) {
  auto pb = structural_match(f.cod, g.dom);
  if (!pb) throw PreconditionError("gam_compose: codomain and domain do not match");

  // ai..c2i are the mediating engine's own names; to_ext renames them for the wrapper
  Permutation ra, rb, rb2, rc, ra2, rc2;
  GameInterface ai = gcopy(f.dom, ra), bi = gcopy(f.cod, rb), b2i = gcopy(g.dom, rb2), ci = gcopy(g.cod, rc);
  GameInterface a2i = gcopy(ai, ra2), c2i = gcopy(ci, rc2);
  Permutation b_to_b2;
  for (auto [x, y] : rb.ports) b_to_b2.ports[y] = rb2((*pb)(x));

  Engine k = composition_operator(ai, bi, b2i, ci, a2i, c2i, ra2.inverse(), b_to_b2, rc2);

  Permutation to_ext, mid;
  for (auto* r : {&ra, &rb, &rb2, &rc})
    for (auto [outer, inner] : r->ports) {
      PortName x = fresh_port_name(port_minter());
      to_ext.ports[inner] = x;
      mid.ports[outer] = x;
    }
  Permutation res;
  GameInterface a2x = gcopy(a2i, res), c2x = gcopy(c2i, res);
  merge(to_ext, res);
  Net knet = wrap_engine(k, to_ext);

  Net n = tensor_nets(f.net, g.net);
  Net out = compose_nets(n, n.external, knet, rename(mid, n.external), mid);
  return GamNet{out, a2x, c2x};
}

GamNet naive_compose(const GamNet& f, const GamNet& g) {
  auto pb = structural_match(f.cod, g.dom);
  if (!pb) throw PreconditionError("naive_compose: codomain and domain do not match");
  return GamNet{compose_nets(f.net, f.cod.base, g.net, g.dom.base, *pb), f.dom, g.cod};
}

Engine diagonal_engine(const GameInterface& a1, const Permutation& pi12, const Permutation& pi13,
                       DiagonalVariant v) {
  GameInterface a2 = rename(pi12, a1), a3 = rename(pi13, a1);
  Permutation inv12 = pi12.inverse(), inv13 = pi13.inverse();
  // 0,3 <- get 0 first, so the new cell records the justifier's tag
  std::vector<Instr> q = v == DiagonalVariant::Propagating ? std::vector<Instr>{ins::Get{0, 3, 0}, ins::New{1, 1, 3}}
                                                           : macro::ccq();
  Engine e;
  e.iface = arrow(a1.base, tensor(a2.base, a3.base));
  for (auto [x, l] : a1.base.ports()) {
    if (l != Polarity::P) continue;
    auto route = ifzero(3, spark(pi12(x)), spark(pi13(x)));
    e.port_map[x] = seq(a1.is_question(x) ? q : macro::cca(), route);
  }
  for (int side = 0; side < 2; ++side) {
    const GameInterface& ai = side == 0 ? a2 : a3;
    const Permutation& inv = side == 0 ? inv12 : inv13;
    for (auto [x, l] : ai.base.ports()) {
      if (l != Polarity::O) continue;
      std::vector<Instr> pre;
      if (ai.is_initial(x)) {
        pre = {ins::Set{3, side}};
        auto c = macro::cci();
        pre.insert(pre.end(), c.begin(), c.end());
      } else {
        pre = ai.is_question(x) ? q : macro::cca();
      }
      e.port_map[x] = seq(pre, spark(inv(x)));
    }
  }
  return e;
}

GamNet diagonal_net(const GameInterface& a, DiagonalVariant v) {
  Permutation r1, r2, r3;
  GameInterface a1 = gcopy(a, r1);
  GameInterface a2 = gcopy(a1, r2), a3 = gcopy(a1, r3);
  Engine e = diagonal_engine(a1, r2, r3, v);
  auto [n, ext] = wrap_engine(e);
  return GamNet{n, rename(ext, a1), game_tensor(rename(ext, a2), rename(ext, a3))};
}

Engine fixpoint_engine(const GameInterface& out, const Permutation& to_in, const Permutation& to_res) {
  using namespace ins;
  GameInterface in = rename(to_in, out), res = rename(to_res, out);
  Permutation from_in = to_in.inverse(), from_res = to_res.inverse();
  auto under_initial = [&](PortName x) {
    for (auto i : out.initials)
      if (out.enables(i, x)) return true;
    return false;
  };
  // Call cells: the first call (asked from res) is c ↦ (root, 1); a recursive
  // call (asked from in) is c ↦ (x, 0) with x ↦ (caller, root).
  Engine e;
  e.iface = arrow(out.base, tensor(in.base, res.base));
  std::vector<Instr> q = {Get{0, 3, 0}, New{1, 1, 3}};
  for (auto [x, l] : out.base.ports()) {
    if (l != Polarity::P) continue;
    auto route = [&](const std::vector<Instr>& pre_in, const std::vector<Instr>& pre_res) {
      return ifzero(3, seq(pre_in, spark(to_in(x))), seq(pre_res, spark(to_res(x))));
    };
    if (out.is_question(x) && under_initial(x))
      e.port_map[x] = seq(std::vector<Instr>{Get{0, 3, 0}}, route({Get{0, kNull, 0}, New{1, 1, 3}}, {New{1, 1, 3}}));
    else if (out.is_question(x))
      e.port_map[x] = seq(q, route({}, {}));
    else if (under_initial(x))
      e.port_map[x] = seq(macro::cca(), route({Get{1, 3, 0}, Free{0}, Flip{0, 1}, Set{3, std::nullopt}}, {}));
    else
      e.port_map[x] = seq(macro::cca(), route({}, {}));
  }
  for (auto [y, l] : res.base.ports()) {
    if (l != Polarity::O) continue;
    PortName x = from_res(y);
    if (res.is_initial(y)) {
      std::vector<Instr> pre{Set{3, 1}};
      auto c = macro::cci();
      pre.insert(pre.end(), c.begin(), c.end());
      e.port_map[y] = seq(pre, spark(x));
    } else {
      e.port_map[y] = seq(res.is_question(y) ? q : macro::cca(), spark(x));
    }
  }
  for (auto [y, l] : in.base.ports()) {
    if (l != Polarity::O) continue;
    PortName x = from_in(y);
    if (in.is_initial(y)) {
      // r0 = root, r1 = caller, r2 = data
      Code call = seq({New{3, 1, 0}, Set{1, 0}, New{1, 3, 1}, Set{3, std::nullopt}}, spark(x));
      e.port_map[y] = seq(std::vector<Instr>{Get{0, 3, 0}}, ifzero(3, seq(std::vector<Instr>{Get{kNull, 0, 0}}, call), call));
    } else {
      e.port_map[y] = seq(in.is_question(y) ? q : macro::cca(), spark(x));
    }
  }
  return e;
}

GamNet fixpoint_net(const GameInterface& a) {
  Permutation r1, r2, r3;
  GameInterface out = gcopy(a, r1);
  GameInterface in = gcopy(out, r2), res = gcopy(out, r3);
  Engine e = fixpoint_engine(out, r2, r3);
  auto [n, ext] = wrap_engine(e);
  return GamNet{n, empty_arena(), game_arrow(game_arrow(rename(ext, in), rename(ext, out)), rename(ext, res))};
}

GamNet eval_net(const GameInterface& a, const GameInterface& b) {
  Permutation r, pi;
  GameInterface ai = gcopy(a, r), bi = gcopy(b, r);
  GameInterface at = gcopy(ai, pi), bt = gcopy(bi, pi);
  GameInterface si = game_arrow(ai, bi);
  Engine e = copycat_engine(macro::cci(), si, pi);
  auto [n, ext] = wrap_engine(e);
  return GamNet{n, game_tensor(rename(ext, si), rename(ext, at)), rename(ext, bt)};
}

GamNet game_projection(const std::vector<GameInterface>& factors, std::size_t i) {
  if (i >= factors.size()) throw PreconditionError("game_projection: index out of range");
  Permutation r;
  std::vector<GameInterface> fi;
  for (auto& f : factors) fi.push_back(gcopy(f, r));
  Permutation pi;
  GameInterface ti = gcopy(fi[i], pi);
  Engine e;
  GameInterface dom;
  for (auto& f : fi) dom = game_tensor(dom, f);
  e.iface = arrow(dom.base, ti.base);
  add_copycat(e, fi[i], ti, pi, macro::cci());
  for (std::size_t j = 0; j < fi.size(); ++j) {
    if (j == i) continue;
    for (auto [x, l] : fi[j].base.ports())
      if (l == Polarity::P) e.port_map[x] = end_code();
  }
  auto [n, ext] = wrap_engine(e);
  return GamNet{n, rename(ext, dom), rename(ext, ti)};
}

void place(Net& s, const std::string& node) {
  for (auto& e : s.engines)
    if (e.placement.empty()) e.placement = node;
}

}  // namespace gamnet
