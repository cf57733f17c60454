#include "gamnet/net.hpp"

#include <algorithm>
#include <functional>

namespace gamnet {

std::string to_string(const Trace& t) {
  if (t.empty()) return "ε";
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) s += " :: ";
    s += polarity_char(t[i].pol);
    s += ' ';
    s += to_string(t[i].msg.port);
    for (auto& d : t[i].msg.payload) s += " " + to_string(d);
  }
  return s;
}

ValidationReport validate_net(const Net& s) {
  ValidationReport r;
  std::set<PortName> seen;
  auto claim = [&](PortName a, const std::string& who) {
    if (!seen.insert(a).second) r.problems.push_back("port " + to_string(a) + " reused by " + who);
  };
  std::set<PortName> dom, cod;
  for (std::size_t i = 0; i < s.engines.size(); ++i) {
    auto& e = s.engines[i];
    auto er = validate_engine(e);
    for (auto& p : er.problems) r.problems.push_back("engine " + std::to_string(i) + ": " + p);
    for (auto [a, l] : e.iface.ports()) {
      claim(a, "engine " + std::to_string(i));
      (l == Polarity::P ? dom : cod).insert(a);
    }
  }
  for (auto [a, l] : s.external.ports()) {
    claim(a, "external interface");
    (l == Polarity::O ? dom : cod).insert(a);
  }
  std::set<PortName> img;
  for (auto [a, b] : s.chi) {
    if (!dom.count(a)) r.problems.push_back("chi defined outside its domain at " + to_string(a));
    if (!cod.count(b)) r.problems.push_back("chi maps " + to_string(a) + " outside its codomain to " + to_string(b));
    if (!img.insert(b).second) r.problems.push_back("chi not injective at " + to_string(b));
  }
  for (auto a : dom)
    if (!s.chi.count(a)) r.problems.push_back("chi undefined at " + to_string(a));
  for (auto b : cod)
    if (!img.count(b)) r.problems.push_back("chi misses " + to_string(b));
  return r;
}

Net singleton(const Engine& e) {
  auto [ext, pi] = fresh_copy(e.iface);
  Net n;
  n.engines.push_back(e);
  n.external = ext;
  for (auto [a, l] : e.iface.ports()) {
    if (l == Polarity::P)
      n.chi[a] = pi(a);
    else
      n.chi[pi(a)] = a;
  }
  return n;
}

NetConfig initial_net(const Net& s) {
  NetConfig c;
  c.engines.resize(s.engines.size());
  return c;
}

NetIndex::NetIndex(const Net& s) : net_(&s) {
  for (auto& [a, b] : s.chi) chi_[a] = b;
  for (std::size_t i = 0; i < s.engines.size(); ++i)
    for (auto a : s.engines[i].iface.with(Polarity::O)) receiver_[a] = static_cast<int>(i);
}

int NetIndex::receiver(PortName a) const {
  auto it = receiver_.find(a);
  return it == receiver_.end() ? -1 : it->second;
}

PortName NetIndex::route(PortName a) const {
  auto it = chi_.find(a);
  return it == chi_.end() ? a : it->second;
}

std::vector<std::pair<Label, NetConfig>> net_step(const NetConfig& n, const Net& s) {
  NetIndex idx(s);
  std::vector<std::pair<Label, NetConfig>> out;
  for (std::size_t i = 0; i < s.engines.size(); ++i) {
    for (std::size_t t = 0; t < n.engines[i].threads.size(); ++t) {
      NetConfig next = n;
      FreshPointer fresh = [&next] { return PointerName{make_atom(kExploreTag, next.next_fresh++)}; };
      ThreadStep st = step_thread(next.engines[i], t, s.engines[i], idx.chi(), fresh);
      if (st.out) next.pending.push_back(*st.out);
      out.emplace_back(Label{}, std::move(next));
    }
  }
  for (std::size_t m = 0; m < n.pending.size(); ++m) {
    const Message& msg = n.pending[m];
    int r = idx.receiver(msg.port);
    if (r < 0 && !idx.external_p(msg.port)) continue;
    NetConfig next = n;
    next.pending.erase(next.pending.begin() + static_cast<std::ptrdiff_t>(m));
    if (r >= 0) {
      receive_in_place(next.engines[r], s.engines[r], msg);
      out.emplace_back(Label{}, std::move(next));
    } else {
      out.emplace_back(Label{LabelKind::Output, msg}, std::move(next));
    }
  }
  return out;
}

NetConfig net_input(const NetConfig& n, const NetIndex& idx, const Message& m) {
  if (!idx.external_o(m.port)) throw PreconditionError("input on non-O external port " + to_string(m.port));
  NetConfig next = n;
  next.pending.push_back(Message{idx.route(m.port), m.payload});
  return next;
}

Net identity_net(const Interface& a, const Permutation& pi) {
  Net n;
  Interface copy = rename(pi, a);
  n.external = arrow(a, copy);
  for (auto [x, l] : a.ports()) {
    if (l == Polarity::P)
      n.chi[x] = pi(x);
    else
      n.chi[pi(x)] = x;
  }
  return n;
}

std::pair<Net, Permutation> identity_net(const Interface& a) {
  auto [copy, pi] = fresh_copy(a);
  return {identity_net(a, pi), pi};
}

Net compose_nets(const Net& f, const Interface& b, const Net& g, const Interface& b2, const Permutation& pi) {
  if (b.size() != b2.size()) throw PreconditionError("compose: interface sizes differ");
  for (auto [x, l] : b.ports()) {
    if (!f.external.contains(x) || f.external.polarity(x) != l)
      throw PreconditionError("compose: " + to_string(x) + " is not a matching port of f");
    PortName y = pi(x);
    if (!b2.contains(y) || b2.polarity(y) != l) throw PreconditionError("compose: shape mismatch at " + to_string(x));
    if (!g.external.contains(y) || g.external.polarity(y) != dual(l))
      throw PreconditionError("compose: " + to_string(y) + " is not a matching port of g");
  }
  std::set<PortName> own;
  for (auto& e : f.engines)
    for (auto [x, _] : e.iface.ports()) own.insert(x);
  for (auto& e : g.engines)
    for (auto [x, _] : e.iface.ports())
      if (own.count(x)) throw PreconditionError("compose: nets share engine port " + to_string(x));
  Permutation inv = pi.inverse();
  Net out;
  out.engines = f.engines;
  out.engines.insert(out.engines.end(), g.engines.begin(), g.engines.end());
  for (auto [x, l] : f.external.ports())
    if (!b.contains(x)) out.external.add(l, x);
  for (auto [x, l] : g.external.ports())
    if (!b2.contains(x)) out.external.add(l, x);

  const std::size_t limit = 2 * b.size() + 2;
  auto follow = [&](PortName x) {
    for (std::size_t hops = 0;; ++hops) {
      if (hops > limit) throw PreconditionError("compose: closed wiring loop through the middle interface");
      if (b.contains(x))
        x = g.chi.at(pi(x));
      else if (b2.contains(x))
        x = f.chi.at(inv(x));
      else
        return x;
    }
  };
  for (auto [a, x] : f.chi)
    if (!b.contains(a)) out.chi[a] = follow(x);
  for (auto [a, x] : g.chi)
    if (!b2.contains(a)) out.chi[a] = follow(x);
  return out;
}

Net compose_nets(const Net& f, const Interface& b, const Net& g, const Interface& b2) {
  auto pi = same_shape(b, b2);
  if (!pi) throw PreconditionError("compose: interfaces have different shapes");
  return compose_nets(f, b, g, b2, *pi);
}

Net tensor_nets(const Net& f, const Net& g) {
  Net out = f;
  out.engines.insert(out.engines.end(), g.engines.begin(), g.engines.end());
  out.external = tensor(f.external, g.external);
  for (auto [a, b] : g.chi)
    if (!out.chi.emplace(a, b).second) throw PreconditionError("tensor: overlapping connectivity at " + to_string(a));
  auto r = validate_net(out);
  if (!r.ok()) throw PreconditionError("tensor: " + r.problems.front());
  return out;
}

Net curry(const Net& f, const Interface& a, const Interface& b, const Interface& c) {
  if (!(f.external == arrow(tensor(a, b), c))) throw PreconditionError("curry: interface does not decompose");
  return f;
}

Net uncurry(const Net& f, const Interface& a, const Interface& b, const Interface& c) {
  if (!(f.external == arrow(a, arrow(b, c)))) throw PreconditionError("uncurry: interface does not decompose");
  return f;
}

Engine sink_engine(const Interface& a) {
  Engine e;
  e.iface = a;
  for (auto x : a.with(Polarity::O)) e.port_map[x] = end_code();
  return e;
}

Net sink(const Interface& a) {
  Interface ext = dual(a);
  auto [inner, pi] = fresh_copy(ext);
  Net n;
  n.engines.push_back(sink_engine(inner));
  n.external = ext;
  for (auto [x, l] : ext.ports()) {
    if (l == Polarity::P)
      n.chi[pi(x)] = x;
    else
      n.chi[x] = pi(x);
  }
  return n;
}

std::pair<Net, Permutation> projection(const Interface& keep, const Interface& drop) {
  auto [id, pi] = identity_net(keep);
  Net n = tensor_nets(id, sink(drop));
  return {n, pi};
}

Net combine_groups(const Net& s, const std::vector<std::vector<int>>& groups) {
  Net out;
  out.chi = s.chi;
  out.external = s.external;
  std::vector<bool> used(s.engines.size(), false);
  for (auto& grp : groups) {
    if (grp.empty()) continue;
    Engine e;
    e.placement = s.engines.at(grp.front()).placement;
    for (int i : grp) {
      if (used.at(i)) throw PreconditionError("combine: engine listed twice");
      used[i] = true;
      auto& src = s.engines[i];
      e.iface = tensor(e.iface, src.iface);
      for (auto& [p, c] : src.port_map) e.port_map[p] = c;
    }
    out.engines.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < s.engines.size(); ++i)
    if (!used[i]) out.engines.push_back(s.engines[i]);
  return out;
}

Net combine_engines(const Net& s) {
  if (s.engines.size() != 2) throw PreconditionError("combine_engines: expected exactly two engines");
  return combine_groups(s, {{0, 1}});
}

Net rename_net(const Net& s, const Permutation& pi) {
  Net out;
  for (auto& e : s.engines) out.engines.push_back(rename_engine(e, pi));
  for (auto [a, b] : s.chi) out.chi[pi(a)] = pi(b);
  out.external = rename(pi, s.external);
  return out;
}

namespace {

class IsoSearch {
 public:
  IsoSearch(const Net& a, const Net& b) : a_(a), b_(b) {
    for (auto [x, y] : b.chi) chib_inv_[y] = x;
    for (std::size_t i = 0; i < b.engines.size(); ++i)
      for (auto [x, l] : b.engines[i].iface.ports()) owner_b_[x] = static_cast<int>(i);
  }

  std::optional<Permutation> run() {
    if (a_.engines.size() != b_.engines.size()) return std::nullopt;
    if (a_.external.with(Polarity::O).size() != b_.external.with(Polarity::O).size()) return std::nullopt;
    if (a_.external.with(Polarity::P).size() != b_.external.with(Polarity::P).size()) return std::nullopt;
    State st;
    st.engine_used.assign(b_.engines.size(), false);
    if (match_engine(st, 0)) return st.pi;
    return std::nullopt;
  }

 private:
  struct State {
    Permutation pi;
    std::set<PortName> used;
    std::vector<bool> engine_used;
    std::vector<int> engine_map;
  };

  bool bind(State& st, PortName x, PortName y) const {
    auto it = st.pi.ports.find(x);
    if (it != st.pi.ports.end()) return it->second == y;
    if (st.used.count(y)) return false;
    st.pi.ports[x] = y;
    st.used.insert(y);
    return true;
  }

  bool unify(State& st, const Code& ca, const Code& cb, int eb) const {
    if (ca->node.index() != cb->node.index()) return false;
    if (auto* s = std::get_if<SeqNode>(&ca->node)) {
      auto& t = std::get<SeqNode>(cb->node);
      if (s->instr.index() != t.instr.index()) return false;
      if (auto* f = std::get_if<ins::Fork>(&s->instr)) {
        Instr ta = t.instr;
        PortName q = std::get<ins::Fork>(ta).port;
        if (!b_.engines[eb].iface.is_p(q) || !bind(st, f->port, q)) return false;
      } else if (!code_equal(seq(s->instr, end_code()), seq(t.instr, end_code()))) {
        return false;
      }
      return unify(st, s->next, t.next, eb);
    }
    if (auto* z = std::get_if<IfZeroNode>(&ca->node)) {
      auto& y = std::get<IfZeroNode>(cb->node);
      return z->reg == y.reg && unify(st, z->zero, y.zero, eb) && unify(st, z->succ, y.succ, eb);
    }
    if (auto* sp = std::get_if<SparkNode>(&ca->node)) {
      PortName q = std::get<SparkNode>(cb->node).port;
      return b_.engines[eb].iface.is_p(q) && bind(st, sp->port, q);
    }
    return true;
  }

  bool match_engine(State& st, std::size_t i) const {
    if (i == a_.engines.size()) return match_external(st);
    auto& ea = a_.engines[i];
    for (std::size_t j = 0; j < b_.engines.size(); ++j) {
      if (st.engine_used[j]) continue;
      auto& eb = b_.engines[j];
      if (ea.iface.with(Polarity::O).size() != eb.iface.with(Polarity::O).size() ||
          ea.iface.with(Polarity::P).size() != eb.iface.with(Polarity::P).size())
        continue;
      State next = st;
      next.engine_used[j] = true;
      next.engine_map.push_back(static_cast<int>(j));
      if (match_oports(next, i, static_cast<int>(j), ea.iface.with(Polarity::O), 0)) {
        st = next;
        return true;
      }
    }
    return false;
  }

  bool match_oports(State& st, std::size_t i, int j, const std::vector<PortName>& os, std::size_t k) const {
    if (k == os.size()) return match_pports(st, i, j);
    auto& ea = a_.engines[i];
    auto& eb = b_.engines[j];
    for (auto y : eb.iface.with(Polarity::O)) {
      if (st.used.count(y)) continue;
      State next = st;
      if (!bind(next, os[k], y)) continue;
      if (!unify(next, ea.port_map.at(os[k]), eb.port_map.at(y), j)) continue;
      if (match_oports(next, i, j, os, k + 1)) {
        st = next;
        return true;
      }
    }
    return false;
  }

  bool match_pports(State& st, std::size_t i, int j) const {
    auto& ea = a_.engines[i];
    auto& eb = b_.engines[j];
    for (auto x : ea.iface.with(Polarity::P)) {
      if (st.pi.ports.count(x)) continue;
      for (auto y : eb.iface.with(Polarity::P)) {
        if (st.used.count(y)) continue;
        State next = st;
        bind(next, x, y);
        if (match_pports(next, i, j)) {
          st = next;
          return true;
        }
      }
      return false;
    }
    return match_engine(st, i + 1);
  }

  // Ports reachable from engine assignments are forced; pure wiring between
  // external ports is searched.
  bool match_external(State& st) const {
    for (auto [x, y] : a_.chi) {
      auto px = st.pi.ports.find(x);
      auto py = st.pi.ports.find(y);
      if (px != st.pi.ports.end()) {
        PortName img = b_.chi.count(px->second) ? b_.chi.at(px->second) : PortName{};
        if (!b_.chi.count(px->second) || !bind(st, y, img)) return false;
      } else if (py != st.pi.ports.end()) {
        auto it = chib_inv_.find(py->second);
        if (it == chib_inv_.end() || !bind(st, x, it->second)) return false;
      }
    }
    return match_wires(st);
  }

  bool match_wires(State& st) const {
    for (auto [x, y] : a_.chi) {
      if (st.pi.ports.count(x)) continue;
      for (auto [u, v] : b_.chi) {
        if (st.used.count(u) || st.used.count(v)) continue;
        if (!b_.external.contains(u) || !b_.external.contains(v)) continue;
        State next = st;
        if (!bind(next, x, u) || !bind(next, y, v)) continue;
        if (match_wires(next)) {
          st = next;
          return true;
        }
      }
      return false;
    }
    return final_check(st);
  }

  bool final_check(const State& st) const {
    for (auto [x, l] : a_.external.ports()) {
      auto it = st.pi.ports.find(x);
      if (it == st.pi.ports.end() || !b_.external.contains(it->second) || b_.external.polarity(it->second) != l)
        return false;
    }
    for (std::size_t i = 0; i < a_.engines.size(); ++i)
      for (auto [x, l] : a_.engines[i].iface.ports()) {
        auto it = st.pi.ports.find(x);
        if (it == st.pi.ports.end()) return false;
        auto ob = owner_b_.find(it->second);
        if (ob == owner_b_.end() || ob->second != st.engine_map[i]) return false;
        if (b_.engines[ob->second].iface.polarity(it->second) != l) return false;
      }
    for (auto [x, y] : a_.chi) {
      auto it = b_.chi.find(st.pi(x));
      if (it == b_.chi.end() || it->second != st.pi(y)) return false;
    }
    return true;
  }

  const Net& a_;
  const Net& b_;
  std::map<PortName, PortName> chib_inv_;
  std::map<PortName, int> owner_b_;
};

}  // namespace

std::optional<Permutation> structurally_equivalent(const Net& a, const Net& b) { return IsoSearch(a, b).run(); }

}  // namespace gamnet
