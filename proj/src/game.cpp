#include "gamnet/game.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace gamnet {

GameInterface base_arena(PortName q, PortName a) {
  GameInterface g;
  g.base.add(Polarity::O, q);
  g.base.add(Polarity::P, a);
  g.questions = {q};
  g.initials = {q};
  g.enabling = {{q, a}};
  g.order = {q, a};
  return g;
}

GameInterface base_arena(NameMinter& minter) {
  PortName q = minter.port();
  PortName a = minter.port();
  return base_arena(q, a);
}

GameInterface empty_arena() { return {}; }

GameInterface game_tensor(const GameInterface& a, const GameInterface& b) {
  GameInterface g;
  g.base = tensor(a.base, b.base);
  g.questions = a.questions;
  g.questions.insert(b.questions.begin(), b.questions.end());
  g.initials = a.initials;
  g.initials.insert(b.initials.begin(), b.initials.end());
  g.enabling = a.enabling;
  g.enabling.insert(b.enabling.begin(), b.enabling.end());
  g.order = a.order;
  g.order.insert(g.order.end(), b.order.begin(), b.order.end());
  return g;
}

GameInterface game_arrow(const GameInterface& a, const GameInterface& b) {
  GameInterface g;
  g.base = arrow(a.base, b.base);
  g.questions = a.questions;
  g.questions.insert(b.questions.begin(), b.questions.end());
  g.initials = b.initials;
  g.enabling = a.enabling;
  g.enabling.insert(b.enabling.begin(), b.enabling.end());
  for (auto x : b.initials)
    for (auto y : a.initials) g.enabling.insert({x, y});
  g.order = a.order;
  g.order.insert(g.order.end(), b.order.begin(), b.order.end());
  return g;
}

GameInterface rename(const Permutation& pi, const GameInterface& a) {
  GameInterface g;
  g.base = rename(pi, a.base);
  for (auto x : a.questions) g.questions.insert(pi(x));
  for (auto x : a.initials) g.initials.insert(pi(x));
  for (auto [x, y] : a.enabling) g.enabling.insert({pi(x), pi(y)});
  for (auto x : a.order) g.order.push_back(pi(x));
  return g;
}

std::pair<GameInterface, Permutation> fresh_copy(const GameInterface& a, NameMinter& minter) {
  Permutation pi;
  for (auto x : a.order) pi.ports[x] = minter.port();
  for (auto& [x, l] : a.base.ports())
    if (!pi.ports.count(x)) pi.ports[x] = minter.port();
  return {rename(pi, a), pi};
}

ValidationReport validate_arena(const GameInterface& a) {
  ValidationReport r;
  for (auto q : a.questions)
    if (!a.base.contains(q)) r.problems.push_back("question " + to_string(q) + " not in base");
  for (auto i : a.initials)
    if (!a.is_question(i) || a.base.polarity(i) != Polarity::O)
      r.problems.push_back("initial " + to_string(i) + " is not an O-question");
  for (auto [x, y] : a.enabling) {
    if (!a.is_question(x)) r.problems.push_back("enabler " + to_string(x) + " is not a question");
    if (a.is_initial(y)) r.problems.push_back("enabled " + to_string(y) + " is initial");
    if (a.base.contains(x) && a.base.contains(y) && a.base.polarity(x) == a.base.polarity(y))
      r.problems.push_back("enabling " + to_string(x) + " -> " + to_string(y) + " keeps polarity");
  }
  if (a.order.size() != a.base.size()) r.problems.push_back("port order does not cover the base");
  return r;
}

bool same_arena(const GameInterface& a, const GameInterface& b) {
  return a.base == b.base && a.questions == b.questions && a.initials == b.initials && a.enabling == b.enabling;
}

std::optional<Permutation> structural_match(const GameInterface& a, const GameInterface& b) {
  if (a.order.size() != b.order.size()) return std::nullopt;
  Permutation pi;
  for (std::size_t i = 0; i < a.order.size(); ++i) pi.ports[a.order[i]] = b.order[i];
  if (!pi.injective()) return std::nullopt;
  if (!same_arena(rename(pi, a), b)) return std::nullopt;
  return pi;
}

const char* condition_name(Condition c) {
  switch (c) {
    case Condition::UniquePointers: return "unique-pointers";
    case Condition::CorrectlyLabelled: return "correctly-labelled";
    case Condition::Justified: return "justified";
    case Condition::WellOpened: return "well-opened";
    case Condition::StrictlyScoped: return "strictly-scoped";
    case Condition::StrictlyNested: return "strictly-nested";
    case Condition::Alternating: return "alternating";
  }
  return "?";
}

std::optional<Condition> condition_from_name(const std::string& s) {
  for (auto c : all_conditions())
    if (s == condition_name(c)) return c;
  return std::nullopt;
}

std::vector<Condition> all_conditions() {
  return {Condition::UniquePointers, Condition::CorrectlyLabelled, Condition::Justified, Condition::WellOpened,
          Condition::StrictlyScoped, Condition::StrictlyNested, Condition::Alternating};
}

std::vector<Condition> legal_conditions() {
  return {Condition::UniquePointers, Condition::CorrectlyLabelled, Condition::Justified, Condition::StrictlyScoped,
          Condition::StrictlyNested};
}

bool LegalityReport::passes(const std::vector<Condition>& cs) const {
  return std::all_of(cs.begin(), cs.end(), [&](Condition c) { return passes(c); });
}

std::optional<PointerName> justifier(const TraceEvent& e) {
  if (auto* p = std::get_if<PointerName>(&e.msg.payload[0])) return *p;
  return std::nullopt;
}

std::optional<PointerName> fresh_name(const TraceEvent& e) {
  if (auto* p = std::get_if<PointerName>(&e.msg.payload[1])) return *p;
  return std::nullopt;
}

std::set<PointerName> cp(const Trace& s) {
  std::set<PointerName> out;
  for (auto& e : s)
    if (auto p = fresh_name(e)) out.insert(*p);
  return out;
}

std::set<PointerName> fp(const Trace& s) {
  std::set<PointerName> c, f;
  for (auto& e : s) {
    if (auto p = justifier(e); p && !c.count(*p)) f.insert(*p);
    if (auto p = fresh_name(e)) c.insert(*p);
  }
  return f;
}

std::set<std::pair<PortName, PointerName>> enabled(const Trace& s, const GameInterface& a) {
  std::set<std::pair<PortName, PointerName>> out;
  for (auto& e : s)
    if (auto p = fresh_name(e))
      for (auto& [x, y] : a.enabling)
        if (x == e.msg.port) out.insert({y, *p});
  return out;
}

LegalityReport check_legal(const Trace& s, const GameInterface& a) {
  LegalityReport r;
  auto fail = [&](Condition c, std::size_t i) {
    auto& slot = r.first_failure[static_cast<int>(c)];
    if (!slot || *slot > i) slot = i;
  };
  std::set<PointerName> ptrs;
  std::set<std::pair<PortName, PointerName>> en;
  std::map<PointerName, std::size_t> question_at;  // fresh name -> index of the question introducing it
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto& e = s[i];
    PortName port = e.msg.port;
    if (!a.base.contains(port)) throw PreconditionError("trace uses port " + to_string(port) + " outside the arena");
    auto p = justifier(e);
    auto p1 = fresh_name(e);
    if (a.base.polarity(port) != e.pol) fail(Condition::CorrectlyLabelled, i);
    if (p1 && ptrs.count(*p1)) fail(Condition::UniquePointers, i);
    if (!a.is_initial(port) && !(p && en.count({port, *p}))) fail(Condition::Justified, i);
    if (a.is_initial(port) && i > 0) fail(Condition::WellOpened, i);
    if (i > 0 && s[i - 1].pol == e.pol) fail(Condition::Alternating, i);

    if (a.is_answer(port) && p) {
      // strictly scoped: nothing later may point at the answered question
      std::set<PointerName> seg_cp;
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        auto pj = justifier(s[j]);
        if (pj && *pj == *p && !seg_cp.count(*p)) {
          fail(Condition::StrictlyScoped, j);
          break;
        }
        if (auto f = fresh_name(s[j])) seg_cp.insert(*f);
      }
      // strictly nested: questions hereditarily opened under the answered one are closed first
      auto q = question_at.find(*p);
      if (q != question_at.end()) {
        for (std::size_t j = q->second + 1; j < i; ++j) {
          auto pj = justifier(s[j]);
          auto fj = fresh_name(s[j]);
          if (!a.is_question(s[j].msg.port) || !pj || *pj != *p || !fj) continue;
          bool answered = false;
          for (std::size_t m = j + 1; m < i; ++m) {
            auto pm = justifier(s[m]);
            if (a.is_answer(s[m].msg.port) && pm && *pm == *fj) answered = true;
          }
          if (!answered) fail(Condition::StrictlyNested, i);
        }
      }
    }

    if (p) ptrs.insert(*p);
    if (p1) {
      ptrs.insert(*p1);
      if (a.is_question(port)) question_at.emplace(*p1, i);
      for (auto& [x, y] : a.enabling)
        if (x == port) en.insert({y, *p1});
    }
  }
  return r;
}

bool is_legal(const Trace& s, const GameInterface& a) { return check_legal(s, a).passes(legal_conditions()); }

std::set<std::pair<PortName, PointerName>> pending_questions(const Trace& s, const GameInterface& a) {
  std::set<std::pair<PortName, PointerName>> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!a.is_question(s[i].msg.port)) continue;
    auto f = fresh_name(s[i]);
    if (!f) continue;
    bool answered = false;
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      auto pj = justifier(s[j]);
      if (a.is_answer(s[j].msg.port) && pj && *pj == *f) answered = true;
    }
    if (!answered) out.insert({s[i].msg.port, *f});
  }
  return out;
}

Trace delete_ports(const Trace& s, const std::set<PortName>& ports) {
  Trace out;
  for (auto& e : s)
    if (!ports.count(e.msg.port)) out.push_back(e);
  return out;
}

Trace reindex_delete(const Trace& s, const std::set<PortName>& ports) {
  std::map<PointerName, PointerName> rho;
  auto apply = [&](PointerName p) {
    auto it = rho.find(p);
    return it == rho.end() ? p : it->second;
  };
  Trace out;
  for (auto& e : s) {
    auto p = justifier(e);
    if (ports.count(e.msg.port)) {
      if (auto f = fresh_name(e); f && p) rho[*f] = apply(*p);
      continue;
    }
    TraceEvent x = e;
    if (p) x.msg.payload[0] = apply(*p);
    out.push_back(x);
  }
  return out;
}

Trace hereditary_restrict(const Trace& s, std::set<PointerName> names) {
  Trace out;
  for (auto& e : s) {
    auto p = justifier(e);
    if (!p || !names.count(*p)) continue;
    out.push_back(e);
    if (auto f = fresh_name(e)) names.insert(*f);
  }
  return out;
}

Trace flip_polarity(const Trace& s) {
  Trace out = s;
  for (auto& e : out) e.pol = dual(e.pol);
  return out;
}

Trace rename_trace(const Trace& s, const Permutation& pi) {
  Trace out = s;
  for (auto& e : out) {
    e.msg.port = pi(e.msg.port);
    for (auto& d : e.msg.payload)
      if (auto* p = std::get_if<PointerName>(&d)) d = pi(*p);
  }
  return out;
}

Trace canonical(const Trace& s) {
  std::map<PointerName, PointerName> names;
  Trace out = s;
  for (auto& e : out)
    for (auto& d : e.msg.payload)
      if (auto* p = std::get_if<PointerName>(&d)) {
        auto it = names.find(*p);
        if (it == names.end()) it = names.emplace(*p, PointerName{make_atom(kCanonTag, names.size())}).first;
        d = it->second;
      }
  return out;
}

TraceSet canonical(const TraceSet& s) {
  TraceSet out;
  for (auto& t : s) out.insert(canonical(t));
  return out;
}

TraceSet rename_ports(const TraceSet& s, const Permutation& pi) {
  Permutation ports_only;
  ports_only.ports = pi.ports;
  TraceSet out;
  for (auto& t : s) out.insert(rename_trace(t, ports_only));
  return out;
}

TraceSet prefix_closure(const TraceSet& s) {
  TraceSet out;
  for (auto& t : s)
    for (std::size_t n = 0; n <= t.size(); ++n) out.insert(canonical(Trace(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(n))));
  return out;
}

TraceSet truncate(const TraceSet& s, std::size_t k) {
  TraceSet out;
  for (auto& t : s)
    if (t.size() <= k) out.insert(t);
  return out;
}

TraceSet filter(const TraceSet& s, const GameInterface& a, const std::vector<Condition>& cs) {
  TraceSet out;
  for (auto& t : s)
    if (check_legal(t, a).passes(cs)) out.insert(t);
  return out;
}

std::optional<Permutation> equal_ap(const Trace& a, const Trace& b) {
  if (a.size() != b.size()) return std::nullopt;
  Permutation pi;
  std::set<PortName> port_img;
  std::set<PointerName> ptr_img;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto& x = a[i];
    auto& y = b[i];
    if (x.pol != y.pol) return std::nullopt;
    auto pit = pi.ports.find(x.msg.port);
    if (pit == pi.ports.end()) {
      if (!port_img.insert(y.msg.port).second) return std::nullopt;
      pi.ports[x.msg.port] = y.msg.port;
    } else if (pit->second != y.msg.port) {
      return std::nullopt;
    }
    for (int s = 0; s < kMsgSlots; ++s) {
      auto& dx = x.msg.payload[s];
      auto& dy = y.msg.payload[s];
      if (dx.index() != dy.index()) return std::nullopt;
      if (auto* px = std::get_if<PointerName>(&dx)) {
        auto py = std::get<PointerName>(dy);
        auto it = pi.pointers.find(*px);
        if (it == pi.pointers.end()) {
          if (!ptr_img.insert(py).second) return std::nullopt;
          pi.pointers[*px] = py;
        } else if (it->second != py) {
          return std::nullopt;
        }
      } else if (dx != dy) {
        return std::nullopt;
      }
    }
  }
  return pi;
}

namespace {

Trace rename_apart(const Trace& t) {
  std::map<PointerName, PointerName> m;
  Trace out = t;
  for (auto& e : out)
    for (auto& d : e.msg.payload)
      if (auto* p = std::get_if<PointerName>(&d)) {
        auto it = m.find(*p);
        if (it == m.end()) it = m.emplace(*p, PointerName{make_atom(kExploreTag, m.size())}).first;
        d = it->second;
      }
  return out;
}

void shuffles(const Trace& a, std::size_t i, const Trace& b, std::size_t j, Trace& cur, TraceSet& out) {
  if (i == a.size() && j == b.size()) {
    out.insert(canonical(cur));
    return;
  }
  if (i < a.size()) {
    cur.push_back(a[i]);
    shuffles(a, i + 1, b, j, cur, out);
    cur.pop_back();
  }
  if (j < b.size()) {
    cur.push_back(b[j]);
    shuffles(a, i, b, j + 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace

TraceSet interleave(const TraceSet& s1, const TraceSet& s2, std::size_t k) {
  TraceSet out;
  for (auto& a : s1)
    for (auto& b : s2) {
      if (a.size() + b.size() > k) continue;
      Trace bb = rename_apart(b);
      Trace cur;
      shuffles(a, 0, bb, 0, cur, out);
    }
  return out;
}

namespace {

struct Trie {
  std::vector<std::vector<std::pair<TraceEvent, int>>> kids{{}};
  explicit Trie(const TraceSet& s) {
    for (auto& t : s) {
      int n = 0;
      for (auto& e : t) {
        auto& ks = kids[n];
        auto it = std::find_if(ks.begin(), ks.end(), [&](auto& kv) { return kv.first == e; });
        if (it != ks.end()) {
          n = it->second;
        } else {
          int m = static_cast<int>(kids.size());
          kids[n].push_back({e, m});
          kids.emplace_back();
          n = m;
        }
      }
    }
  }
};

class Composer {
 public:
  Composer(const TraceSet& s1, const std::set<PortName>& b, const TraceSet& s2, const std::set<PortName>& b2,
           const Permutation& pi, const ComposeOptions& opt, bool reindex)
      : t1_(s1), t2_(s2), b_(b), b2_(b2), pi_(pi), opt_(opt), reindex_(reindex) {}

  TraceSet run() {
    State st;
    explore(st);
    return out_;
  }

 private:
  struct Side {
    int node = 0;
    std::map<PointerName, PointerName> rho;
    std::map<PointerName, std::size_t> loc;
    std::vector<PointerName> inv;
    PointerName r(PointerName g) const {
      auto it = rho.find(g);
      return it == rho.end() ? g : it->second;
    }
  };
  struct State {
    Side side[2];
    std::map<PointerName, PointerName> rho_b;
    std::vector<PointerName> globals;
    Trace visible;
    std::size_t hidden = 0;
    std::uint64_t next_global = 0;
  };

  static std::optional<std::size_t> local_index(const Data& d) {
    if (auto* p = std::get_if<PointerName>(&d)) return atom_counter(p->v);
    return std::nullopt;
  }

  PointerName mint(State& st) const {
    PointerName g{make_atom(kExploreTag, st.next_global++)};
    st.globals.push_back(g);
    return g;
  }

  // Candidate global names for a slot seen by the listed sides; `sides` holds
  // (side index, local data) pairs.
  void resolve(const State& st, const std::vector<std::pair<int, std::size_t>>& sides, bool fresh_slot,
               const std::function<void(State&, PointerName)>& k) const {
    bool any_known = false;
    for (auto [s, x] : sides)
      if (x < st.side[s].inv.size()) any_known = true;
    auto fits = [&](const State& cur, PointerName g) {
      for (auto [s, x] : sides) {
        const Side& sd = cur.side[s];
        PointerName n = sd.r(g);
        if (x < sd.inv.size()) {
          if (sd.inv[x] != n) return false;
        } else {
          if (x != sd.inv.size() || sd.loc.count(n)) return false;
        }
      }
      return true;
    };
    auto bind = [&](State& cur, PointerName g) {
      for (auto [s, x] : sides) {
        Side& sd = cur.side[s];
        if (x >= sd.inv.size()) {
          PointerName n = sd.r(g);
          sd.loc[n] = sd.inv.size();
          sd.inv.push_back(n);
        }
      }
    };
    if (any_known || (opt_.allow_aliasing && !fresh_slot)) {
      for (auto g : st.globals) {
        if (!fits(st, g)) continue;
        State next = st;
        bind(next, g);
        k(next, g);
      }
    }
    if (!any_known) {
      State next = st;
      PointerName g = mint(next);
      bind(next, g);
      k(next, g);
    }
  }

  // Builds the global payload slot by slot.
  void build(const State& st, const TraceEvent* e1, const TraceEvent* e2, int slot, Message partial,
             const std::function<void(State&, const Message&)>& k) const {
    if (slot == kMsgSlots) {
      State next = st;
      k(next, partial);
      return;
    }
    const Data* d1 = e1 ? &e1->msg.payload[slot] : nullptr;
    const Data* d2 = e2 ? &e2->msg.payload[slot] : nullptr;
    const Data& any = d1 ? *d1 : *d2;
    if (d1 && d2 && d1->index() != d2->index()) return;
    if (!is_pointer(any)) {
      if (d1 && d2 && *d1 != *d2) return;
      partial.payload[slot] = any;
      build(st, e1, e2, slot + 1, partial, k);
      return;
    }
    std::vector<std::pair<int, std::size_t>> sides;
    if (d1) sides.push_back({0, *local_index(*d1)});
    if (d2) sides.push_back({1, *local_index(*d2)});
    resolve(st, sides, slot == 1, [&](State& next, PointerName g) {
      Message m = partial;
      m.payload[slot] = g;
      build(next, e1, e2, slot + 1, m, k);
    });
  }

  void record(const State& st) { out_.insert(canonical(st.visible)); }

  static void extend_rho(std::map<PointerName, PointerName>& rho, const Message& m) {
    auto* p = std::get_if<PointerName>(&m.payload[0]);
    auto* f = std::get_if<PointerName>(&m.payload[1]);
    if (!p || !f) return;
    auto it = rho.find(*p);
    rho[*f] = it == rho.end() ? *p : it->second;
  }

  void explore(State& st) {
    record(st);
    const auto& k1 = t1_.kids[st.side[0].node];
    const auto& k2 = t2_.kids[st.side[1].node];
    if (st.visible.size() < opt_.max_visible) {
      for (auto& [e, child] : k1) {
        if (b_.count(e.msg.port)) continue;
        build(st, &e, nullptr, 0, Message{e.msg.port, {}}, [&](State& next, const Message& m) {
          next.side[0].node = child;
          emit_visible(next, e.pol, m);
          if (reindex_) extend_rho(next.side[1].rho, m);
          explore(next);
        });
      }
      for (auto& [e, child] : k2) {
        if (b2_.count(e.msg.port)) continue;
        build(st, nullptr, &e, 0, Message{e.msg.port, {}}, [&](State& next, const Message& m) {
          next.side[1].node = child;
          emit_visible(next, e.pol, m);
          if (reindex_) extend_rho(next.side[0].rho, m);
          explore(next);
        });
      }
    }
    if (st.hidden < opt_.max_hidden) {
      for (auto& [e1, c1] : k1) {
        if (!b_.count(e1.msg.port)) continue;
        for (auto& [e2, c2] : k2) {
          if (e2.msg.port != pi_(e1.msg.port) || e2.pol != dual(e1.pol)) continue;
          build(st, &e1, &e2, 0, Message{e1.msg.port, {}}, [&](State& next, const Message& m) {
            next.side[0].node = c1;
            next.side[1].node = c2;
            next.hidden++;
            if (reindex_) extend_rho(next.rho_b, m);
            explore(next);
          });
        }
      }
    }
  }

  void emit_visible(State& st, Polarity l, Message m) const {
    if (reindex_)
      if (auto* p = std::get_if<PointerName>(&m.payload[0])) {
        auto it = st.rho_b.find(*p);
        if (it != st.rho_b.end()) m.payload[0] = it->second;
      }
    st.visible.push_back(TraceEvent{l, m});
  }

  Trie t1_, t2_;
  const std::set<PortName>& b_;
  const std::set<PortName>& b2_;
  const Permutation& pi_;
  ComposeOptions opt_;
  bool reindex_;
  TraceSet out_;
};

}  // namespace

TraceSet trace_compose(const TraceSet& s1, const std::set<PortName>& b, const TraceSet& s2,
                       const std::set<PortName>& b2, const Permutation& pi, const ComposeOptions& opt) {
  return Composer(canonical(s1), b, canonical(s2), b2, pi, opt, false).run();
}

TraceSet game_compose(const TraceSet& s1, const std::set<PortName>& b, const TraceSet& s2,
                      const std::set<PortName>& b2, const Permutation& pi, const ComposeOptions& opt) {
  return Composer(canonical(s1), b, canonical(s2), b2, pi, opt, true).run();
}

TraceSet saturate(const TraceSet& s, const GameInterface& a) {
  TraceSet out = canonical(s);
  std::vector<Trace> work(out.begin(), out.end());
  while (!work.empty()) {
    Trace t = std::move(work.back());
    work.pop_back();
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const auto& x = t[i];
      const auto& y = t[i + 1];
      if (y.pol == Polarity::P && x.pol == Polarity::O) continue;
      auto fy = fresh_name(y);
      auto jx = justifier(x);
      if (fy && jx && *fy == *jx) continue;
      Trace u = t;
      std::swap(u[i], u[i + 1]);
      if (!is_legal(u, a)) continue;
      u = canonical(u);
      if (out.insert(u).second) work.push_back(u);
    }
  }
  return out;
}

bool is_pclosed(const TraceSet& s1, const TraceSet& s2) {
  for (auto& t : s1) {
    if (t.empty() || t.back().pol != Polarity::P) continue;
    Trace prefix(t.begin(), t.end() - 1);
    if (s2.count(prefix) && s1.count(prefix) && !s2.count(t)) return false;
  }
  return true;
}

std::vector<Message> next_moves(const Trace& s, const GameInterface& a, Polarity who, const PlayOptions& opt,
                                const std::function<PointerName(int)>& fresh) {
  std::vector<Condition> keep = legal_conditions();
  if (opt.single_threaded) keep.push_back(Condition::WellOpened);
  if (opt.alternating) keep.push_back(Condition::Alternating);
  std::vector<Message> cands;
  for (auto x : a.base.with(who)) {
    if (a.is_initial(x)) {
      cands.push_back(Message{x, {fresh(0), fresh(1), Data{}}});
      continue;
    }
    std::set<PointerName> seen;
    for (auto& e : s) {
      auto f = fresh_name(e);
      if (!f || !a.enables(e.msg.port, x) || !seen.insert(*f).second) continue;
      if (a.is_question(x)) {
        cands.push_back(Message{x, {*f, fresh(1), Data{}}});
      } else if (opt.unit_answers.count(x)) {
        cands.push_back(Message{x, {*f, Data{}, Data{}}});
      } else {
        for (auto& v : opt.values) cands.push_back(Message{x, {*f, Data{}, v}});
      }
    }
  }
  std::vector<Message> out;
  Trace u = s;
  u.emplace_back();
  for (auto& m : cands) {
    u.back() = TraceEvent{who, m};
    auto rep = check_legal(u, a);
    bool ok = true;
    for (auto c : keep) {
      auto f = rep.first_failure[static_cast<int>(c)];
      if (f && *f == s.size()) ok = false;
    }
    if (ok) out.push_back(m);
  }
  return out;
}

namespace {

struct Copier {
  GameInterface arena;
  std::set<PortName> left;
  Permutation pi, inv;
  std::size_t k;
  PlayOptions opt;
  TraceSet out;

  Copier(const GameInterface& a, const Permutation& p, std::size_t k_, const PlayOptions& o)
      : arena(game_arrow(a, rename(p, a))), left(a.base.support()), pi(p), inv(p.inverse()), k(k_), opt(o) {
    for (auto x : o.unit_answers) opt.unit_answers.insert(p(x));
    opt.single_threaded = opt.alternating = true;
  }

  void go(const Trace& t, const std::map<PointerName, PointerName>& corr, std::uint64_t next) {
    out.insert(canonical(t));
    if (t.size() >= k) return;
    auto fresh = [&](int i) { return PointerName{make_atom(kExploreTag, next + static_cast<std::uint64_t>(i))}; };
    for (auto& m : next_moves(t, arena, Polarity::O, opt, fresh)) {
      Trace u = t;
      u.push_back(TraceEvent{Polarity::O, m});
      out.insert(canonical(u));
      if (u.size() >= k) continue;
      auto corr2 = corr;
      std::uint64_t next2 = next + 2;
      u.push_back(TraceEvent{Polarity::P, respond(m, corr2, next2)});
      go(u, corr2, next2);
    }
  }

  Message respond(const Message& m, std::map<PointerName, PointerName>& corr, std::uint64_t& next) const {
    Message r;
    r.port = left.count(m.port) ? pi(m.port) : inv(m.port);
    auto p = std::get<PointerName>(m.payload[0]);
    r.payload[0] = arena.is_initial(m.port) ? std::get<PointerName>(m.payload[1]) : corr.at(p);
    if (auto* f = std::get_if<PointerName>(&m.payload[1])) {
      PointerName n{make_atom(kExploreTag, next++)};
      corr[*f] = n;
      corr[n] = *f;
      r.payload[1] = n;
    }
    r.payload[2] = m.payload[2];
    return r;
  }
};

}  // namespace

TraceSet cc_traces(const GameInterface& a, const Permutation& pi, std::size_t k, const PlayOptions& opt) {
  Copier c(a, pi, k, opt);
  c.go({}, {}, 0);
  return c.out;
}

bool is_copycat_play(const Trace& s, const GameInterface& a, const Permutation& pi) {
  GameInterface arena = game_arrow(a, rename(pi, a));
  if (!check_legal(s, arena).all()) return false;
  std::set<PortName> left = a.base.support(), right;
  for (auto x : left) right.insert(pi(x));
  for (std::size_t n = 0; n <= s.size(); n += 2) {
    Trace pre(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n));
    Trace l = flip_polarity(delete_ports(pre, right));
    Trace r = delete_ports(pre, left);
    Permutation ports_only;
    ports_only.ports = pi.ports;
    auto m = equal_ap(rename_trace(l, ports_only), r);
    if (!m) return false;
    for (auto [x, y] : m->ports)
      if (x != y) return false;
  }
  return true;
}

}  // namespace gamnet
