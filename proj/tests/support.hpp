#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gamnet/combinators.hpp"
#include "gamnet/explore.hpp"
#include "gamnet/ica.hpp"
#include "gamnet/runtime.hpp"

namespace gamnet::testing {

inline PointerName pn(std::uint64_t n) { return PointerName{make_atom(kCanonTag, n)}; }
inline Data pd(std::uint64_t n) { return ptr(pn(n)); }
inline const Data kE{};

inline TraceEvent ev(Polarity l, PortName a, Data d0, Data d1 = {}, Data d2 = {}) {
  return TraceEvent{l, Message{a, {d0, d1, d2}}};
}
inline TraceEvent O(PortName a, Data d0, Data d1 = {}, Data d2 = {}) { return ev(Polarity::O, a, d0, d1, d2); }
inline TraceEvent P(PortName a, Data d0, Data d1 = {}, Data d2 = {}) { return ev(Polarity::P, a, d0, d1, d2); }

inline Trace prefix(const Trace& t, std::size_t n) { return Trace(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(n)); }

// exp or com arena, or an arrow of two of them.
inline GameInterface ground() { return base_arena(); }
inline GameInterface ground_arrow() { return game_arrow(base_arena(), base_arena()); }

// (r1 d1 ⇒ r2 d2) ⇒ (r3 d3 ⇒ r4 d4): the copycat play over com ⇒ com.
struct CopycatPlay {
  GamNet cc;
  PortName r1, d1, r2, d2, r3, d3, r4, d4;
  Trace play;
};

inline CopycatPlay copycat_play() {
  CopycatPlay f;
  GameInterface a = ground_arrow();
  f.cc = copycat_net(a);
  f.r1 = a.order[0], f.d1 = a.order[1], f.r2 = a.order[2], f.d2 = a.order[3];
  f.r3 = f.cc.cod.order[0], f.d3 = f.cc.cod.order[1], f.r4 = f.cc.cod.order[2], f.d4 = f.cc.cod.order[3];
  f.play = {O(f.r4, pd(0), pd(1)), P(f.r2, pd(1), pd(2)), O(f.r1, pd(2), pd(3)), P(f.r3, pd(1), pd(4)),
            O(f.d3, pd(4)),        P(f.d1, pd(3)),        O(f.d2, pd(2)),        P(f.d4, pd(1))};
  return f;
}

// Variants of the copycat play, each breaking exactly one condition.
struct Mutant {
  Condition breaks;
  Trace trace;
};

inline std::vector<Mutant> legality_mutants(const CopycatPlay& f) {
  const Data zero = num(0);
  return {
      {Condition::UniquePointers, {O(f.r4, pd(0), pd(1)), P(f.r2, pd(1), pd(1))}},
      {Condition::CorrectlyLabelled, {P(f.r4, pd(0), pd(1))}},
      {Condition::Justified, {O(f.r4, pd(0), pd(1)), P(f.r2, pd(0), pd(2))}},
      {Condition::WellOpened, {O(f.r4, pd(0), pd(1)), P(f.d4, pd(1), kE, zero), O(f.r4, pd(2), pd(3))}},
      {Condition::StrictlyScoped,
       {O(f.r4, pd(0), pd(1)), P(f.r2, pd(1), pd(2)), O(f.d2, pd(2), kE, zero), P(f.r3, pd(1), pd(4)),
        O(f.r1, pd(2), pd(3))}},
      {Condition::StrictlyNested,
       {O(f.r4, pd(0), pd(1)), P(f.r2, pd(1), pd(2)), O(f.r1, pd(2), pd(3)), P(f.d4, pd(1), kE, zero)}},
      {Condition::Alternating, {O(f.r4, pd(0), pd(1)), P(f.r2, pd(1), pd(2)), P(f.r3, pd(1), pd(4))}},
  };
}

// Arena (A ⇒ B) ⊗ (B' ⇒ C) ⇒ (A' ⇒ C') over six ground arenas, with the
// twelve-move composition play.
struct CompositionPlay {
  GameInterface a, b, b2, c, a2, c2, arena;
  PortName q[7], ans[7];  // index 1..6
  Trace play;
};

inline CompositionPlay composition_play() {
  CompositionPlay f;
  f.a = ground(), f.b = ground(), f.b2 = ground(), f.c = ground(), f.a2 = ground(), f.c2 = ground();
  const GameInterface* parts[7] = {nullptr, &f.a, &f.b, &f.b2, &f.c, &f.a2, &f.c2};
  for (int i = 1; i <= 6; ++i) f.q[i] = parts[i]->order[0], f.ans[i] = parts[i]->order[1];
  f.arena = game_arrow(game_tensor(game_arrow(f.a, f.b), game_arrow(f.b2, f.c)), game_arrow(f.a2, f.c2));
  auto& q = f.q;
  auto& a = f.ans;
  f.play = {O(q[6], pd(0), pd(1)), P(q[4], pd(1), pd(2)), O(q[3], pd(2), pd(3)), P(q[2], pd(1), pd(4)),
            O(q[1], pd(4), pd(5)), P(q[5], pd(1), pd(6)), O(a[5], pd(6)),        P(a[1], pd(5)),
            O(a[2], pd(4)),        P(a[3], pd(3)),        O(a[4], pd(2)),        P(a[6], pd(1))};
  return f;
}

// Drives a net through an expected trace: O events are injected, P events
// must be emitted next. Names the net mints are bound on first sight.
struct Replay {
  bool ok = true;
  std::string why;
  NetConfig end;
};

inline Replay replay(const Net& s, const Trace& expected, std::size_t max_silent = 100000) {
  Replay r;
  NetIndex idx(s);
  NetConfig n = initial_net(s);
  std::map<PointerName, PointerName> bound;
  auto settle = [&](bool want_output) -> std::optional<Message> {
    for (std::size_t i = 0; i < max_silent; ++i) {
      auto succ = net_step(n, s);
      if (succ.empty()) return std::nullopt;
      auto out = std::find_if(succ.begin(), succ.end(), [](auto& x) { return x.first.kind == LabelKind::Output; });
      if (out != succ.end() && want_output) {
        n = out->second;
        return out->first.msg;
      }
      auto silent = std::find_if(succ.begin(), succ.end(), [](auto& x) { return x.first.kind == LabelKind::Silent; });
      if (silent == succ.end()) return std::nullopt;
      n = silent->second;
    }
    return std::nullopt;
  };
  for (std::size_t i = 0; i < expected.size() && r.ok; ++i) {
    const auto& e = expected[i];
    if (e.pol == Polarity::O) {
      Message m = e.msg;
      for (auto& d : m.payload)
        if (auto* p = std::get_if<PointerName>(&d); p && bound.count(*p)) d = bound[*p];
      n = net_input(n, idx, m);
      continue;
    }
    auto got = settle(true);
    if (!got) {
      r.ok = false;
      r.why = "no output at event " + std::to_string(i);
      break;
    }
    if (got->port != e.msg.port) {
      r.ok = false;
      r.why = "wrong port at event " + std::to_string(i) + ": " + to_string(*got);
      break;
    }
    for (int k = 0; k < kMsgSlots; ++k) {
      const Data& want = e.msg.payload[k];
      const Data& have = got->payload[k];
      if (auto* p = std::get_if<PointerName>(&want); p && is_pointer(have)) {
        auto it = bound.find(*p);
        if (it == bound.end() && is_pointer(have) && std::get<PointerName>(have) != *p) {
          bound[*p] = std::get<PointerName>(have);
        } else if (it != bound.end() ? it->second != std::get<PointerName>(have) : false) {
          r.ok = false;
        }
      } else if (want != have) {
        r.ok = false;
      }
      if (!r.ok) {
        r.why = "wrong payload at event " + std::to_string(i) + ": " + to_string(*got);
        break;
      }
    }
  }
  if (r.ok) settle(false);
  r.end = n;
  return r;
}

inline std::size_t heap_cells(const NetConfig& n) {
  std::size_t c = 0;
  for (auto& e : n.engines) c += e.heap.size();
  return c;
}

// Treats the first factor of a curried arena as the domain.
inline GamNet split_first(const GamNet& g) {
  const auto& o = g.cod.order;
  GameInterface dom = base_arena(o[0], o[1]);
  GameInterface cod = base_arena(o[o.size() - 2], o[o.size() - 1]);
  for (std::size_t i = o.size() - 2; i > 2; i -= 2) cod = game_arrow(base_arena(o[i - 2], o[i - 1]), cod);
  return GamNet{g.net, dom, cod};
}

inline PlayOptions play_for(const GameInterface& arena, const std::set<PortName>& unit = {}) {
  (void)arena;
  PlayOptions po;
  po.unit_answers = unit;
  return po;
}

inline std::set<PortName> port_set(const GameInterface& a) { return a.base.support(); }

// Denotation of a game net under a legal opponent, canonical names.
inline TraceSet game_denotation(const GamNet& g, std::size_t k, const PlayOptions& po = {}) {
  return denotation_upto(g.net, k, game_opponent(g.arena(), po)).traces;
}

// Renames the ports of a trace set from one arena onto a structurally equal one.
inline TraceSet onto(const TraceSet& s, const GameInterface& from, const GameInterface& to) {
  auto pi = structural_match(from, to);
  if (!pi) throw PreconditionError("arenas differ");
  return rename_ports(s, *pi);
}

// Random single-engine nets: every O-port does a few register moves and then
// sparks one of the allowed P-ports (or ends). No heap use, so every input
// produces at most one output.
class NetGen {
 public:
  explicit NetGen(std::uint64_t seed) : rng_(seed) {}

  // Only swap the two name slots, so every message keeps the shape the
  // opponent sends.
  bool plain = false;

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  Interface iface(int o, int p) {
    Interface a;
    for (int i = 0; i < o; ++i) a.add(Polarity::O, fresh_port_name(port_minter()));
    for (int i = 0; i < p; ++i) a.add(Polarity::P, fresh_port_name(port_minter()));
    return a;
  }

  Code body(const std::vector<PortName>& targets) {
    std::vector<Instr> pre;
    int n = pick(3);
    for (int i = 0; i < n; ++i) {
      switch (plain ? 2 : pick(3)) {
        case 0: pre.push_back(ins::Flip{pick(3), pick(3)}); break;
        case 1: pre.push_back(ins::Set{2, pick(2)}); break;
        default: pre.push_back(ins::Flip{0, 1}); break;
      }
    }
    if (targets.empty() || pick(5) == 0) return seq(pre, end_code());
    return seq(pre, spark(targets[pick(static_cast<int>(targets.size()))]));
  }

  // Engine over `ext`; inputs on ports in `quiet` may only reach `quiet_targets`.
  Engine engine(const Interface& ext, const std::set<PortName>& quiet = {},
                const std::vector<PortName>& quiet_targets = {}) {
    Engine e;
    e.iface = ext;
    auto ps = ext.with(Polarity::P);
    for (auto x : ext.with(Polarity::O)) e.port_map[x] = quiet.count(x) ? body(quiet_targets) : body(ps);
    return e;
  }

  // A ⇒ B as a singleton. With quiet_b, inputs arriving on B only reach A,
  // which keeps hidden traffic between composed pieces finite.
  struct Piece {
    Net net;
    Interface a, b;  // as they appear externally (a dualised)
  };

  Piece piece(const Interface& a_shape, const Interface& b_shape, bool quiet_b = false) {
    auto [a, pa] = fresh_copy(a_shape);
    auto [b, pb] = fresh_copy(b_shape);
    Interface ext = arrow(a, b);
    std::set<PortName> quiet;
    if (quiet_b)
      for (auto x : b.with(Polarity::O)) quiet.insert(x);
    Engine e = engine(ext, quiet, dual(a).with(Polarity::P));
    auto [net, to_ext] = wrap_engine(e);
    return Piece{net, rename(to_ext, dual(a)), rename(to_ext, b)};
  }

 private:
  std::mt19937_64 rng_;
};

struct CorpusEntry {
  std::string name;
  std::string source;
  std::string expect;  // integer text or "done"
};

inline std::vector<CorpusEntry> load_corpus(const std::string& dir) {
  std::vector<CorpusEntry> out;
  for (auto& f : std::filesystem::directory_iterator(dir)) {
    if (f.path().extension() != ".ica") continue;
    std::ifstream in(f.path());
    std::stringstream ss;
    ss << in.rdbuf();
    CorpusEntry c{f.path().stem().string(), ss.str(), ""};
    auto at = c.source.find("# expect:");
    if (at != std::string::npos) {
      std::istringstream line(c.source.substr(at + 9));
      line >> c.expect;
    }
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), [](auto& x, auto& y) { return x.name < y.name; });
  return out;
}

inline std::string value_text(const ica::Value& v) { return v.kind == ica::Value::Int ? std::to_string(v.n) : "done"; }

inline RunOptions options_for(const GamNet& g, std::uint64_t seed = 0) {
  RunOptions o;
  o.policy = SchedulerPolicy::seeded(seed);
  o.answer_ports = {g.cod.order[1]};
  return o;
}

inline RunResult run_source(const std::string& src, std::uint64_t seed = 0) {
  GamNet g = ica::compile(ica::parse(src));
  return run_local(g.net, initial_question(g.cod.order[0]), options_for(g, seed));
}

// Ports the kernel reports free right now; distinct within one call.
inline std::vector<std::uint16_t> free_ports(std::size_t n) {
  std::vector<int> fds;
  std::vector<std::uint16_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof a;
    if (fd < 0 || ::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a) != 0 ||
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len) != 0)
      throw Error("no free local port");
    fds.push_back(fd);
    out.push_back(ntohs(a.sin_port));
  }
  for (int fd : fds) ::close(fd);
  return out;
}

// Root plus the given worker names, all on localhost.
inline NodeConfig local_nodes(const std::vector<std::string>& names, const std::string& root = "root") {
  NodeConfig cfg;
  auto ports = free_ports(names.size() + 1);
  cfg.root = root;
  cfg.nodes[root] = {"127.0.0.1", ports[0]};
  for (std::size_t i = 0; i < names.size(); ++i) cfg.nodes[names[i]] = {"127.0.0.1", ports[i + 1]};
  return cfg;
}

inline std::string config_json(const NodeConfig& cfg) {
  std::string s = "{\"root\": \"" + cfg.root + "\", \"nodes\": {";
  bool first = true;
  for (auto& [name, addr] : cfg.nodes) {
    s += (first ? "" : ", ") + std::string("\"") + name + "\": \"" + addr.host + ":" + std::to_string(addr.port) + "\"";
    first = false;
  }
  return s + "}}";
}

// Every engine moved to a random node from `names`.
inline void scatter(Net& s, const std::vector<std::string>& names, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& e : s.engines) e.placement = names[std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(rng)];
}

}  // namespace gamnet::testing
