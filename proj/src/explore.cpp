#include "gamnet/explore.hpp"

#include <algorithm>
#include <cstring>
#include <unordered_map>
#include <unordered_set>

namespace gamnet {

PointerName opponent_name(std::size_t n, int i) {
  return PointerName{make_atom(kOpponentTag, 2 * n + static_cast<std::uint64_t>(i))};
}

InputGenerator game_opponent(const GameInterface& a, const PlayOptions& opt) {
  return [a, opt](const Trace& s) {
    return next_moves(s, a, Polarity::O, opt, [&](int i) { return opponent_name(s.size(), i); });
  };
}

InputGenerator raw_opponent(const Interface& ext, std::vector<Data> values, bool reuse_names) {
  return [ext, values, reuse_names](const Trace& s) {
    std::vector<Data> justifiers{ptr(opponent_name(s.size(), 0))};
    if (reuse_names) {
      std::set<PointerName> seen;
      for (auto& e : s)
        for (auto& d : e.msg.payload)
          if (auto* p = std::get_if<PointerName>(&d); p && seen.insert(*p).second) justifiers.push_back(*p);
    }
    std::vector<Message> out;
    for (auto x : ext.with(Polarity::O))
      for (auto& j : justifiers)
        for (auto& v : values) out.push_back(Message{x, {j, ptr(opponent_name(s.size(), 1)), v}});
    return out;
  };
}

InputGenerator silent_opponent() {
  return [](const Trace&) { return std::vector<Message>{}; };
}

namespace {

// Serializes a configuration plus its trace with pointer names renamed in
// order of first appearance, so states equal up to renaming share a key.
class KeyBuilder {
 public:
  std::string key(const NetConfig& c, const Trace& t) {
    names_.clear();
    out_.clear();
    for (auto& e : t) {
      put(static_cast<std::uint64_t>(e.pol));
      message(e.msg);
    }
    put(~0ULL);
    for (auto& ec : c.engines) {
      std::vector<const Thread*> ts;
      for (auto& th : ec.threads) ts.push_back(&th);
      std::sort(ts.begin(), ts.end(), [](const Thread* x, const Thread* y) {
        if (x->code != y->code) return x->code.get() < y->code.get();
        return shape(x->regs) < shape(y->regs);
      });
      put(ts.size());
      for (auto* th : ts) {
        put(reinterpret_cast<std::uintptr_t>(th->code.get()));
        for (auto& d : th->regs) data(d);
      }
      // heap keys are visited in the order fixed by the threads above where possible
      put(ec.heap.size());
      std::vector<std::pair<std::uint64_t, const std::pair<const PointerName, std::pair<Data, Data>>*>> cells;
      for (auto& cell : ec.heap) {
        auto it = names_.find(cell.first);
        cells.push_back({it == names_.end() ? ~0ULL : it->second, &cell});
      }
      std::stable_sort(cells.begin(), cells.end(), [](auto& x, auto& y) { return x.first < y.first; });
      for (auto& [_, cell] : cells) {
        name(cell->first);
        data(cell->second.first);
        data(cell->second.second);
      }
      put(ec.faults.size());
    }
    std::vector<Message> pend = c.pending;
    std::sort(pend.begin(), pend.end(), [](const Message& x, const Message& y) {
      if (x.port != y.port) return x.port < y.port;
      return shape(x.payload) < shape(y.payload);
    });
    put(pend.size());
    for (auto& m : pend) message(m);
    return out_;
  }

 private:
  template <class Arr>
  static std::vector<std::pair<std::size_t, std::int64_t>> shape(const Arr& a) {
    std::vector<std::pair<std::size_t, std::int64_t>> s;
    for (auto& d : a) s.push_back({d.index(), is_int(d) ? std::get<std::int64_t>(d) : 0});
    return s;
  }
  void put(std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out_.append(b, 8);
  }
  void name(PointerName p) {
    auto it = names_.find(p);
    if (it == names_.end()) it = names_.emplace(p, names_.size()).first;
    put(it->second);
  }
  void data(const Data& d) {
    put(d.index());
    if (auto* p = std::get_if<PointerName>(&d)) name(*p);
    if (auto* n = std::get_if<std::int64_t>(&d)) put(static_cast<std::uint64_t>(*n));
  }
  void message(const Message& m) {
    put(m.port.v);
    for (auto& d : m.payload) data(d);
  }

  std::unordered_map<PointerName, std::uint64_t> names_;
  std::string out_;
};

struct Node {
  NetConfig cfg;
  Trace trace;
};

}  // namespace

Denotation denotation_upto(const Net& s, std::size_t k, const InputGenerator& opponent, const ExploreOptions& opt) {
  Denotation res;
  NetIndex idx(s);
  KeyBuilder kb;
  std::unordered_set<std::string> visited;
  std::vector<Node> stack;
  stack.push_back(Node{initial_net(s), {}});
  while (!stack.empty()) {
    Node n = std::move(stack.back());
    stack.pop_back();
    if (!visited.insert(kb.key(n.cfg, n.trace)).second) continue;
    if (visited.size() > opt.max_states) {
      res.partial = true;
      break;
    }
    res.traces.insert(canonical(n.trace));
    if (n.trace.size() >= k) continue;

    auto fresh_for = [](NetConfig& c) {
      return [&c] { return PointerName{make_atom(kExploreTag, c.next_fresh++)}; };
    };

    // Steps that commute with everything else run eagerly.
    bool forced = false;
    for (std::size_t i = 0; i < s.engines.size() && !forced; ++i)
      for (std::size_t t = 0; t < n.cfg.engines[i].threads.size(); ++t) {
        if (touches_heap(n.cfg.engines[i].threads[t])) continue;
        Node m = n;
        ThreadStep st = step_thread(m.cfg.engines[i], t, s.engines[i], idx.chi(), fresh_for(m.cfg));
        if (st.out) m.cfg.pending.push_back(*st.out);
        stack.push_back(std::move(m));
        forced = true;
        break;
      }
    if (forced) continue;
    for (std::size_t p = 0; p < n.cfg.pending.size(); ++p) {
      int r = idx.receiver(n.cfg.pending[p].port);
      if (r < 0) continue;
      Node m = n;
      Message msg = m.cfg.pending[p];
      m.cfg.pending.erase(m.cfg.pending.begin() + static_cast<std::ptrdiff_t>(p));
      receive_in_place(m.cfg.engines[r], s.engines[r], msg);
      stack.push_back(std::move(m));
      forced = true;
      break;
    }
    if (forced) continue;

    for (std::size_t i = 0; i < s.engines.size(); ++i)
      for (std::size_t t = 0; t < n.cfg.engines[i].threads.size(); ++t) {
        Node m = n;
        ThreadStep st = step_thread(m.cfg.engines[i], t, s.engines[i], idx.chi(), fresh_for(m.cfg));
        if (st.out) m.cfg.pending.push_back(*st.out);
        stack.push_back(std::move(m));
      }
    for (std::size_t p = 0; p < n.cfg.pending.size(); ++p) {
      const Message& msg = n.cfg.pending[p];
      if (!idx.external_p(msg.port)) continue;
      Node m = n;
      m.cfg.pending.erase(m.cfg.pending.begin() + static_cast<std::ptrdiff_t>(p));
      m.trace.push_back(TraceEvent{Polarity::P, msg});
      stack.push_back(std::move(m));
    }
    for (auto& in : opponent(n.trace)) {
      Node m{net_input(n.cfg, idx, in), n.trace};
      m.trace.push_back(TraceEvent{Polarity::O, in});
      stack.push_back(std::move(m));
    }
  }
  res.states = visited.size();
  return res;
}

ImplementsReport implements_check(const Net& s, const GameInterface& a, const TraceSet& spec, std::size_t k,
                                  const PlayOptions& opt, const ExploreOptions& xo) {
  ImplementsReport r;
  Denotation d = denotation_upto(s, k, game_opponent(a, opt), xo);
  r.partial = d.partial;
  r.net_traces = d.traces.size();
  TraceSet want = canonical(spec);
  for (auto& t : want) {
    if (t.size() > k || d.traces.count(t)) continue;
    r.included = false;
    r.missing = t;
    break;
  }
  for (auto& t : d.traces) {
    if (t.empty() || t.back().pol != Polarity::P) continue;
    Trace prefix(t.begin(), t.end() - 1);
    if (want.count(prefix) && !want.count(t)) {
      r.pclosed = false;
      r.rogue = t;
      break;
    }
  }
  return r;
}

}  // namespace gamnet
