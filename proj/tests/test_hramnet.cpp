#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "laws.hpp"

using namespace gamnet;
using namespace gamnet::testing;

namespace {

Engine lit5() { return ica::constant_net(ica::Constant::Lit, 5).net.engines.at(0); }

// Engine with one input port that forwards to one output port.
struct Relay {
  PortName in = fresh_port_name(port_minter()), out = fresh_port_name(port_minter());
  Engine e;
  Relay() {
    e.iface = Interface{{Polarity::O, in}, {Polarity::P, out}};
    e.port_map[in] = spark(out);
  }
};

}  // namespace

TEST_CASE("validate_net") {
  CHECK(validate_net(singleton(lit5())).ok());

  Relay r;
  Net bad = singleton(r.e);
  bad.chi[bad.external.with(Polarity::O)[0]] = r.in;
  bad.chi[r.out] = r.in;
  CHECK_FALSE(validate_net(bad).ok());

  Net clash = singleton(r.e);
  clash.external.add(Polarity::P, r.in);
  CHECK_FALSE(validate_net(clash).ok());
}

TEST_CASE("singleton wires the engine to a renamed copy") {
  Relay r;
  Net s = singleton(r.e);
  REQUIRE(s.external.size() == 2);
  PortName q = s.external.with(Polarity::O)[0], a = s.external.with(Polarity::P)[0];
  CHECK(s.chi.at(q) == r.in);
  CHECK(s.chi.at(r.out) == a);
  CHECK(same_shape(s.external, r.e.iface));
  CHECK(validate_net(s).ok());
}

TEST_CASE("initial_net") {
  Net s = tensor_nets(singleton(lit5()), singleton(Relay().e));
  NetConfig n = initial_net(s);
  CHECK(n.engines.size() == 2);
  CHECK(n.pending.empty());
  for (auto& e : n.engines) {
    CHECK(e.threads.empty());
    CHECK(e.heap.empty());
  }
}

TEST_CASE("net_step: external output and input") {
  Relay r;
  Net s = singleton(r.e);
  NetIndex idx(s);
  PortName q = s.external.with(Polarity::O)[0], a = s.external.with(Polarity::P)[0];
  NetConfig n = net_input(initial_net(s), idx, Message{q, {pd(0), pd(1), Data{}}});
  REQUIRE(n.pending.size() == 1);
  CHECK(n.pending[0].port == r.in);
  n = net_step(n, s).at(0).second;
  CHECK(n.engines[0].threads.size() == 1);

  NetConfig pend = initial_net(s);
  pend.pending.push_back(Message{a, {pd(1), Data{}, Data{}}});
  auto succ = net_step(pend, s);
  REQUIRE(succ.size() == 1);
  CHECK(succ[0].first.kind == LabelKind::Output);
  CHECK(succ[0].first.msg.port == a);
  CHECK(succ[0].second.pending.empty());
}

TEST_CASE("net_step: a spark to another engine is delivered through the pending set") {
  Relay r1, r2;
  auto p1 = r1.e, p2 = r2.e;
  Net s;
  s.engines = {p1, p2};
  PortName q = fresh_port_name(port_minter()), a = fresh_port_name(port_minter());
  s.external = Interface{{Polarity::O, q}, {Polarity::P, a}};
  s.chi = {{q, r1.in}, {r1.out, r2.in}, {r2.out, a}};
  REQUIRE(validate_net(s).ok());
  NetIndex idx(s);
  NetConfig n = net_input(initial_net(s), idx, Message{q, {pd(0), pd(1), Data{}}});
  n = net_step(n, s).at(0).second;
  CHECK(n.engines[0].threads.size() == 1);
  n = net_step(n, s).at(0).second;
  REQUIRE(n.pending.size() == 1);
  CHECK(n.pending[0].port == r2.in);
  n = net_step(n, s).at(0).second;
  CHECK(n.pending.empty());
  CHECK(n.engines[1].threads.size() == 1);
}

TEST_CASE("denotation of a literal") {
  Net s = singleton(lit5());
  CHECK(denotation_upto(s, 0, raw_opponent(s.external)).traces == TraceSet{Trace{}});

  PortName q = s.external.with(Polarity::O)[0], a = s.external.with(Polarity::P)[0];
  auto one_question = [q](const Trace& t) {
    return t.empty() ? std::vector<Message>{Message{q, {ptr(opponent_name(0, 0)), ptr(opponent_name(0, 1)), Data{}}}}
                     : std::vector<Message>{};
  };
  auto d = denotation_upto(s, 4, one_question);
  CHECK(d.traces.size() == 3);
  Trace qa{O(q, pd(0), pd(1)), P(a, pd(1), kE, num(5))};
  CHECK(d.traces.count(qa));
  CHECK(d.traces.count(prefix(qa, 1)));
  CHECK(d.traces.count(Trace{}));
}

TEST_CASE("identity net only copies its inputs") {
  NameMinter m(0x40);
  Interface a{{Polarity::O, m.port()}};
  auto [id, pi] = identity_net(a);
  CHECK(validate_net(id).ok());
  CHECK(id.engines.empty());
  CHECK(id.chi.at(pi(a.with(Polarity::O)[0])) == a.with(Polarity::O)[0]);
  auto d = denotation_upto(id, 2, raw_opponent(id.external));
  CHECK(d.traces.size() == 4);
  for (auto& t : d.traces)
    if (t.size() == 2 && t[1].pol == Polarity::P) {
      CHECK(t[0].pol == Polarity::O);
      CHECK(t[1].pol == Polarity::P);
      CHECK(id.chi.at(t[0].msg.port) == t[1].msg.port);
      CHECK(t[0].msg.payload == t[1].msg.payload);
    }
}

TEST_CASE("compose rejects mismatched shapes") {
  NetGen gen(1);
  auto f = gen.piece(gen.iface(1, 0), gen.iface(1, 1));
  auto g = gen.piece(gen.iface(2, 0), gen.iface(1, 0));
  CHECK_THROWS_AS(compose_nets(f.net, f.b, g.net, dual(g.a)), PreconditionError);
}

TEST_CASE("tensor of nets") {
  NetGen gen(2);
  auto f = gen.piece(gen.iface(1, 0), gen.iface(1, 1));
  auto g = gen.piece(gen.iface(1, 1), gen.iface(0, 1));
  Net fg = tensor_nets(f.net, g.net);
  CHECK(fg.engines.size() == 2);
  CHECK(validate_net(fg).ok());
  Net unit = tensor_nets(f.net, Net{});
  CHECK(unit.chi == f.net.chi);
  CHECK(unit.external == f.net.external);
  CHECK_THROWS_AS(tensor_nets(f.net, f.net), PreconditionError);
}

TEST_CASE("curry and uncurry only re-read the interface") {
  NameMinter m(0x41);
  Interface a{{Polarity::O, m.port()}}, b{{Polarity::P, m.port()}}, c{{Polarity::O, m.port()}, {Polarity::P, m.port()}};
  auto [id, pi] = identity_net(tensor(a, b));
  (void)pi;
  Engine e;
  e.iface = arrow(tensor(a, b), c);
  for (auto x : e.iface.with(Polarity::O)) e.port_map[x] = end_code();
  Net f;
  f.engines = {sink_engine(dual(e.iface))};
  f.external = e.iface;
  for (auto x : e.iface.with(Polarity::O)) f.chi[x] = x;
  Net curried = curry(f, a, b, c);
  CHECK(curried.external == arrow(a, arrow(b, c)));
  Net back = uncurry(curried, a, b, c);
  CHECK(structurally_equivalent(back, f));
  CHECK(back.chi == f.chi);
  CHECK_THROWS_AS(curry(f, b, a, dual(c)), PreconditionError);
}

TEST_CASE("sink and projection") {
  NameMinter m(0x42);
  Interface a{{Polarity::O, m.port()}, {Polarity::P, m.port()}};
  Net s = sink(a);
  CHECK(validate_net(s).ok());
  auto d = denotation_upto(s, 3, raw_opponent(s.external));
  for (auto& t : d.traces)
    for (auto& e : t) CHECK(e.pol == Polarity::O);

  Interface keep{{Polarity::O, m.port()}}, drop{{Polarity::O, m.port()}};
  auto [proj, pi] = projection(keep, drop);
  CHECK(validate_net(proj).ok());
  PortName k_out = pi(keep.with(Polarity::O)[0]);
  PortName k_in = keep.with(Polarity::O)[0], d_in = drop.with(Polarity::O)[0];
  auto pd3 = denotation_upto(proj, 2, raw_opponent(proj.external));
  bool forwarded = false;
  for (auto& t : pd3.traces) {
    if (t.size() == 2 && t[0].msg.port == k_out && t[1].pol == Polarity::P) {
      CHECK(t[1].msg.port == k_in);
      forwarded = true;
    }
    if (!t.empty() && t[0].msg.port == d_in) CHECK(t.size() == 1);
  }
  CHECK(forwarded);
}

TEST_CASE("combine_engines keeps connectivity and validates") {
  NetGen gen(3);
  Net s = two_engine_net(gen);
  Net one = combine_engines(s);
  CHECK(one.engines.size() == 1);
  CHECK(validate_net(one).ok());
  CHECK(one.chi == s.chi);
  CHECK(one.external == s.external);
  CHECK_THROWS_AS(combine_engines(singleton(lit5())), PreconditionError);
}

TEST_CASE("structural equivalence") {
  Relay r;
  Net s = singleton(r.e);
  auto self = structurally_equivalent(s, s);
  REQUIRE(self);
  for (auto [x, y] : self->ports) CHECK(x == y);

  Permutation pi;
  for (auto [x, _] : r.e.iface.ports()) pi.ports[x] = fresh_port_name(port_minter());
  CHECK(structurally_equivalent(singleton(r.e), singleton(rename_engine(r.e, pi))));
  CHECK_FALSE(structurally_equivalent(s, tensor_nets(s, singleton(Relay().e))));
}

TEST_CASE("property: identity laws") {
  NetGen gen(10);
  for (int i = 0; i < 20; ++i) CHECK(law_identity(gen) == "");
}

TEST_CASE("property: composition is associative on connectivity") {
  NetGen gen(11);
  for (int i = 0; i < 20; ++i) CHECK(law_associativity(gen) == "");
}

TEST_CASE("property: structurally equivalent nets have renamed denotations") {
  NetGen gen(12);
  for (int i = 0; i < 10; ++i) CHECK(law_renaming(gen, 5) == "");
}

TEST_CASE("property: denotation of a tensor is the interleaving") {
  NetGen gen(13);
  for (int i = 0; i < 5; ++i) CHECK(law_tensor(gen, 5) == "");
}

TEST_CASE("property: denotation of a composition is the trace composition") {
  NetGen gen(14);
  for (int i = 0; i < 5; ++i) CHECK(law_composition(gen, 5) == "");
}

TEST_CASE("property: combining two engines keeps every trace") {
  NetGen gen(15);
  for (int i = 0; i < 5; ++i) CHECK(law_combination(gen, 5) == "");
}

TEST_CASE("property: silent steps move at most one message") {
  NetGen gen(16);
  for (int i = 0; i < 10; ++i) {
    Net s = two_engine_net(gen);
    NetIndex idx(s);
    NetConfig n = initial_net(s);
    for (auto x : s.external.with(Polarity::O)) n = net_input(n, idx, Message{x, {num(1), num(2), Data{}}});
    for (int step = 0; step < 30; ++step) {
      auto succ = net_step(n, s);
      if (succ.empty()) break;
      for (auto& [l, m] : succ) {
        auto diff = static_cast<long>(m.pending.size()) - static_cast<long>(n.pending.size());
        CHECK(diff >= -1);
        CHECK(diff <= 1);
      }
      n = succ[static_cast<std::size_t>(gen.pick(static_cast<int>(succ.size())))].second;
    }
  }
}
