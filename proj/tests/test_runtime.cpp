#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace gamnet;
using namespace gamnet::testing;

namespace {

GamNet program(const std::string& src) { return ica::compile(ica::parse(src)); }

const char* const kPlaced =
    "(\\f:var->exp. \\g:var->exp. {new x. x := {f x}@B + {g x}@C; !x}@A) (\\v:var. succ !v) (\\v:var. succ !v)";

}  // namespace

TEST_CASE("run_local answers 1+2 on the question's fresh name") {
  GamNet g = program("1+2");
  Message q = initial_question(g.cod.order[0]);
  auto r = run_local(g.net, q, options_for(g));
  REQUIRE(r.status == RunResult::Answered);
  REQUIRE(r.answer);
  CHECK(r.answer->port == g.cod.order[1]);
  CHECK(r.answer->payload[0] == q.payload[1]);
  CHECK(r.answer->payload[1] == Data{});
  CHECK(r.answer->payload[2] == num(3));
  CHECK(answer_text(r) == "3");
  CHECK(exit_code(r) == 0);
  CHECK(r.audit.empty());
  CHECK(r.trace.size() == 2);
}

TEST_CASE("initial questions use the root tag") {
  Message q = initial_question(PortName{make_atom(1, 1)});
  for (int i : {0, 1}) CHECK(atom_node(std::get<PointerName>(q.payload[i]).v) == kRootTag);
  CHECK(q.payload[0] != q.payload[1]);
}

TEST_CASE("divergence and budgets") {
  GamNet g = program("fix (\\x:exp. x)");
  RunOptions o = options_for(g);
  o.budget.silent = 5000;
  auto r = run_local(g.net, initial_question(g.cod.order[0]), o);
  CHECK(r.status == RunResult::BudgetExhausted);
  CHECK(!r.answer);
  CHECK(exit_code(r) == 2);
  CHECK(r.silent_steps >= 5000);
}

TEST_CASE("seeded runs are reproducible") {
  GamNet g = program("new x. x := 3; x := !x * !x; !x + 1");
  for (std::uint64_t seed : {0u, 7u, 99u}) {
    auto a = run_local(g.net, initial_question(g.cod.order[0]), options_for(g, seed));
    auto b = run_local(g.net, initial_question(g.cod.order[0]), options_for(g, seed));
    CHECK(a.trace == b.trace);
    CHECK(a.silent_steps == b.silent_steps);
    CHECK(answer_text(a) == "10");
  }
  RunOptions rr = options_for(g);
  rr.policy = SchedulerPolicy::round_robin();
  CHECK(answer_text(run_local(g.net, initial_question(g.cod.order[0]), rr)) == "10");
}

TEST_CASE("heap audit") {
  CHECK(run_source("1+2").audit.empty());
  CHECK(run_source("new x. x := 8; !x").audit.empty());
  NetConfig c;
  c.engines.resize(2);
  c.engines[1].heap[pn(1)] = {pd(2), pd(3)};
  HeapAudit a = heap_audit(c);
  CHECK_FALSE(a.empty());
  CHECK(a.cells() == 1);
  CHECK(a.residual.count(1));
  CHECK(to_string(HeapAudit{}) == "heaps: empty");
}

TEST_CASE("frames round-trip") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    Frame f;
    f.kind = static_cast<FrameKind>(rng() % 6);
    f.msg.port = PortName{rng()};
    for (auto& d : f.msg.payload) {
      switch (rng() % 3) {
        case 0: d = Data{}; break;
        case 1: d = ptr(PointerName{rng()}); break;
        default: d = num(static_cast<std::int64_t>(rng())); break;
      }
    }
    auto bytes = encode_frame(f);
    Frame back = decode_frame(bytes.data(), bytes.size());
    CHECK(back.kind == f.kind);
    CHECK(back.msg == f.msg);
  }
}

TEST_CASE("frame layout") {
  Frame f;
  f.msg = Message{PortName{0x0102030405060708ull}, {Data{}, ptr(PointerName{9}), num(-1)}};
  auto b = encode_frame(f);
  CHECK(b[3] == 37);
  CHECK(b[6] == 0x01);
  CHECK(b[13] == 0x08);
  CHECK(b[14] == 0);
  CHECK(b[23] == 1);
  CHECK(b[31] == 9);
  CHECK(b[32] == 2);
  CHECK(b[40] == 0xff);
}

TEST_CASE("malformed frames are protocol errors") {
  Frame f;
  f.msg = Message{PortName{1}, {num(1), Data{}, Data{}}};
  auto good = encode_frame(f);
  auto bad = good;
  bad[14] = 7;
  CHECK_THROWS_AS(decode_frame(bad.data(), bad.size()), ProtocolError);
  bad = good;
  bad[3] = 36;
  CHECK_THROWS_AS(decode_frame(bad.data(), bad.size()), ProtocolError);
  CHECK_THROWS_AS(decode_frame(good.data(), good.size() - 1), ProtocolError);
  bad = good;
  bad[5] = 9;
  CHECK_THROWS_AS(decode_frame(bad.data(), bad.size()), ProtocolError);
  bad = good;
  bad[24] = 0;
  bad[31] = 1;
  CHECK_THROWS_AS(decode_frame(bad.data(), bad.size()), ProtocolError);
}

TEST_CASE("node config") {
  NodeConfig c = parse_node_config(R"({"nodes": {"A": "127.0.0.1:7001", "B": "localhost:7002"}, "root": "A"})");
  CHECK(c.root == "A");
  CHECK(c.nodes.at("B").host == "localhost");
  CHECK(c.nodes.at("B").port == 7002);
  CHECK_THROWS_AS(parse_node_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_node_config(R"({"nodes": {"A": "127.0.0.1"}, "root": "A"})"), ConfigError);
  CHECK_THROWS_AS(parse_node_config(R"({"nodes": {"A": "h:99999"}, "root": "A"})"), ConfigError);
  CHECK_THROWS_AS(parse_node_config(R"({"nodes": {"A": "h:1"}, "root": "B"})"), ConfigError);
  CHECK_THROWS_AS(parse_node_config(R"({"nodes": {"A": "h:1"}})"), ConfigError);
  CHECK_THROWS_AS(load_node_config("/nonexistent/cfg.json"), ConfigError);
  CHECK(parse_node_config(config_json(c)).nodes.size() == 2);
}

TEST_CASE("distributed run on one node equals the local run") {
  GamNet g = program("(\\x:exp. x * x) 7");
  NodeConfig cfg = local_nodes({});
  DistributedOptions o;
  o.run = options_for(g);
  auto r = run_distributed(g.net, cfg, initial_question(g.cod.order[0]), o);
  CHECK(answer_text(r) == "49");
  CHECK(r.audit.empty());
  CHECK(r.frames_sent == 0);
}

TEST_CASE("placed program across three nodes") {
  GamNet g = program(kPlaced);
  NodeConfig cfg = local_nodes({"A", "B", "C"});
  DistributedOptions o;
  o.run = options_for(g);
  std::string want = value_text(ica::reference_interpret(ica::parse(kPlaced)));
  CHECK(want == "2");
  auto r = run_distributed(g.net, cfg, initial_question(g.cod.order[0]), o);
  CHECK(answer_text(r) == want);
  CHECK(r.audit.empty());
  CHECK(r.faults.empty());
  CHECK(r.frames_sent > 0);
  CHECK(r.frames_sent == r.frames_received);
  CHECK(answer_text(run_local(g.net, initial_question(g.cod.order[0]), options_for(g))) == want);
}

TEST_CASE("a placement gap is a config error") {
  GamNet g = program(kPlaced);
  NodeConfig cfg = local_nodes({"A", "B"});
  CHECK_THROWS_AS(run_distributed(g.net, cfg, initial_question(g.cod.order[0])), ConfigError);
}

TEST_CASE("scattered placements keep the answer") {
  std::vector<std::string> src{"1+2", "new x. x := 8; !x", "(\\f:exp->exp. f (f 3)) (\\y:exp. y * 2)"};
  std::vector<std::string> want{"3", "8", "12"};
  for (std::size_t i = 0; i < src.size(); ++i) {
    CAPTURE(src[i]);
    GamNet g = program(src[i]);
    scatter(g.net, {"A", "B", "C"}, i);
    NodeConfig cfg = local_nodes({"A", "B", "C"});
    DistributedOptions o;
    o.run = options_for(g, i);
    auto r = run_distributed(g.net, cfg, initial_question(g.cod.order[0]), o);
    CHECK(answer_text(r) == want[i]);
    CHECK(r.audit.empty());
    CHECK(r.frames_sent == r.frames_received);
  }
}

TEST_CASE("property: delivery order does not change corpus answers") {
  for (auto& c : load_corpus(GAMNET_CORPUS_DIR)) {
    CAPTURE(c.name);
    for (std::uint64_t seed : {3u, 11u, 12345u}) CHECK(answer_text(run_source(c.source, seed)) == c.expect);
  }
}

TEST_CASE("property: co-located engines joined into one answer the same") {
  std::mt19937_64 rng(8);
  for (auto& c : load_corpus(GAMNET_CORPUS_DIR)) {
    CAPTURE(c.name);
    GamNet g = program(c.source);
    std::vector<std::vector<int>> groups(3);
    for (std::size_t i = 0; i < g.net.engines.size(); ++i) groups[rng() % 3].push_back(static_cast<int>(i));
    Net joined = combine_groups(g.net, groups);
    CHECK(validate_net(joined).ok());
    auto r = run_local(joined, initial_question(g.cod.order[0]), options_for(g));
    CHECK(answer_text(r) == c.expect);
    CHECK(r.audit.empty());
  }
}

TEST_CASE("property: scheduled traces are traces of the net") {
  for (const char* src : {"1+2", "new x. x := 2; !x", "(\\x:exp. x) 4"}) {
    CAPTURE(src);
    GamNet g = program(src);
    TraceSet den = game_denotation(g, 2);
    for (std::uint64_t seed : {0u, 1u}) {
      auto r = run_local(g.net, initial_question(g.cod.order[0]), options_for(g, seed));
      CHECK(den.count(canonical(r.trace)));
    }
  }
}
