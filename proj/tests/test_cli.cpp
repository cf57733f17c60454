#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>

#include "gamnet/serialize.hpp"
#include "support.hpp"

using namespace gamnet;
using namespace gamnet::testing;

namespace {

struct Cli {
  int code = -1;
  std::string out;
  std::string err;
};

struct Scratch {
  std::filesystem::path dir = std::filesystem::temp_directory_path() / ("gamnet-cli-" + std::to_string(::getpid()));
  Scratch() { std::filesystem::create_directories(dir); }
  ~Scratch() { std::filesystem::remove_all(dir); }
};

std::filesystem::path scratch() {
  static Scratch s;
  return s.dir;
}

std::string file(const std::string& name, const std::string& text) {
  auto p = (scratch() / name).string();
  write_file(p, text);
  return p;
}

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Cli cli(const std::vector<std::string>& args) {
  std::string cmd = GAMNET_CLI;
  for (auto& a : args) cmd += " " + quote(a);
  auto err = (scratch() / "stderr.txt").string();
  cmd += " 2>" + err;
  Cli r;
  FILE* f = ::popen(cmd.c_str(), "r");
  REQUIRE(f);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) r.out.append(buf, n);
  int status = ::pclose(f);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_file(err);
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const char* const kPlaced =
    "(\\f:var->exp. \\g:var->exp. {new x. x := {f x}@B + {g x}@C; !x}@A) (\\v:var. succ !v) (\\v:var. succ !v)\n";

}  // namespace

TEST_CASE("compile then run") {
  auto src = file("add.ica", "1+2\n");
  auto ir = (scratch() / "add.json").string();
  CHECK(cli({"compile", src, "-o", ir}).code == 0);
  CHECK(std::filesystem::exists(ir));
  auto r = cli({"run", ir});
  CHECK(r.code == 0);
  CHECK(r.out == "answer: 3\n");
  CHECK(cli({"run", src}).out == "answer: 3\n");
  CHECK(cli({"run", "-e", "new x. x := 1"}).out == "answer: done\n");
}

TEST_CASE("the placed program compiles") {
  CHECK(cli({"compile", file("placed.ica", kPlaced), "-o", (scratch() / "placed.json").string()}).code == 0);
}

TEST_CASE("audit flag") {
  auto r = cli({"run", "-e", "new x. x := 8; !x", "--audit"});
  CHECK(r.code == 0);
  CHECK(r.out == "answer: 8\nheaps: empty\n");
}

TEST_CASE("front-end errors exit 4") {
  CHECK(cli({"compile", "-e", "1 1", "-o", (scratch() / "bad.json").string()}).code == 4);
  auto r = cli({"run", "-e", "if 0 then"});
  CHECK(r.code == 4);
  CHECK(r.err.find("syntax error") != std::string::npos);
  CHECK(cli({"run", "-e", "\\x:exp. x"}).code == 4);
  CHECK(cli({"run", (scratch() / "missing.ica").string()}).code == 4);
  CHECK(cli({"frobnicate"}).code == 4);
}

TEST_CASE("divergence exits 2") {
  auto r = cli({"run", "-e", "fix (\\x:exp. x)", "--silent-budget", "10000"});
  CHECK(r.code == 2);
  CHECK(r.out == "answer: none\n");
}

TEST_CASE("same seed, same output and trace") {
  auto t1 = (scratch() / "t1.txt").string(), t2 = (scratch() / "t2.txt").string();
  auto a = cli({"run", "-e", "new x. x := 4; !x * !x", "--seed", "17", "--trace", t1});
  auto b = cli({"run", "-e", "new x. x := 4; !x * !x", "--seed", "17", "--trace", t2});
  CHECK(a.out == b.out);
  CHECK(a.out == "answer: 16\n");
  CHECK(read_file(t1) == read_file(t2));
  CHECK(parse_trace(read_file(t1)).size() == 2);
}

TEST_CASE("check-trace") {
  auto f = copycat_play();
  auto arena = file("cc.arena.json", to_json(f.cc.arena()).dump());
  auto good = file("cc.trace", trace_lines(f.play));
  auto r = cli({"check-trace", good, "--arena", arena});
  CHECK(r.code == 0);
  CHECK(lines(r.out).size() == 7);
  CHECK(r.out.find("fail") == std::string::npos);

  Trace tampered = f.play;
  tampered[2].msg.payload[1] = tampered[1].msg.payload[1];
  auto bad = file("cc.bad.trace", trace_lines(tampered));
  r = cli({"check-trace", bad, "--arena", arena, "--conditions", "unique-pointers"});
  CHECK(r.code == 1);
  CHECK(r.out == "unique-pointers: fail at 2\n");

  CHECK(cli({"check-trace", good, "--arena", arena, "--conditions", "unique-pointers,nonsense"}).code == 4);
  CHECK(cli({"check-trace", file("junk.trace", "Q 1 2\n"), "--arena", arena}).code == 4);
}

TEST_CASE("check-trace accepts an IR file as the arena") {
  auto ir = (scratch() / "lit.json").string();
  REQUIRE(cli({"compile", "-e", "1+2", "-o", ir}).code == 0);
  auto t = (scratch() / "lit.trace").string();
  REQUIRE(cli({"run", ir, "--trace", t}).code == 0);
  CHECK(cli({"check-trace", t, "--arena", ir}).code == 0);
}

TEST_CASE("explore") {
  auto r = cli({"explore", "-e", "5", "--depth", "0"});
  CHECK(r.code == 0);
  CHECK(r.out == "ε\n");
  r = cli({"explore", "-e", "5", "--depth", "2"});
  CHECK(lines(r.out).size() == 3);
  CHECK(cli({"explore", "-e", "5", "--depth", "2"}).out == r.out);
}

TEST_CASE("property: explore output is prefix-closed") {
  for (const char* src : {"\\x:exp. x + 1", "\\c:com. c; 3", "new x. x := 1; !x"}) {
    CAPTURE(src);
    auto r = cli({"explore", "-e", src, "--depth", "5"});
    REQUIRE(r.code == 0);
    auto ls = lines(r.out);
    std::set<std::string> all(ls.begin(), ls.end());
    CHECK(all.count("ε"));
    for (auto& l : ls) {
      auto cut = l.rfind(" :: ");
      std::string parent = cut == std::string::npos ? "ε" : l.substr(0, cut);
      if (l != "ε") CHECK(all.count(parent));
    }
  }
}

TEST_CASE("distributed run with local worker processes") {
  NodeConfig nodes = local_nodes({"A", "B", "C"});
  auto cfg = file("nodes.json", config_json(nodes));
  auto src = file("placed_run.ica", kPlaced);
  auto r = cli({"run", src, "--nodes", cfg, "--spawn-local", "--audit"});
  CHECK(r.code == 0);
  CHECK(r.out == "answer: 2\nheaps: empty\n");
}

TEST_CASE("distributed config errors exit 4") {
  NodeConfig two = local_nodes({"A", "B"});
  auto cfg = file("two.json", config_json(two));
  CHECK(cli({"run", file("gap.ica", kPlaced), "--nodes", cfg, "--spawn-local"}).code == 4);
  CHECK(cli({"run", "-e", "1", "--nodes", file("broken.json", "{")}).code == 4);
  auto ir = (scratch() / "one.json").string();
  REQUIRE(cli({"compile", "-e", "1", "-o", ir}).code == 0);
  CHECK(cli({"serve", "--node", "Z", "--config", cfg, "--ir", ir}).code == 4);
}

TEST_CASE("serve exits 4 when its port is taken") {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof a;
  REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof a) == 0);
  REQUIRE(::listen(fd, 1) == 0);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len);
  NodeConfig cfg = local_nodes({"A"});
  cfg.nodes["A"].port = ntohs(a.sin_port);
  auto ir = (scratch() / "one.json").string();
  REQUIRE(cli({"compile", "-e", "1", "-o", ir}).code == 0);
  CHECK(cli({"serve", "--node", "A", "--config", file("taken.json", config_json(cfg)), "--ir", ir}).code == 4);
  ::close(fd);
}
