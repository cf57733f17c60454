#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <climits>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gamnet/explore.hpp"
#include "gamnet/ica.hpp"
#include "gamnet/runtime.hpp"
#include "gamnet/serialize.hpp"

extern char** environ;

using namespace gamnet;

namespace {

constexpr int kExitBudget = 2;
constexpr int kExitFault = 3;
constexpr int kExitConfig = 4;

struct Program {
  GamNet g;
  std::string type;
};

bool is_ir_path(const std::string& path) {
  return path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
}

Program compile_source(const std::string& src, bool parallel) {
  auto t = ica::parse(src);
  auto ty = ica::typecheck(t);
  return Program{ica::compile(t, {}, ica::CompileOptions{parallel}), ica::to_string(ty)};
}

Program load_program(const std::string& path, const std::string& expr, bool parallel) {
  if (!expr.empty()) return compile_source(expr, parallel);
  if (path.empty()) throw ConfigError("no program given (a file or --expr)");
  if (is_ir_path(path)) {
    Program p;
    p.g = ir_from_json(Json::parse(read_file(path)), &p.type);
    return p;
  }
  return compile_source(read_file(path), parallel);
}

void require_runnable(const Program& p) {
  if (!p.g.dom.order.empty() || p.g.cod.order.size() != 2)
    throw ConfigError("only closed programs of type exp or com can be run (type " + p.type + ")");
}

std::string self_exe() {
  char buf[PATH_MAX];
  ssize_t n = ::readlink("/proc/self/exe", buf, sizeof buf - 1);
  if (n <= 0) throw ConfigError("cannot locate the gamnet executable");
  buf[n] = 0;
  return buf;
}

std::string temp_path(const std::string& stem) {
  std::string tmpl = (std::filesystem::temp_directory_path() / (stem + "XXXXXX")).string();
  std::vector<char> b(tmpl.begin(), tmpl.end());
  b.push_back(0);
  int fd = ::mkstemp(b.data());
  if (fd < 0) throw ConfigError("cannot create a temporary file");
  ::close(fd);
  return b.data();
}

pid_t spawn(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  pid_t pid = 0;
  if (::posix_spawn(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0)
    throw ConfigError("cannot start " + args[0]);
  return pid;
}

int report(const RunResult& r, bool audit, const std::string& trace_out) {
  if (!trace_out.empty()) write_file(trace_out, trace_lines(r.trace));
  for (auto& f : r.faults) std::cerr << "fault: " << f << "\n";
  if (r.status == RunResult::BudgetExhausted) std::cerr << "no answer within budget\n";
  std::cout << "answer: " << answer_text(r) << "\n";
  if (audit) std::cout << to_string(r.audit) << "\n";
  return exit_code(r);
}

struct RunArgs {
  std::string input, expr, nodes, trace_out;
  std::uint64_t seed = 0;
  bool round_robin = false, audit = false, spawn_local = false, parallel = false;
  std::uint64_t silent = Budget{}.silent, observable = Budget{}.observable;
};

int cmd_run(const RunArgs& a) {
  Program p = load_program(a.input, a.expr, a.parallel);
  require_runnable(p);
  RunOptions opt;
  opt.policy = a.round_robin ? SchedulerPolicy::round_robin() : SchedulerPolicy::seeded(a.seed);
  opt.budget = Budget{a.silent, a.observable};
  opt.answer_ports = {p.g.cod.order[1]};
  Message q = initial_question(p.g.cod.order[0]);
  if (a.nodes.empty()) return report(run_local(p.g.net, q, opt), a.audit, a.trace_out);

  NodeConfig cfg = load_node_config(a.nodes);
  auto gaps = unresolved_placements(p.g.net, cfg);
  if (!gaps.empty()) throw ConfigError("placement " + gaps.front() + " is not a configured node");
  std::vector<pid_t> children;
  std::string ir_path;
  if (a.spawn_local) {
    ir_path = temp_path("gamnet-ir-");
    write_file(ir_path, ir_to_json(p.g, p.type).dump());
    std::string exe = self_exe();
    for (auto& [name, _] : cfg.nodes) {
      if (name == cfg.root) continue;
      children.push_back(spawn({exe, "serve", "--node", name, "--config", a.nodes, "--ir", ir_path, "--seed",
                                std::to_string(a.seed), "--silent-budget", std::to_string(a.silent)}));
    }
  }
  int code;
  {
    NodeRuntime root(p.g.net, cfg, cfg.root, opt);
    root.listen();
    code = report(root.run(q), a.audit, a.trace_out);
  }
  for (pid_t c : children) {
    int status = 0;
    ::waitpid(c, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) log(1, "a worker exited abnormally");
  }
  if (!ir_path.empty()) std::filesystem::remove(ir_path);
  return code;
}

int cmd_serve(const std::string& node, const std::string& config, const std::string& ir, std::uint64_t seed,
              std::uint64_t silent) {
  NodeConfig cfg = load_node_config(config);
  GamNet g = ir_from_json(Json::parse(read_file(ir)));
  RunOptions opt;
  opt.policy = SchedulerPolicy::seeded(seed);
  opt.budget.silent = silent;
  NodeRuntime rt(g.net, cfg, node, opt);
  rt.listen();
  log(2, "node " + node + " serving");
  rt.serve();
  return 0;
}

int cmd_check_trace(const std::string& trace_path, const std::string& arena_path, const std::string& conditions) {
  Json j = Json::parse(read_file(arena_path));
  GameInterface arena = j.value("format", "") == "gamnet-ir" ? ir_from_json(j).arena() : arena_from_json(j);
  Trace t = parse_trace(read_file(trace_path));
  std::vector<Condition> cs;
  if (conditions.empty()) {
    cs = all_conditions();
  } else {
    std::stringstream ss(conditions);
    std::string name;
    while (std::getline(ss, name, ',')) {
      auto c = condition_from_name(name);
      if (!c) throw ConfigError("unknown condition " + name);
      cs.push_back(*c);
    }
  }
  LegalityReport r;
  try {
    r = check_legal(t, arena);
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  bool ok = true;
  for (auto c : cs) {
    auto at = r.first_failure[static_cast<int>(c)];
    std::cout << condition_name(c) << ": " << (at ? "fail at " + std::to_string(*at) : std::string("pass")) << "\n";
    ok = ok && !at;
  }
  return ok ? 0 : 1;
}

int cmd_explore(const std::string& input, const std::string& expr, std::size_t depth, std::size_t max_states) {
  Program p = load_program(input, expr, false);
  PlayOptions po;
  if (!p.type.empty()) po.unit_answers = ica::unit_answers(ica::parse_type(p.type), p.g.cod);
  GameInterface arena = p.g.arena();
  Denotation d = denotation_upto(p.g.net, depth, game_opponent(arena, po), ExploreOptions{max_states});
  std::vector<std::string> lines;
  for (auto& t : d.traces) lines.push_back(to_string(t));
  std::sort(lines.begin(), lines.end());
  for (auto& l : lines) std::cout << l << "\n";
  if (d.partial) {
    std::cerr << "partial: state budget exhausted\n";
    return kExitBudget;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile and run programs as networks of abstract machines"};
  app.require_subcommand(1);

  std::string src, out, expr;
  bool parallel = false;
  auto* compile = app.add_subcommand("compile", "Compile a source file to IR");
  compile->add_option("source", src, "source file");
  compile->add_option("-e,--expr", expr, "program text instead of a file");
  compile->add_option("-o,--output", out, "IR output path")->required();
  compile->add_flag("--parallel", parallel, "allow parallel composition");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run a program and print its answer");
  run->add_option("input", ra.input, "source file or .json IR");
  run->add_option("-e,--expr", ra.expr, "program text instead of a file");
  run->add_option("--seed", ra.seed, "scheduler seed");
  run->add_flag("--round-robin", ra.round_robin, "round-robin scheduling");
  run->add_option("--nodes", ra.nodes, "node config for distributed execution");
  run->add_flag("--spawn-local", ra.spawn_local, "start the other nodes as local processes");
  run->add_option("--trace", ra.trace_out, "write the observable trace here");
  run->add_flag("--audit", ra.audit, "print the heap audit");
  run->add_flag("--parallel", ra.parallel, "allow parallel composition");
  run->add_option("--silent-budget", ra.silent, "maximum silent steps");
  run->add_option("--observable-budget", ra.observable, "maximum observable messages");

  std::string node, config, ir;
  std::uint64_t serve_seed = 0, serve_silent = Budget{}.silent;
  auto* serve = app.add_subcommand("serve", "Host the engines placed on one node");
  serve->add_option("--node", node, "node name")->required();
  serve->add_option("--config", config, "node config")->required();
  serve->add_option("--ir", ir, "compiled IR")->required();
  serve->add_option("--seed", serve_seed, "scheduler seed");
  serve->add_option("--silent-budget", serve_silent, "maximum silent steps");

  std::string trace_path, arena_path, conditions;
  auto* check = app.add_subcommand("check-trace", "Check a trace against the legality conditions");
  check->add_option("trace", trace_path, "trace file")->required();
  check->add_option("--arena", arena_path, "arena or IR file")->required();
  check->add_option("--conditions", conditions, "comma-separated condition names");

  std::string explore_in, explore_expr;
  std::size_t depth = 8, max_states = ExploreOptions{}.max_states;
  auto* explore = app.add_subcommand("explore", "List the traces of a net up to a depth");
  explore->add_option("input", explore_in, "source file or .json IR");
  explore->add_option("-e,--expr", explore_expr, "program text instead of a file");
  explore->add_option("--depth", depth, "maximum trace length");
  explore->add_option("--max-states", max_states, "state budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*compile) {
      Program p = load_program(src, expr, parallel);
      write_file(out, ir_to_json(p.g, p.type).dump());
      return 0;
    }
    if (*run) return cmd_run(ra);
    if (*serve) return cmd_serve(node, config, ir, serve_seed, serve_silent);
    if (*check) return cmd_check_trace(trace_path, arena_path, conditions);
    if (*explore) return cmd_explore(explore_in, explore_expr, depth, max_states);
  } catch (const ica::SyntaxError& e) {
    std::cerr << "syntax error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ica::TypeError& e) {
    std::cerr << "type error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFault;
  }
  return 0;
}
