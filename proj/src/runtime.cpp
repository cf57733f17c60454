#include "gamnet/runtime.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gamnet/explore.hpp"

namespace gamnet {

int log_level() {
  static const int level = [] {
    const char* v = std::getenv("GAMNET_LOG");
    if (!v) return 0;
    std::string s = v;
    if (s == "error") return 1;
    if (s == "info") return 2;
    if (s == "debug") return 3;
    try {
      return std::stoi(s);
    } catch (...) {
      return 0;
    }
  }();
  return level;
}

void log(int level, const std::string& msg) {
  if (level > log_level()) return;
  static std::mutex m;
  std::lock_guard<std::mutex> g(m);
  std::cerr << "gamnet: " << msg << "\n";
}

std::size_t HeapAudit::cells() const {
  std::size_t n = 0;
  for (auto& [_, c] : residual) n += c;
  return n;
}

HeapAudit heap_audit(const std::vector<EngineConfig>& engines) {
  HeapAudit a;
  for (std::size_t i = 0; i < engines.size(); ++i)
    if (!engines[i].heap.empty()) a.residual[i] = engines[i].heap.size();
  return a;
}

HeapAudit heap_audit(const NetConfig& c) { return heap_audit(c.engines); }

std::string to_string(const HeapAudit& a) {
  if (a.empty()) return "heaps: empty";
  std::ostringstream os;
  os << "heaps: " << a.cells() << " residual cells";
  for (auto [i, n] : a.residual) os << " [engine " << i << ": " << n << "]";
  return os.str();
}

Message initial_question(PortName q) {
  return Message{q, {ptr(PointerName{make_atom(kRootTag, 0)}), ptr(PointerName{make_atom(kRootTag, 1)}), Data{}}};
}

std::string answer_text(const RunResult& r) {
  if (!r.answer) return "none";
  const Data& d = r.answer->payload[2];
  if (is_int(d)) return std::to_string(std::get<std::int64_t>(d));
  return "done";
}

int exit_code(const RunResult& r) {
  switch (r.status) {
    case RunResult::Answered: return 0;
    case RunResult::BudgetExhausted: return 2;
    case RunResult::Faulted: return 3;
  }
  return 3;
}

namespace {

// Executes the engines of one node in place. Messages for engines hosted
// elsewhere, and external outputs, collect in `outbox`.
class Machine {
 public:
  Machine(const Net& s, const NetIndex& idx, std::vector<bool> local, const SchedulerPolicy& p, std::uint16_t tag)
      : s_(s), idx_(idx), local_(std::move(local)), policy_(p), rng_(p.seed), tag_(tag) {
    cfg_ = initial_net(s);
  }

  std::vector<Message> outbox;
  std::vector<std::string> faults;

  bool has_work() const { return threads_ > 0 || !cfg_.pending.empty(); }

  // Routes a message addressed to an engine O-port (or an external P-port).
  void post(const Message& m) {
    int r = idx_.receiver(m.port);
    if (r >= 0 && local_[static_cast<std::size_t>(r)])
      cfg_.pending.push_back(m);
    else
      outbox.push_back(m);
  }

  void step() {
    std::size_t n = threads_ + cfg_.pending.size();
    if (n == 0) return;
    std::size_t pick;
    if (policy_.kind == SchedulerPolicy::RoundRobin) {
      pick = rr_++ % n;
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
    }
    if (pick < cfg_.pending.size()) {
      Message m = cfg_.pending[pick];
      cfg_.pending.erase(cfg_.pending.begin() + static_cast<std::ptrdiff_t>(pick));
      auto r = static_cast<std::size_t>(idx_.receiver(m.port));
      if (log_level() >= 3) log(3, "engine " + std::to_string(r) + " <- " + to_string(m));
      std::size_t before = cfg_.engines[r].threads.size();
      receive_in_place(cfg_.engines[r], s_.engines[r], m);
      threads_ += cfg_.engines[r].threads.size() - before;
      return;
    }
    pick -= cfg_.pending.size();
    for (std::size_t i = 0; i < cfg_.engines.size(); ++i) {
      auto& ec = cfg_.engines[i];
      if (pick >= ec.threads.size()) {
        pick -= ec.threads.size();
        continue;
      }
      std::size_t before = ec.threads.size();
      ThreadStep st = step_thread(ec, pick, s_.engines[i], idx_.chi(),
                                  [this] { return PointerName{make_atom(tag_, next_++)}; });
      threads_ = threads_ + ec.threads.size() - before;
      if (st.kind == ThreadStep::Faulted) {
        std::string d = ec.faults.empty() ? "fault" : ec.faults.back().detail;
        faults.push_back("engine " + std::to_string(i) + ": " + d);
      }
      if (st.out) post(*st.out);
      return;
    }
  }

  const NetConfig& config() const { return cfg_; }

 private:
  const Net& s_;
  const NetIndex& idx_;
  std::vector<bool> local_;
  SchedulerPolicy policy_;
  std::mt19937_64 rng_;
  std::uint16_t tag_;
  std::uint64_t next_ = 0;
  std::size_t rr_ = 0;
  std::size_t threads_ = 0;
  NetConfig cfg_;
};

bool is_answer(const Message& m, const Message& question, const RunOptions& opt) {
  if (!opt.answer_ports.empty()) return opt.answer_ports.count(m.port) != 0;
  return m.payload[0] == question.payload[1];
}

RunResult run_exhaustive(const Net& s, const Message& question, const RunOptions& opt) {
  RunResult res;
  InputGenerator ask = [&](const Trace& t) { return t.empty() ? std::vector<Message>{question} : std::vector<Message>{}; };
  Denotation d = denotation_upto(s, opt.policy.depth, ask);
  for (auto& t : d.traces) {
    for (auto& e : t) {
      if (e.pol == Polarity::P && is_answer(e.msg, t.front().msg, opt)) {
        res.status = RunResult::Answered;
        res.answer = e.msg;
        res.trace = t;
        return res;
      }
    }
  }
  res.silent_steps = d.states;
  return res;
}

}  // namespace

RunResult run_local(const Net& s, const Message& question, const RunOptions& opt) {
  if (opt.policy.kind == SchedulerPolicy::Exhaustive) return run_exhaustive(s, question, opt);
  NetIndex idx(s);
  if (!idx.external_o(question.port)) throw PreconditionError("question on a port that is not an external input");
  RunResult res;
  Machine m(s, idx, std::vector<bool>(s.engines.size(), true), opt.policy, 0);
  res.trace.push_back(TraceEvent{Polarity::O, question});
  m.post(Message{idx.route(question.port), question.payload});
  std::uint64_t observable = 1;
  for (;;) {
    while (!m.outbox.empty()) {
      Message out = m.outbox.front();
      m.outbox.erase(m.outbox.begin());
      res.trace.push_back(TraceEvent{Polarity::P, out});
      ++observable;
      if (is_answer(out, question, opt)) {
        res.status = RunResult::Answered;
        res.answer = out;
        res.audit = heap_audit(m.config());
        return res;
      }
      if (opt.env)
        for (auto& in : opt.env(out)) {
          res.trace.push_back(TraceEvent{Polarity::O, in});
          ++observable;
          m.post(Message{idx.route(in.port), in.payload});
        }
    }
    if (!m.faults.empty()) {
      res.status = RunResult::Faulted;
      res.faults = m.faults;
      break;
    }
    if (!m.has_work() || observable > opt.budget.observable || res.silent_steps >= opt.budget.silent) break;
    m.step();
    ++res.silent_steps;
  }
  res.audit = heap_audit(m.config());
  return res;
}

// ---------------------------------------------------------------- frames

namespace {

void put_be(std::uint8_t* p, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) {
    p[i] = static_cast<std::uint8_t>(v & 0xFF);
    v >>= 8;
  }
}

std::uint64_t get_be(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

FrameBytes encode_frame(const Frame& f) {
  FrameBytes b{};
  put_be(b.data(), kFrameLength, 4);
  put_be(b.data() + 4, static_cast<std::uint16_t>(f.kind), 2);
  put_be(b.data() + 6, f.msg.port.v, 8);
  std::uint8_t* p = b.data() + 14;
  for (auto& d : f.msg.payload) {
    if (is_pointer(d)) {
      p[0] = 1;
      put_be(p + 1, std::get<PointerName>(d).v, 8);
    } else if (is_int(d)) {
      p[0] = 2;
      put_be(p + 1, static_cast<std::uint64_t>(std::get<std::int64_t>(d)), 8);
    }
    p += 9;
  }
  return b;
}

Frame decode_frame(const std::uint8_t* b, std::size_t n) {
  if (n != kFrameSize) throw ProtocolError("frame of " + std::to_string(n) + " bytes");
  if (get_be(b, 4) != kFrameLength) throw ProtocolError("bad frame length field " + std::to_string(get_be(b, 4)));
  Frame f;
  auto kind = get_be(b + 4, 2);
  if (kind > static_cast<std::uint16_t>(FrameKind::Stop)) throw ProtocolError("unknown frame kind " + std::to_string(kind));
  f.kind = static_cast<FrameKind>(kind);
  f.msg.port = PortName{get_be(b + 6, 8)};
  const std::uint8_t* p = b + 14;
  for (auto& d : f.msg.payload) {
    std::uint64_t v = get_be(p + 1, 8);
    switch (p[0]) {
      case 0:
        if (v != 0) throw ProtocolError("empty slot with nonzero payload");
        d = Data{};
        break;
      case 1: d = ptr(PointerName{v}); break;
      case 2: d = num(static_cast<std::int64_t>(v)); break;
      default: throw ProtocolError("bad tag byte " + std::to_string(p[0]));
    }
    p += 9;
  }
  return f;
}

// ---------------------------------------------------------------- node config

NodeConfig parse_node_config(const std::string& text) {
  NodeConfig cfg;
  try {
    auto j = nlohmann::json::parse(text);
    for (auto& [name, addr] : j.at("nodes").items()) {
      std::string s = addr.get<std::string>();
      auto colon = s.rfind(':');
      if (colon == std::string::npos) throw ConfigError("node " + name + ": address must be host:port");
      int port = std::stoi(s.substr(colon + 1));
      if (port < 0 || port > 65535) throw ConfigError("node " + name + ": bad port");
      cfg.nodes[name] = NodeAddress{s.substr(0, colon), static_cast<std::uint16_t>(port)};
    }
    cfg.root = j.at("root").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("node config: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ConfigError("node config: bad port number");
  }
  if (!cfg.nodes.count(cfg.root)) throw ConfigError("node config: root " + cfg.root + " is not a node");
  return cfg;
}

NodeConfig load_node_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_node_config(ss.str());
}

std::vector<std::string> unresolved_placements(const Net& s, const NodeConfig& cfg) {
  std::set<std::string> out;
  for (auto& e : s.engines)
    if (!e.placement.empty() && !cfg.nodes.count(e.placement)) out.insert(e.placement);
  return {out.begin(), out.end()};
}

// ---------------------------------------------------------------- node runtime

struct NodeRuntime::Impl {
  Net net;
  NetIndex idx;
  NodeConfig cfg;
  std::string self;
  RunOptions opt;
  std::vector<std::string> names;
  int self_index = 0;
  int root_index = 0;
  std::vector<int> engine_node;
  std::unique_ptr<Machine> machine;

  int listen_fd = -1;
  std::thread acceptor;
  std::vector<std::thread> readers;
  std::vector<int> accepted;
  std::map<int, int> out_fd;  // node index → socket
  std::mutex links;

  std::mutex inbox_m;
  std::condition_variable inbox_cv;
  std::deque<Frame> inbox;
  std::optional<std::string> link_failure;
  std::atomic<bool> closing{false};

  std::uint64_t sent = 0, received = 0;
  int connect_timeout_ms = 10'000;

  Impl(const Net& s, const NodeConfig& c, const std::string& me, const RunOptions& o)
      : net(s), idx(net), cfg(c), self(me), opt(o) {
    if (!cfg.nodes.count(self)) throw ConfigError("node " + self + " is not in the config");
    auto gaps = unresolved_placements(net, cfg);
    if (!gaps.empty()) throw ConfigError("placement " + gaps.front() + " is not a configured node");
    for (auto& [n, _] : cfg.nodes) names.push_back(n);
    auto index_of = [&](const std::string& n) {
      return static_cast<int>(std::find(names.begin(), names.end(), n) - names.begin());
    };
    self_index = index_of(self);
    root_index = index_of(cfg.root);
    std::vector<bool> local;
    for (auto& e : net.engines) {
      int node = e.placement.empty() ? root_index : index_of(e.placement);
      engine_node.push_back(node);
      local.push_back(node == self_index);
    }
    SchedulerPolicy p = opt.policy;
    p.seed ^= 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(self_index + 1);
    machine = std::make_unique<Machine>(net, idx, std::move(local), p, static_cast<std::uint16_t>(self_index + 1));
  }

  ~Impl() { close_all(); }

  bool is_root() const { return self_index == root_index; }

  void close_all() {
    closing = true;
    if (listen_fd >= 0) {
      ::shutdown(listen_fd, SHUT_RDWR);
      ::close(listen_fd);
      listen_fd = -1;
    }
    {
      std::lock_guard<std::mutex> g(links);
      for (auto& [_, fd] : out_fd) {
        ::shutdown(fd, SHUT_RDWR);
        ::close(fd);
      }
      out_fd.clear();
      for (int fd : accepted) ::shutdown(fd, SHUT_RDWR);
    }
    if (acceptor.joinable()) acceptor.join();
    for (auto& t : readers)
      if (t.joinable()) t.join();
    readers.clear();
    for (int fd : accepted) ::close(fd);
    accepted.clear();
  }

  void fail_link(const std::string& why) {
    if (closing) return;
    std::lock_guard<std::mutex> g(inbox_m);
    if (!link_failure) link_failure = why;
    inbox_cv.notify_all();
  }

  void listen() {
    const NodeAddress& a = cfg.nodes.at(self);
    listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd < 0) throw ConfigError("socket: " + std::string(std::strerror(errno)));
    int one = 1;
    ::setsockopt(listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(a.port);
    sa.sin_addr.s_addr = resolve(a.host);
    if (::bind(listen_fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0 || ::listen(listen_fd, 16) < 0) {
      std::string err = std::strerror(errno);
      ::close(listen_fd);
      listen_fd = -1;
      throw ConfigError("node " + self + ": cannot listen on " + a.host + ":" + std::to_string(a.port) + ": " + err);
    }
    acceptor = std::thread([this] { accept_loop(); });
  }

  static in_addr_t resolve(const std::string& host) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) throw ConfigError("cannot resolve " + host);
    in_addr_t out = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr.s_addr;
    ::freeaddrinfo(res);
    return out;
  }

  void accept_loop() {
    for (;;) {
      int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) return;
      std::lock_guard<std::mutex> g(links);
      if (closing) {
        ::close(fd);
        return;
      }
      accepted.push_back(fd);
      readers.emplace_back([this, fd] { read_loop(fd); });
    }
  }

  static bool read_exact(int fd, std::uint8_t* p, std::size_t n) {
    while (n > 0) {
      ssize_t k = ::recv(fd, p, n, 0);
      if (k <= 0) return false;
      p += k;
      n -= static_cast<std::size_t>(k);
    }
    return true;
  }

  void read_loop(int fd) {
    int peer = -1;
    FrameBytes b;
    for (;;) {
      if (!read_exact(fd, b.data(), b.size())) {
        if (peer >= 0) fail_link("lost connection to node " + names[static_cast<std::size_t>(peer)]);
        return;
      }
      Frame f;
      try {
        f = decode_frame(b.data(), b.size());
      } catch (const ProtocolError& e) {
        fail_link(std::string("protocol error: ") + e.what());
        return;
      }
      if (f.kind == FrameKind::Hello) {
        peer = static_cast<int>(std::get<std::int64_t>(f.msg.payload[0]));
        continue;
      }
      std::lock_guard<std::mutex> g(inbox_m);
      inbox.push_back(f);
      inbox_cv.notify_all();
    }
  }

  int connect_to(int node) {
    auto it = out_fd.find(node);
    if (it != out_fd.end()) return it->second;
    const NodeAddress& a = cfg.nodes.at(names[static_cast<std::size_t>(node)]);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(connect_timeout_ms);
    for (int delay = 5;; delay = std::min(delay * 2, 200)) {
      int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      sockaddr_in sa{};
      sa.sin_family = AF_INET;
      sa.sin_port = htons(a.port);
      sa.sin_addr.s_addr = resolve(a.host);
      if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) == 0) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        out_fd[node] = fd;
        write_frame(fd, node, Frame{FrameKind::Hello, Message{PortName{0}, {num(self_index), Data{}, Data{}}}});
        return fd;
      }
      ::close(fd);
      if (std::chrono::steady_clock::now() > deadline)
        throw Error("cannot connect to node " + names[static_cast<std::size_t>(node)]);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
  }

  void write_frame(int fd, int node, const Frame& f) {
    FrameBytes b = encode_frame(f);
    std::size_t off = 0;
    while (off < b.size()) {
      ssize_t k = ::send(fd, b.data() + off, b.size() - off, MSG_NOSIGNAL);
      if (k <= 0) throw Error("lost connection to node " + names[static_cast<std::size_t>(node)]);
      off += static_cast<std::size_t>(k);
    }
  }

  void send(int node, const Frame& f) {
    std::lock_guard<std::mutex> g(links);
    write_frame(connect_to(node), node, f);
    if (f.kind == FrameKind::Deliver) ++sent;
    log(3, self + " -> " + names[static_cast<std::size_t>(node)] + " " + to_string(f.msg));
  }

  // Moves the machine's outbox onto the wire; external outputs reaching the
  // root are returned for the caller to handle.
  std::vector<Message> flush() {
    std::vector<Message> external;
    for (auto& m : machine->outbox) {
      int r = idx.receiver(m.port);
      int node = r >= 0 ? engine_node[static_cast<std::size_t>(r)] : root_index;
      if (node == self_index)
        external.push_back(m);
      else
        send(node, Frame{FrameKind::Deliver, m});
    }
    machine->outbox.clear();
    return external;
  }

  // Takes every queued frame; blocks up to `wait` if there is none.
  std::deque<Frame> take(std::chrono::milliseconds wait) {
    std::unique_lock<std::mutex> g(inbox_m);
    if (inbox.empty() && wait.count() > 0) inbox_cv.wait_for(g, wait, [&] { return !inbox.empty() || link_failure; });
    if (link_failure) throw Error(*link_failure);
    std::deque<Frame> out;
    out.swap(inbox);
    return out;
  }

  void send_audit() {
    HeapAudit a = heap_audit(machine->config());
    for (auto [i, n] : a.residual)
      send(root_index, Frame{FrameKind::AuditReply, Message{PortName{0}, {num(static_cast<std::int64_t>(i)),
                                                                          num(static_cast<std::int64_t>(n)), Data{}}}});
    send(root_index, Frame{FrameKind::AuditReply, Message{PortName{0}, {num(-1), num(static_cast<std::int64_t>(sent)),
                                                                        num(static_cast<std::int64_t>(received))}}});
  }

  void serve() {
    std::uint64_t steps = 0;
    bool stopped = false;
    for (;;) {
      auto frames = take(machine->has_work() && !stopped ? std::chrono::milliseconds(0) : std::chrono::milliseconds(50));
      for (auto& f : frames) {
        switch (f.kind) {
          case FrameKind::Deliver:
            ++received;
            machine->post(f.msg);
            break;
          case FrameKind::AuditRequest: send_audit(); break;
          case FrameKind::Shutdown: closing = true; return;
          default: break;
        }
      }
      if (stopped || !machine->has_work()) continue;
      machine->step();
      ++steps;
      if (!machine->faults.empty()) {
        for (auto& f : machine->faults) log(1, self + ": " + f);
        send(root_index, Frame{FrameKind::Stop, Message{PortName{0}, {num(3), Data{}, Data{}}}});
        stopped = true;
      } else if (steps >= opt.budget.silent) {
        send(root_index, Frame{FrameKind::Stop, Message{PortName{0}, {num(2), Data{}, Data{}}}});
        stopped = true;
      }
      flush();
    }
  }

  RunResult run(const Message& question) {
    if (!is_root()) throw PreconditionError("only the root node runs the question");
    if (!idx.external_o(question.port)) throw PreconditionError("question on a port that is not an external input");
    RunResult res;
    res.trace.push_back(TraceEvent{Polarity::O, question});
    machine->post(Message{idx.route(question.port), question.payload});
    std::uint64_t observable = 1;
    bool done = false;
    auto observe = [&](const Message& out) {
      res.trace.push_back(TraceEvent{Polarity::P, out});
      ++observable;
      if (is_answer(out, question, opt)) {
        res.status = RunResult::Answered;
        res.answer = out;
        done = true;
        return;
      }
      if (opt.env)
        for (auto& in : opt.env(out)) {
          res.trace.push_back(TraceEvent{Polarity::O, in});
          ++observable;
          machine->post(Message{idx.route(in.port), in.payload});
        }
    };
    while (!done) {
      for (auto& m : flush()) {
        observe(m);
        if (done) break;
      }
      if (done) break;
      auto frames = take(machine->has_work() ? std::chrono::milliseconds(0) : std::chrono::milliseconds(50));
      for (auto& f : frames) {
        if (f.kind == FrameKind::Deliver) {
          ++received;
          if (idx.receiver(f.msg.port) < 0)
            observe(f.msg);
          else
            machine->post(f.msg);
        } else if (f.kind == FrameKind::Stop) {
          res.status = std::get<std::int64_t>(f.msg.payload[0]) == 3 ? RunResult::Faulted : RunResult::BudgetExhausted;
          res.faults.push_back("a worker node stopped");
          done = true;
        }
        if (done) break;
      }
      if (done) break;
      if (!machine->faults.empty()) {
        res.status = RunResult::Faulted;
        res.faults = machine->faults;
        break;
      }
      if (observable > opt.budget.observable || res.silent_steps >= opt.budget.silent) break;
      if (machine->has_work()) {
        machine->step();
        ++res.silent_steps;
      }
    }
    collect_audits(res);
    shutdown_workers();
    return res;
  }

  void collect_audits(RunResult& res) {
    HeapAudit a = heap_audit(machine->config());
    std::uint64_t total_sent = sent, total_received = received;
    std::size_t waiting = 0;
    for (int n = 0; n < static_cast<int>(names.size()); ++n) {
      if (n == self_index) continue;
      send(n, Frame{FrameKind::AuditRequest, Message{}});
      ++waiting;
    }
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    while (waiting > 0 && std::chrono::steady_clock::now() < deadline) {
      for (auto& f : take(std::chrono::milliseconds(50))) {
        if (f.kind == FrameKind::Deliver) {
          ++total_received;
          continue;
        }
        if (f.kind != FrameKind::AuditReply) continue;
        auto i = std::get<std::int64_t>(f.msg.payload[0]);
        if (i < 0) {
          total_sent += static_cast<std::uint64_t>(std::get<std::int64_t>(f.msg.payload[1]));
          total_received += static_cast<std::uint64_t>(std::get<std::int64_t>(f.msg.payload[2]));
          --waiting;
        } else {
          a.residual[static_cast<std::size_t>(i)] = static_cast<std::size_t>(std::get<std::int64_t>(f.msg.payload[1]));
        }
      }
    }
    if (waiting > 0) res.faults.push_back("audit replies missing from " + std::to_string(waiting) + " nodes");
    // audit and shutdown frames are control traffic and not counted
    res.audit = a;
    res.frames_sent = total_sent;
    res.frames_received = total_received;
  }

  void shutdown_workers() {
    closing = true;
    for (int n = 0; n < static_cast<int>(names.size()); ++n) {
      if (n == self_index) continue;
      try {
        send(n, Frame{FrameKind::Shutdown, Message{}});
      } catch (const Error& e) {
        log(1, e.what());
      }
    }
  }
};

NodeRuntime::NodeRuntime(const Net& s, const NodeConfig& cfg, const std::string& self, const RunOptions& opt)
    : impl_(std::make_unique<Impl>(s, cfg, self, opt)) {}

NodeRuntime::~NodeRuntime() = default;

void NodeRuntime::listen() { impl_->listen(); }

void NodeRuntime::serve() {
  impl_->connect_timeout_ms = connect_timeout_ms;
  impl_->serve();
}

RunResult NodeRuntime::run(const Message& question) {
  impl_->connect_timeout_ms = connect_timeout_ms;
  return impl_->run(question);
}

RunResult run_distributed(const Net& s, const NodeConfig& cfg, const Message& question,
                          const DistributedOptions& opt) {
  std::vector<std::unique_ptr<NodeRuntime>> workers;
  std::vector<std::thread> threads;
  std::mutex err_m;
  std::vector<std::string> errors;
  if (opt.spawn_workers) {
    for (auto& [name, _] : cfg.nodes) {
      if (name == cfg.root) continue;
      workers.push_back(std::make_unique<NodeRuntime>(s, cfg, name, opt.run));
      workers.back()->connect_timeout_ms = opt.connect_timeout_ms;
      workers.back()->listen();
    }
    for (auto& w : workers)
      threads.emplace_back([&, node = w.get()] {
        try {
          node->serve();
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> g(err_m);
          errors.push_back(e.what());
        }
      });
  }
  RunResult res;
  {
    NodeRuntime root(s, cfg, cfg.root, opt.run);
    root.connect_timeout_ms = opt.connect_timeout_ms;
    root.listen();
    res = root.run(question);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) res.faults.push_back(e);
  return res;
}

}  // namespace gamnet
