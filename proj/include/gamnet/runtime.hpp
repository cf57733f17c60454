#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gamnet/net.hpp"

namespace gamnet {

struct SchedulerPolicy {
  enum Kind { Seeded, RoundRobin, Exhaustive } kind = Seeded;
  std::uint64_t seed = 0;
  std::size_t depth = 8;  // Exhaustive only

  static SchedulerPolicy seeded(std::uint64_t s) { return {Seeded, s, 0}; }
  static SchedulerPolicy round_robin() { return {RoundRobin, 0, 0}; }
  static SchedulerPolicy exhaustive(std::size_t k) { return {Exhaustive, 0, k}; }
};

struct Budget {
  std::uint64_t silent = 1'000'000;
  std::uint64_t observable = 10'000;
};

struct HeapAudit {
  // engine index → residual cell count, for engines with a nonempty heap
  std::map<std::size_t, std::size_t> residual;
  bool empty() const { return residual.empty(); }
  std::size_t cells() const;
};

HeapAudit heap_audit(const NetConfig& c);
HeapAudit heap_audit(const std::vector<EngineConfig>& engines);
std::string to_string(const HeapAudit& a);

// Answers the net's questions to its context: called on every external output
// that is not the final answer; returned messages are injected as inputs.
using Environment = std::function<std::vector<Message>(const Message& out)>;

struct RunResult {
  enum Status { Answered, BudgetExhausted, Faulted } status = BudgetExhausted;
  std::optional<Message> answer;
  Trace trace;
  HeapAudit audit;
  std::vector<std::string> faults;
  std::uint64_t silent_steps = 0;
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_received = 0;
};

// (q, r0, r1, ∅) with r0, r1 minted from the root tag.
Message initial_question(PortName q);

struct RunOptions {
  SchedulerPolicy policy;
  Budget budget;
  Environment env;
  // Ports on which the answer may arrive; empty accepts any external output
  // justified by the question's fresh name.
  std::set<PortName> answer_ports;
};

RunResult run_local(const Net& s, const Message& question, const RunOptions& opt = {});

// "3", "done", or "none".
std::string answer_text(const RunResult& r);
int exit_code(const RunResult& r);

// Wire format: u32 length (37), u16 kind, u64 port, 3 × (u8 tag, 8 bytes payload), big-endian.
inline constexpr std::size_t kFrameLength = 37;
inline constexpr std::size_t kFrameSize = 4 + kFrameLength;

enum class FrameKind : std::uint16_t {
  Deliver = 0,
  Hello = 1,         // payload[0]: sender node index
  AuditRequest = 2,
  AuditReply = 3,    // residual cells, frames sent, frames received
  Shutdown = 4,
  Stop = 5,          // worker gave up: payload[0] is 2 (budget) or 3 (fault)
};

struct Frame {
  FrameKind kind = FrameKind::Deliver;
  Message msg;
};

struct ProtocolError : Error {
  using Error::Error;
};

using FrameBytes = std::array<std::uint8_t, kFrameSize>;
FrameBytes encode_frame(const Frame& f);
Frame decode_frame(const std::uint8_t* bytes, std::size_t n);

struct NodeAddress {
  std::string host;
  std::uint16_t port = 0;
};

struct NodeConfig {
  std::map<std::string, NodeAddress> nodes;
  std::string root;
  std::size_t frame_limit = kFrameSize;
};

NodeConfig parse_node_config(const std::string& json_text);
NodeConfig load_node_config(const std::string& path);
// Placement names not present in cfg ("" is the root).
std::vector<std::string> unresolved_placements(const Net& s, const NodeConfig& cfg);

struct DistributedOptions {
  RunOptions run;
  // Start the non-root nodes as threads of this process. When false they
  // must be running elsewhere (gamnet serve).
  bool spawn_workers = true;
  int connect_timeout_ms = 10'000;
};

// Hosts the engines placed on one node and exchanges frames with its peers.
class NodeRuntime {
 public:
  NodeRuntime(const Net& s, const NodeConfig& cfg, const std::string& self, const RunOptions& opt = {});
  ~NodeRuntime();
  NodeRuntime(const NodeRuntime&) = delete;
  NodeRuntime& operator=(const NodeRuntime&) = delete;

  // Binds the listening socket; throws ConfigError on failure.
  void listen();
  // Worker loop: runs until the root sends Shutdown or a link fails.
  void serve();
  // Root only: injects the question, runs to an answer, audits every node and shuts them down.
  RunResult run(const Message& question);

  int connect_timeout_ms = 10'000;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

RunResult run_distributed(const Net& s, const NodeConfig& cfg, const Message& question,
                          const DistributedOptions& opt = {});

// Diagnostics level from GAMNET_LOG: 0 off, 1 error, 2 info, 3 debug.
int log_level();
void log(int level, const std::string& msg);

}  // namespace gamnet
