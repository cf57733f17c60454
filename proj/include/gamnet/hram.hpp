#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "gamnet/nominal.hpp"

namespace gamnet {

inline constexpr int kRegs = 4;     // registers per thread
inline constexpr int kMsgSlots = 3; // payload slots per message

// Register index; kNull discards writes and reads as Empty.
using Reg = int;
inline constexpr Reg kNull = -1;

struct Empty {
  auto operator<=>(const Empty&) const = default;
};

using Data = std::variant<Empty, PointerName, std::int64_t>;

inline bool is_empty(const Data& d) { return std::holds_alternative<Empty>(d); }
inline bool is_pointer(const Data& d) { return std::holds_alternative<PointerName>(d); }
inline bool is_int(const Data& d) { return std::holds_alternative<std::int64_t>(d); }
inline Data ptr(PointerName p) { return Data{p}; }
inline Data num(std::int64_t n) { return Data{n}; }
std::string to_string(const Data& d);

namespace ins {
struct New { Reg dst, j, k; };
struct Get { Reg dst1, dst2, src; };
struct Update { Reg i, j; };
struct Free { Reg i; };
struct Flip { Reg i, j; };
struct Set { Reg dst; std::optional<std::int64_t> lit; };
// Integer arithmetic, used by the arithmetic constants.
enum class Op : std::uint8_t { Add, Sub, Mul };
struct Arith { Op op; Reg dst, lhs, rhs; };
// Sends msg(regs) to a port and keeps running; used by parallel composition.
struct Fork { PortName port; };
}  // namespace ins

using Instr = std::variant<ins::New, ins::Get, ins::Update, ins::Free, ins::Flip, ins::Set, ins::Arith, ins::Fork>;

struct CodeNode;
using Code = std::shared_ptr<const CodeNode>;

struct SeqNode { Instr instr; Code next; };
struct IfZeroNode { Reg reg; Code zero, succ; };
struct SparkNode { PortName port; };
struct EndNode {};

struct CodeNode {
  std::variant<SeqNode, IfZeroNode, SparkNode, EndNode> node;
};

Code end_code();
Code spark(PortName a);
Code ifzero(Reg r, Code zero, Code succ);
Code seq(const Instr& i, Code next);
Code seq(const std::vector<Instr>& prefix, Code tail);

bool code_equal(const Code& a, const Code& b);
std::vector<PortName> sparked_ports(const Code& c);
Code rename_code(const Code& c, const Permutation& pi);
std::string to_string(const Code& c);

struct Message {
  PortName port;
  std::array<Data, kMsgSlots> payload{};
  auto operator<=>(const Message&) const = default;
};

std::string to_string(const Message& m);

struct Engine {
  Interface iface;
  std::map<PortName, Code> port_map;
  std::string placement;  // logical node; empty means the root node
};

struct ValidationReport {
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

ValidationReport validate_engine(const Engine& e);
Engine rename_engine(const Engine& e, const Permutation& pi);

using Regs = std::array<Data, kRegs>;

struct Thread {
  Code code;
  Regs regs{};
};

enum class FaultKind { DanglingAccess, TypeFault };

struct Fault {
  FaultKind kind;
  std::string detail;
};

struct EngineConfig {
  std::vector<Thread> threads;
  std::map<PointerName, std::pair<Data, Data>> heap;
  std::vector<Fault> faults;
};

enum class LabelKind { Silent, Output, Input };

struct Label {
  LabelKind kind = LabelKind::Silent;
  Message msg{};
};

using Chi = std::unordered_map<PortName, PortName>;
using FreshPointer = std::function<PointerName()>;

Regs regs_of(const std::array<Data, kMsgSlots>& payload);
std::array<Data, kMsgSlots> msg_of(const Regs& regs);

// Result of executing one instruction of one thread in place.
struct ThreadStep {
  enum Kind { Continued, Emitted, Ended, Faulted } kind = Continued;
  std::optional<Message> out;  // set for Emitted, and for a fork that leaves the engine
};

// Executes the head instruction of thread `t` in place. Sparks to an O-port
// of `e` itself become jumps (and forks become local spawns).
ThreadStep step_thread(EngineConfig& k, std::size_t t, const Engine& e, const Chi& chi, const FreshPointer& fresh);

// True if the head instruction of the thread touches the heap (get, update, free).
bool touches_heap(const Thread& th);

std::vector<std::pair<Label, EngineConfig>> engine_step(const EngineConfig& k, const Engine& e, const Chi& chi,
                                                        const FreshPointer& fresh);
EngineConfig engine_receive(const EngineConfig& k, const Engine& e, const Message& m);
void receive_in_place(EngineConfig& k, const Engine& e, const Message& m);
EngineConfig initial_engine(const Engine& e);

// Code builders for the copycat-family macros.
namespace macro {
std::vector<Instr> cci();
std::vector<Instr> ccq();
std::vector<Instr> cca();
std::vector<Instr> exi();
std::vector<Instr> exq();
}  // namespace macro

}  // namespace gamnet
