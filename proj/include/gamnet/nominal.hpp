#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace gamnet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an operation's precondition does not hold (overlapping names,
// shape mismatches, malformed input).
struct PreconditionError : Error {
  using Error::Error;
};

// Bad configuration or input files; the CLI maps it to exit code 4.
struct ConfigError : Error {
  using Error::Error;
};

using Atom = std::uint64_t;

inline constexpr int kCounterBits = 48;
inline constexpr Atom kCounterMask = (Atom{1} << kCounterBits) - 1;

// Reserved node tags. Ordinary runtime nodes use 1..N, compile-time port
// names use tag 0.
inline constexpr std::uint16_t kRootTag = 0xFFFF;
inline constexpr std::uint16_t kCanonTag = 0xFFFE;
inline constexpr std::uint16_t kOpponentTag = 0xFFFD;
inline constexpr std::uint16_t kExploreTag = 0xFFFC;

constexpr Atom make_atom(std::uint16_t node, std::uint64_t counter) {
  return (Atom{node} << kCounterBits) | (counter & kCounterMask);
}
constexpr std::uint16_t atom_node(Atom a) { return static_cast<std::uint16_t>(a >> kCounterBits); }
constexpr std::uint64_t atom_counter(Atom a) { return a & kCounterMask; }

struct PortName {
  Atom v = 0;
  auto operator<=>(const PortName&) const = default;
};

struct PointerName {
  Atom v = 0;
  auto operator<=>(const PointerName&) const = default;
};

std::string to_string(PortName p);
std::string to_string(PointerName p);
// Accepts "0x<hex>"; canonical pointers also accept "p<n>".
PortName parse_port(const std::string& s);
PointerName parse_pointer(const std::string& s);

class NameMinter {
 public:
  explicit NameMinter(std::uint16_t node = 0, std::uint64_t next = 0) : node_(node), next_(next) {}
  NameMinter(const NameMinter&) = delete;
  NameMinter& operator=(const NameMinter&) = delete;

  Atom next_atom();
  PortName port() { return PortName{next_atom()}; }
  PointerName pointer() { return PointerName{next_atom()}; }
  std::uint16_t node() const { return node_; }

 private:
  std::uint16_t node_;
  std::atomic<std::uint64_t> next_;
};

PortName fresh_port_name(NameMinter& minter);

// Process-wide minter for port names created while building nets.
NameMinter& port_minter();

enum class Polarity : std::uint8_t { O, P };

constexpr Polarity dual(Polarity l) { return l == Polarity::O ? Polarity::P : Polarity::O; }
inline char polarity_char(Polarity l) { return l == Polarity::O ? 'O' : 'P'; }

class Interface {
 public:
  Interface() = default;
  Interface(std::initializer_list<std::pair<Polarity, PortName>> ports);

  void add(Polarity l, PortName a);
  bool contains(PortName a) const { return ports_.count(a) != 0; }
  Polarity polarity(PortName a) const;
  bool is_o(PortName a) const { return contains(a) && polarity(a) == Polarity::O; }
  bool is_p(PortName a) const { return contains(a) && polarity(a) == Polarity::P; }
  std::vector<PortName> with(Polarity l) const;
  std::set<PortName> support() const;
  std::size_t size() const { return ports_.size(); }
  bool empty() const { return ports_.empty(); }
  const std::map<PortName, Polarity>& ports() const { return ports_; }

  bool operator==(const Interface&) const = default;

 private:
  std::map<PortName, Polarity> ports_;
};

Interface tensor(const Interface& a, const Interface& b);
Interface dual(const Interface& a);
Interface arrow(const Interface& a, const Interface& b);

struct Permutation {
  std::map<PortName, PortName> ports;
  std::map<PointerName, PointerName> pointers;

  PortName operator()(PortName a) const;
  PointerName operator()(PointerName p) const;
  Permutation inverse() const;
  bool injective() const;
};

Interface rename(const Permutation& pi, const Interface& a);
std::optional<Permutation> same_shape(const Interface& a, const Interface& b);

// Renamed copy of `a` with freshly minted port names; the permutation maps
// old names to new ones.
std::pair<Interface, Permutation> fresh_copy(const Interface& a, NameMinter& minter = port_minter());

}  // namespace gamnet

template <>
struct std::hash<gamnet::PortName> {
  std::size_t operator()(const gamnet::PortName& p) const noexcept { return std::hash<std::uint64_t>{}(p.v); }
};
template <>
struct std::hash<gamnet::PointerName> {
  std::size_t operator()(const gamnet::PointerName& p) const noexcept { return std::hash<std::uint64_t>{}(p.v * 0x9E3779B97F4A7C15ULL); }
};
