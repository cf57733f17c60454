#include "gamnet/nominal.hpp"

#include <algorithm>
#include <cstdio>

namespace gamnet {

namespace {

std::string hex_atom(Atom a) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(a));
  return buf;
}

Atom parse_hex(const std::string& s) {
  if (s.size() < 3 || s[0] != '0' || (s[1] != 'x' && s[1] != 'X'))
    throw PreconditionError("expected hex atom, got '" + s + "'");
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s.substr(2), &used, 16);
  } catch (const std::exception&) {
    throw PreconditionError("bad hex atom '" + s + "'");
  }
  if (used != s.size() - 2) throw PreconditionError("bad hex atom '" + s + "'");
  return v;
}

}  // namespace

std::string to_string(PortName p) { return hex_atom(p.v); }

std::string to_string(PointerName p) {
  if (atom_node(p.v) == kCanonTag) return "p" + std::to_string(atom_counter(p.v));
  return hex_atom(p.v);
}

PortName parse_port(const std::string& s) { return PortName{parse_hex(s)}; }

PointerName parse_pointer(const std::string& s) {
  if (!s.empty() && s[0] == 'p') {
    std::size_t used = 0;
    unsigned long long n = 0;
    try {
      n = std::stoull(s.substr(1), &used, 10);
    } catch (const std::exception&) {
      throw PreconditionError("bad pointer name '" + s + "'");
    }
    if (used + 1 != s.size()) throw PreconditionError("bad pointer name '" + s + "'");
    return PointerName{make_atom(kCanonTag, n)};
  }
  return PointerName{parse_hex(s)};
}

Atom NameMinter::next_atom() {
  std::uint64_t n = next_.fetch_add(1, std::memory_order_relaxed);
  if (n > kCounterMask) throw Error("name minter exhausted on node " + std::to_string(node_));
  return make_atom(node_, n);
}

PortName fresh_port_name(NameMinter& minter) { return minter.port(); }

NameMinter& port_minter() {
  static NameMinter m(0, 1);
  return m;
}

Interface::Interface(std::initializer_list<std::pair<Polarity, PortName>> ports) {
  for (auto [l, a] : ports) add(l, a);
}

void Interface::add(Polarity l, PortName a) {
  if (!ports_.emplace(a, l).second) throw PreconditionError("duplicate port " + to_string(a));
}

Polarity Interface::polarity(PortName a) const {
  auto it = ports_.find(a);
  if (it == ports_.end()) throw PreconditionError("port " + to_string(a) + " not in interface");
  return it->second;
}

std::vector<PortName> Interface::with(Polarity l) const {
  std::vector<PortName> out;
  for (auto [a, pl] : ports_)
    if (pl == l) out.push_back(a);
  return out;
}

std::set<PortName> Interface::support() const {
  std::set<PortName> out;
  for (auto& [a, l] : ports_) out.insert(a);
  return out;
}

Interface tensor(const Interface& a, const Interface& b) {
  Interface out = a;
  for (auto [n, l] : b.ports()) {
    if (a.contains(n)) throw PreconditionError("tensor: overlapping port " + to_string(n));
    out.add(l, n);
  }
  return out;
}

Interface dual(const Interface& a) {
  Interface out;
  for (auto [n, l] : a.ports()) out.add(dual(l), n);
  return out;
}

Interface arrow(const Interface& a, const Interface& b) { return tensor(dual(a), b); }

PortName Permutation::operator()(PortName a) const {
  auto it = ports.find(a);
  return it == ports.end() ? a : it->second;
}

PointerName Permutation::operator()(PointerName p) const {
  auto it = pointers.find(p);
  return it == pointers.end() ? p : it->second;
}

Permutation Permutation::inverse() const {
  Permutation inv;
  for (auto [a, b] : ports) inv.ports[b] = a;
  for (auto [a, b] : pointers) inv.pointers[b] = a;
  return inv;
}

bool Permutation::injective() const {
  std::set<PortName> pimg;
  for (auto& [a, b] : ports)
    if (!pimg.insert(b).second) return false;
  std::set<PointerName> qimg;
  for (auto& [a, b] : pointers)
    if (!qimg.insert(b).second) return false;
  return true;
}

Interface rename(const Permutation& pi, const Interface& a) {
  Interface out;
  for (auto [n, l] : a.ports()) out.add(l, pi(n));
  return out;
}

std::optional<Permutation> same_shape(const Interface& a, const Interface& b) {
  Permutation pi;
  for (Polarity l : {Polarity::O, Polarity::P}) {
    auto xs = a.with(l), ys = b.with(l);
    if (xs.size() != ys.size()) return std::nullopt;
    for (std::size_t i = 0; i < xs.size(); ++i) pi.ports[xs[i]] = ys[i];
  }
  return pi;
}

std::pair<Interface, Permutation> fresh_copy(const Interface& a, NameMinter& minter) {
  Permutation pi;
  for (auto& [n, l] : a.ports()) pi.ports[n] = minter.port();
  return {rename(pi, a), pi};
}

}  // namespace gamnet
