#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gamnet/hram.hpp"

namespace gamnet {

struct Net {
  std::vector<Engine> engines;
  std::map<PortName, PortName> chi;
  Interface external;
};

struct NetConfig {
  std::vector<EngineConfig> engines;
  std::vector<Message> pending;
  std::uint64_t next_fresh = 0;  // pointer counter used by the reference semantics
};

struct TraceEvent {
  Polarity pol;
  Message msg;
  auto operator<=>(const TraceEvent&) const = default;
};

using Trace = std::vector<TraceEvent>;
using TraceSet = std::set<Trace>;

std::string to_string(const Trace& t);

ValidationReport validate_net(const Net& s);
Net singleton(const Engine& e);
NetConfig initial_net(const Net& s);

// Precomputed routing tables for a net.
class NetIndex {
 public:
  explicit NetIndex(const Net& s);
  const Net& net() const { return *net_; }
  const Chi& chi() const { return chi_; }
  // Engine owning O-port `a`, or -1.
  int receiver(PortName a) const;
  bool external_p(PortName a) const { return net_->external.is_p(a); }
  bool external_o(PortName a) const { return net_->external.is_o(a); }
  PortName route(PortName a) const;

 private:
  const Net* net_;
  Chi chi_;
  std::unordered_map<PortName, int> receiver_;
};

std::vector<std::pair<Label, NetConfig>> net_step(const NetConfig& n, const Net& s);
// The Input transition for external O-port a.
NetConfig net_input(const NetConfig& n, const NetIndex& idx, const Message& m);

Net identity_net(const Interface& a, const Permutation& pi);
// id over A with a freshly named copy A'; returns the net and the renaming.
std::pair<Net, Permutation> identity_net(const Interface& a);

// f has B (as it appears in f.external) among its ports, g has dual(B') among its
// ports; pi maps sup(B) onto sup(B') preserving polarity.
Net compose_nets(const Net& f, const Interface& b, const Net& g, const Interface& b2, const Permutation& pi);
Net compose_nets(const Net& f, const Interface& b, const Net& g, const Interface& b2);

Net tensor_nets(const Net& f, const Net& g);

// The unit and counit are identities, so currying only re-reads the
// external interface; the checks make sure the decomposition is valid.
Net curry(const Net& f, const Interface& a, const Interface& b, const Interface& c);
Net uncurry(const Net& f, const Interface& a, const Interface& b, const Interface& c);

Engine sink_engine(const Interface& a);
// Net over A => I absorbing everything.
Net sink(const Interface& a);
// id over side `keep` plus a sink over `drop`; interface (keep ⊗ drop) ⇒ keep'.
std::pair<Net, Permutation> projection(const Interface& keep, const Interface& drop);

Net combine_engines(const Net& s);
// Merges engines into groups (each group becomes one engine); groups are indices.
Net combine_groups(const Net& s, const std::vector<std::vector<int>>& groups);

std::optional<Permutation> structurally_equivalent(const Net& a, const Net& b);

Net rename_net(const Net& s, const Permutation& pi);

}  // namespace gamnet
