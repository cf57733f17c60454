#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gamnet/game.hpp"
#include "gamnet/net.hpp"

namespace gamnet {

// Candidate external inputs after the observable trace s.
using InputGenerator = std::function<std::vector<Message>(const Trace& s)>;

// Opponent fresh names for position n of a trace.
PointerName opponent_name(std::size_t n, int i);

// Plays only moves that keep the trace legal over the arena.
InputGenerator game_opponent(const GameInterface& a, const PlayOptions& opt = {});

// Arena-free opponent: every external O-port, justifier fresh or (with
// reuse_names) any name already seen, own pointer fresh, data from `values`.
InputGenerator raw_opponent(const Interface& ext, std::vector<Data> values = {Data{}}, bool reuse_names = false);

// An opponent that never plays.
InputGenerator silent_opponent();

struct ExploreOptions {
  std::size_t max_states = 2'000'000;
};

struct Denotation {
  TraceSet traces;      // canonical, prefix-closed
  bool partial = false; // a budget stopped the search early
  std::size_t states = 0;
};

Denotation denotation_upto(const Net& s, std::size_t k, const InputGenerator& opponent,
                           const ExploreOptions& opt = {});

struct ImplementsReport {
  bool included = true;  // S ⊆ ⟦f⟧
  bool pclosed = true;   // ⟦f⟧ P-closed w.r.t. S
  bool partial = false;
  std::optional<Trace> missing;  // a trace of S the net cannot produce
  std::optional<Trace> rogue;    // a P-extension outside S
  std::size_t net_traces = 0;
  bool ok() const { return included && pclosed && !partial; }
};

ImplementsReport implements_check(const Net& s, const GameInterface& a, const TraceSet& spec, std::size_t k,
                                  const PlayOptions& opt = {}, const ExploreOptions& xo = {});

}  // namespace gamnet
