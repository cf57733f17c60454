#pragma once

#include <array>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gamnet/net.hpp"

namespace gamnet {

struct GameInterface {
  Interface base;
  std::set<PortName> questions;
  std::set<PortName> initials;
  std::set<std::pair<PortName, PortName>> enabling;
  // Structural port order; arenas built from the same type line up by position.
  std::vector<PortName> order;

  bool is_question(PortName a) const { return questions.count(a) != 0; }
  bool is_answer(PortName a) const { return base.contains(a) && !is_question(a); }
  bool is_initial(PortName a) const { return initials.count(a) != 0; }
  bool enables(PortName a, PortName b) const { return enabling.count({a, b}) != 0; }
};

// One question (O, initial) and one answer (P) enabled by it.
GameInterface base_arena(PortName q, PortName a);
GameInterface base_arena(NameMinter& minter = port_minter());
GameInterface empty_arena();
GameInterface game_tensor(const GameInterface& a, const GameInterface& b);
GameInterface game_arrow(const GameInterface& a, const GameInterface& b);
GameInterface rename(const Permutation& pi, const GameInterface& a);
std::pair<GameInterface, Permutation> fresh_copy(const GameInterface& a, NameMinter& minter = port_minter());
ValidationReport validate_arena(const GameInterface& a);
// Position-wise match of two arenas; checks that the induced renaming maps one onto the other.
std::optional<Permutation> structural_match(const GameInterface& a, const GameInterface& b);
bool same_arena(const GameInterface& a, const GameInterface& b);

enum class Condition : int {
  UniquePointers,
  CorrectlyLabelled,
  Justified,
  WellOpened,
  StrictlyScoped,
  StrictlyNested,
  Alternating,
};
inline constexpr int kConditionCount = 7;
const char* condition_name(Condition c);
std::optional<Condition> condition_from_name(const std::string& s);
std::vector<Condition> all_conditions();
// The conditions defining P_A (legal traces).
std::vector<Condition> legal_conditions();

struct LegalityReport {
  std::array<std::optional<std::size_t>, kConditionCount> first_failure{};
  bool passes(Condition c) const { return !first_failure[static_cast<int>(c)]; }
  bool passes(const std::vector<Condition>& cs) const;
  bool all() const { return passes(all_conditions()); }
};

LegalityReport check_legal(const Trace& s, const GameInterface& a);
bool is_legal(const Trace& s, const GameInterface& a);  // member of P_A

std::optional<PointerName> justifier(const TraceEvent& e);
std::optional<PointerName> fresh_name(const TraceEvent& e);
std::set<PointerName> cp(const Trace& s);
std::set<PointerName> fp(const Trace& s);
std::set<std::pair<PortName, PointerName>> enabled(const Trace& s, const GameInterface& a);
std::set<std::pair<PortName, PointerName>> pending_questions(const Trace& s, const GameInterface& a);

Trace delete_ports(const Trace& s, const std::set<PortName>& ports);
Trace reindex_delete(const Trace& s, const std::set<PortName>& ports);
Trace hereditary_restrict(const Trace& s, std::set<PointerName> names);
Trace flip_polarity(const Trace& s);
Trace rename_trace(const Trace& s, const Permutation& pi);

// Pointer names renamed in order of first appearance.
Trace canonical(const Trace& s);
TraceSet canonical(const TraceSet& s);
TraceSet rename_ports(const TraceSet& s, const Permutation& pi);
TraceSet prefix_closure(const TraceSet& s);
TraceSet truncate(const TraceSet& s, std::size_t k);
TraceSet filter(const TraceSet& s, const GameInterface& a, const std::vector<Condition>& cs);

// Equality up to a joint renaming of ports and pointers.
std::optional<Permutation> equal_ap(const Trace& a, const Trace& b);

TraceSet interleave(const TraceSet& s1, const TraceSet& s2, std::size_t k);

struct ComposeOptions {
  std::size_t max_visible = 6;
  std::size_t max_hidden = 8;
  // Let a name that is new to one side be identified with a name the other
  // side has already seen. Off by default: our opponents only inject fresh names.
  bool allow_aliasing = false;
};

// b: the middle ports as they appear in s1's traces; b2: their partners in s2's.
TraceSet trace_compose(const TraceSet& s1, const std::set<PortName>& b, const TraceSet& s2,
                       const std::set<PortName>& b2, const Permutation& pi, const ComposeOptions& opt = {});
TraceSet game_compose(const TraceSet& s1, const std::set<PortName>& b, const TraceSet& s2,
                      const std::set<PortName>& b2, const Permutation& pi, const ComposeOptions& opt = {});

TraceSet saturate(const TraceSet& s, const GameInterface& a);
bool is_pclosed(const TraceSet& s1, const TraceSet& s2);

struct PlayOptions {
  std::vector<Data> values{num(0), num(1)};
  std::set<PortName> unit_answers;  // answer ports carrying no value
  bool single_threaded = true;
  bool alternating = true;
};

// Moves of polarity `who` that extend s without introducing a new failure of
// the legality conditions selected by opt. Fresh names come from fresh(0), fresh(1).
std::vector<Message> next_moves(const Trace& s, const GameInterface& a, Polarity who, const PlayOptions& opt,
                                const std::function<PointerName(int)>& fresh);

// Single-threaded alternating copycat plays over A ⇒ pi·A up to length k.
TraceSet cc_traces(const GameInterface& a, const Permutation& pi, std::size_t k, const PlayOptions& opt = {});
// The defining property of copycat plays, checked directly.
bool is_copycat_play(const Trace& s, const GameInterface& a, const Permutation& pi);

}  // namespace gamnet
