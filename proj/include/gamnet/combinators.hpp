#pragma once

#include <string>
#include <vector>

#include "gamnet/game.hpp"
#include "gamnet/net.hpp"

namespace gamnet {

// A net together with its game interface, kept in curried form dom ⇒ cod.
struct GamNet {
  Net net;
  GameInterface dom;
  GameInterface cod;

  GameInterface arena() const { return game_arrow(dom, cod); }
};

// Adds the copycat clauses between s (seen dualised by the engine) and
// t = pi·s. Initial questions of t run `init`.
void add_copycat(Engine& e, const GameInterface& s, const GameInterface& t, const Permutation& pi,
                 const std::vector<Instr>& init);

// Copycat engine over a ⇒ pi·a.
Engine copycat_engine(const std::vector<Instr>& init, const GameInterface& a, const Permutation& pi);

// Singleton net whose external port names are to_ext applied to the engine's.
Net wrap_engine(const Engine& e, const Permutation& to_ext);
// wrap_engine with freshly minted external names; returns the renaming too.
std::pair<Net, Permutation> wrap_engine(const Engine& e);

GamNet copycat_net(const GameInterface& a, const Permutation& pi);
GamNet copycat_net(const GameInterface& a);

// Engine over (a ⇒ b) ⊗ (b2 ⇒ c) ⇒ (a2 ⇒ c2); the permutations map a2 → a,
// b → b2 and c → c2.
Engine composition_operator(const GameInterface& a, const GameInterface& b, const GameInterface& b2,
                            const GameInterface& c, const GameInterface& a2, const GameInterface& c2,
                            const Permutation& a2_to_a, const Permutation& b_to_b2, const Permutation& c_to_c2);

GamNet gam_tensor(const GamNet& f, const GamNet& g);
GamNet gam_compose(const GamNet& f, const GamNet& g);
// Composition with plain wiring and no mediating engine.
GamNet naive_compose(const GamNet& f, const GamNet& g);

enum class DiagonalVariant {
  Propagating,  // non-initial questions keep the side tag of their justifier
  Plain,        // the unmodified clause table; loses the tag below the first level
};

// Engine over a1 ⇒ a2 ⊗ a3 where a2 = pi12·a1, a3 = pi13·a1.
Engine diagonal_engine(const GameInterface& a1, const Permutation& pi12, const Permutation& pi13,
                       DiagonalVariant v = DiagonalVariant::Propagating);
GamNet diagonal_net(const GameInterface& a, DiagonalVariant v = DiagonalVariant::Propagating);

// Engine over (in ⇒ out) ⇒ res, with in = to_in·out and res = to_res·out.
// Like the diagonal, except that every call of out is justified by the
// question that opened res.
Engine fixpoint_engine(const GameInterface& out, const Permutation& to_in, const Permutation& to_res);
GamNet fixpoint_net(const GameInterface& a);

// ((a ⇒ b) ⊗ a) ⇒ b.
GamNet eval_net(const GameInterface& a, const GameInterface& b);

// (f_0 ⊗ ... ⊗ f_n) ⇒ f_i: copycat on factor i, the rest is absorbed.
GamNet game_projection(const std::vector<GameInterface>& factors, std::size_t i);

// Tags every engine without a placement.
void place(Net& s, const std::string& node);

}  // namespace gamnet
