#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tailgame/game_core.hpp"

namespace tailgame {

// ---------------------------------------------------------------------------
// Finite-state representations of tail-measurable payoffs. Every automaton
// reads only a finite window of players (its support); everyone else is
// irrelevant to the valuation. Payoffs are normalized to [0,1].
// ---------------------------------------------------------------------------

enum class ValKind {
  BuchiEdge,     // 1 iff an accepting (state, window action) occurs infinitely often
  CoBuchiEdge,   // 1 iff rejecting edges occur only finitely often
  ParityState,   // 1 iff the max state priority seen infinitely often is even
  LimsupMean,    // limsup of running average of edge weights (cycle mean on lassos)
  ZetaCapped,    // one-player special: limsup frequency of action 1, capped to 0 at 1
};

struct PayoffAutomaton {
  std::string name;
  std::vector<PlayerId> support;   // sorted; the players this valuation reads
  std::vector<int> support_sizes;  // action-set size per support player
  int n_states = 1;
  int initial = 0;
  ValKind kind = ValKind::BuchiEdge;

  // Dense tables indexed by state * n_window_actions + w.
  std::vector<int> trans;
  std::vector<std::uint8_t> edge_flag;   // Buchi accept / CoBuchi reject
  std::vector<double> edge_weight;       // LimsupMean
  std::vector<int> state_priority;       // ParityState

  int n_window_actions() const {
    int n = 1;
    for (int s : support_sizes) n *= s;
    return n;
  }

  /// Mixed-radix index of the support players' actions inside a joint action.
  int window_index(const JointAction& a) const {
    int idx = 0;
    for (std::size_t k = 0; k < support.size(); ++k)
      idx = idx * support_sizes[k] + a[support[k]];
    return idx;
  }

  /// Window index from an explicit per-support-player action vector.
  int window_index_of(const std::vector<Action>& wa) const {
    int idx = 0;
    for (std::size_t k = 0; k < support.size(); ++k)
      idx = idx * support_sizes[k] + wa[k];
    return idx;
  }

  std::vector<Action> decode_window(int w) const {
    std::vector<Action> wa(support.size());
    for (std::size_t k = support.size(); k-- > 0;) {
      wa[k] = w % support_sizes[k];
      w /= support_sizes[k];
    }
    return wa;
  }

  int step(int state, int w) const {
    return trans[static_cast<std::size_t>(state) *
                     static_cast<std::size_t>(n_window_actions()) +
                 static_cast<std::size_t>(w)];
  }
  bool flag(int state, int w) const {
    return edge_flag[static_cast<std::size_t>(state) *
                         static_cast<std::size_t>(n_window_actions()) +
                     static_cast<std::size_t>(w)] != 0;
  }
  double weight(int state, int w) const {
    return edge_weight[static_cast<std::size_t>(state) *
                           static_cast<std::size_t>(n_window_actions()) +
                       static_cast<std::size_t>(w)];
  }

  void validate() const;
};

// ---------------------------------------------------------------------------
// Population statistic for minority-style rewards: the limsup average of an
// action over the countable population. Finitely many concrete players never
// move it; it equals the density of the infinite default tail.
// ---------------------------------------------------------------------------
struct PopulationStatistic {
  Action tail_default = 0;
  /// limsup_{n} (1/n) sum_{j<n} a_j over the countable population, where all
  /// players beyond the truncation play `tail_default` in {0,1}.
  double limsup_average() const { return tail_default == 1 ? 1.0 : 0.0; }
};

/// Stage reward of the minority game: player i gets 1 iff their action sides
/// with the minority of the countable population.
/// r_i = 1 iff (a_i = 0 and stat > 1/2) or (a_i = 1 and stat <= 1/2).
std::vector<int> voorneveld_stage_reward(const JointAction& a, PopulationStatistic stat);
int voorneveld_stage_reward(Action own, PopulationStatistic stat);

// ---------------------------------------------------------------------------
// Exact evaluation on lassos
// ---------------------------------------------------------------------------

/// Exact payoff of the eventually periodic play denoted by `p`.
double evaluate_lasso(const PayoffAutomaton& aut, const LassoPlay& p);

/// Same, but the run starts at `state` instead of the initial state.
double evaluate_lasso_from(const PayoffAutomaton& aut, int state, const LassoPlay& p);

/// One-player zeta example: limsup frequency of action 1, with payoff 0 when
/// that frequency is 1. The player can approach payoff 1 but never attain it.
double zeta_capped(const LassoPlay& p);

// ---------------------------------------------------------------------------
// Tail / shift-invariance certificates (bounded, exhaustive up to lasso size L)
// ---------------------------------------------------------------------------

struct TailReport {
  bool tail = true;
  bool shift_invariant = true;
  // Witnesses when a property fails.
  std::optional<std::pair<LassoPlay, LassoPlay>> tail_counterexample;
  std::optional<std::pair<LassoPlay, LassoPlay>> shift_counterexample;
};

/// Checks prefix-independence (tail) and shift-invariance of the valuation by
/// exhaustive enumeration of lassos with prefix and cycle length <= L over the
/// window alphabet. A bounded certificate, not a proof for all plays.
TailReport tail_check(const PayoffAutomaton& aut, int bound);

// ---------------------------------------------------------------------------
// Built-in objectives
// ---------------------------------------------------------------------------

/// 1-state Buchi-edge automaton over two players' joint actions, accepting on
/// the diagonal (T,L)/(B,R): "payoff 1 infinitely often" of repeated matching
/// pennies. `row` and `col` are the two players read.
std::shared_ptr<const PayoffAutomaton> make_matching_pennies_io(PlayerId row = 0,
                                                                PlayerId col = 1);

/// Complement valuation: diagonal only finitely often (the column player's
/// side of the zero-sum game).
std::shared_ptr<const PayoffAutomaton> make_matching_pennies_fin(PlayerId row = 0,
                                                                 PlayerId col = 1);

/// "Eventually always r_i = 1" evaluator of the repeated minority game, with
/// the population statistic fixed by the analytic default tail.
std::shared_ptr<const PayoffAutomaton> make_voorneveld_ev(PlayerId i,
                                                          PopulationStatistic stat);

/// One-player zeta-capped special (support {player}).
std::shared_ptr<const PayoffAutomaton> make_zeta_capped(PlayerId player = 0);

/// Membership function of the set of plays with finitely many 1s at even
/// stages (tail but not shift-invariant). One player, actions {0,1}.
std::shared_ptr<const PayoffAutomaton> make_even_position_cobuchi(PlayerId player = 0);

/// Generic table-driven constructors used by the spec-file loader.
struct AutomatonBuild {
  std::string name;
  std::vector<PlayerId> support;
  std::vector<int> support_sizes;
  int n_states = 1;
  int initial = 0;
  ValKind kind = ValKind::BuchiEdge;
  std::vector<int> trans;
  std::vector<std::uint8_t> edge_flag;
  std::vector<double> edge_weight;
  std::vector<int> state_priority;
};
std::shared_ptr<const PayoffAutomaton> make_automaton(AutomatonBuild b);

}  // namespace tailgame
