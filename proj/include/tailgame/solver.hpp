#pragma once

#include <memory>
#include <vector>

#include "tailgame/game_core.hpp"
#include "tailgame/lp.hpp"
#include "tailgame/mdp.hpp"
#include "tailgame/objectives.hpp"

namespace tailgame {

/// Exact zero-sum stage solve (LP over mixed actions, both strategies).
inline MatrixGameSolution matrix_stage_value(const Mat& m) { return solve_matrix_game(m); }

// ---------------------------------------------------------------------------
// Zero-sum repeated-game analysis between a deviating player (maximizer) and
// the coalition of her opponents, on the deviator's objective-automaton state
// space. Only the automaton's window of opponents matters; everyone else can
// play defaults, which realizes the finite-support restriction.
// ---------------------------------------------------------------------------
struct ConcurrentGame {
  PlayerId deviator = 0;
  std::shared_ptr<const PayoffAutomaton> objective;
  int n_own_actions = 1;
  std::vector<PlayerId> window;  // objective support minus the deviator
  std::vector<int> window_sizes;

  int n_states() const { return objective->n_states; }
  int n_window_actions() const {
    int n = 1;
    for (int s : window_sizes) n *= s;
    return n;
  }
  /// Automaton window-action index of (own action, coalition window action).
  int automaton_index(Action own, int wact) const;

  void validate() const;
};

/// Concurrent game of player i against their coalition per the game spec.
ConcurrentGame make_concurrent_game(const GameSpec& spec, PlayerId i);

struct ValueTable {
  std::vector<double> value;  // per automaton state, in [0,1]
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
};

/// Approximate fixpoint of the one-shot value operator, nested per the
/// valuation: Buchi (greatest-least), CoBuchi (least-greatest), parity
/// (alternating per priority, max-even convention), limsup-mean (gain
/// iteration). Values approach the finitistic minmax of the deviator.
ValueTable concurrent_value(const ConcurrentGame& g, double tol_inner = 1e-6,
                            double tol_outer = 1e-3, int max_iter = 100000);

/// Coalition stationary strategy on the automaton states. Window players
/// carry mixed actions; every other opponent plays their default.
struct StationaryStrategy {
  std::vector<PlayerId> window;
  std::vector<int> window_sizes;
  std::vector<std::vector<MixedAction>> mixes;  // [state][window member]
  std::vector<std::vector<double>> correlated;  // [state] raw LP minimizer (diagnostic)
  bool product_exact = true;  // correlated optimum had at most one mixing player
};

struct BestResponseResult {
  double value = 0.0;             // at the initial composite state
  std::vector<double> state_values;
  std::vector<int> policy;        // positional over the composite states
  int n_states = 0;
};

struct PunishmentResult {
  StationaryStrategy strategy;
  ValueTable table;
  double guarantee = 1.0;  // audited best-response value, not the fixpoint
};

/// Extract the coalition's minimizing behavior from the fixpoint (perturbed
/// toward punishing progress to break fixpoint degeneracy), realize it as an
/// independent profile, and audit it with best_response. The guarantee is the
/// audited value.
PunishmentResult punishment_profile(const ConcurrentGame& g, double tol_inner = 1e-6,
                                    double tol_outer = 1e-3, int max_iter = 100000);

/// Deviator's optimal value against the stationary punishment.
BestResponseResult best_response(const ConcurrentGame& g, const StationaryStrategy& s,
                                 double tol = 1e-10);

/// Deviator's optimal value against the grim-trigger composite: follow the
/// lasso while everyone conforms, switch to the punishment one stage after the
/// deviator leaves the path. State space = lasso position x automaton state,
/// plus punishment modes.
BestResponseResult best_response_grim(const ConcurrentGame& g, const LassoPlay& play,
                                      const StationaryStrategy& punishment,
                                      double tol = 1e-10);

struct HistoryIndependenceReport {
  bool ok = true;
  double spread = 0.0;
  int min_state = 0, max_state = 0;
  double min_value = 0.0, max_value = 0.0;
};

/// Tail objectives have history-independent subgame values, so over all
/// automaton states reachable from the initial one the value spread must not
/// exceed tol. Violations witness a non-tail objective or a solver fault.
HistoryIndependenceReport history_independence_check(const ConcurrentGame& g,
                                                     const ValueTable& table,
                                                     double tol = 1e-3);

}  // namespace tailgame
