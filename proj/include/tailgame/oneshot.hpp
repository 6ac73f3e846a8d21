#pragma once

#include <vector>

#include "tailgame/game_core.hpp"
#include "tailgame/lp.hpp"

namespace tailgame {

// ---------------------------------------------------------------------------
// Finite normal-form games among a finite set of active players.
// Tensors are flat, mixed-radix, first listed player major. Values in [0,1].
// ---------------------------------------------------------------------------
struct NormalFormGame {
  std::vector<PlayerId> players;             // global ids, for bookkeeping only
  std::vector<int> n_actions;               // per active player
  std::vector<std::vector<double>> payoffs;  // per active player, flat tensors

  int n_players() const { return static_cast<int>(n_actions.size()); }
  int n_joint() const {
    int n = 1;
    for (int k : n_actions) n *= k;
    return n;
  }
  int joint_index(const std::vector<Action>& a) const {
    int idx = 0;
    for (std::size_t k = 0; k < n_actions.size(); ++k)
      idx = idx * n_actions[k] + a[k];
    return idx;
  }
  std::vector<Action> decode(int joint) const {
    std::vector<Action> a(n_actions.size());
    for (std::size_t k = n_actions.size(); k-- > 0;) {
      a[k] = joint % n_actions[k];
      joint /= n_actions[k];
    }
    return a;
  }
  double payoff_of(int player_pos, int joint) const {
    return payoffs[static_cast<std::size_t>(player_pos)][static_cast<std::size_t>(joint)];
  }

  void validate() const;

  /// Expected payoff of `player_pos` under a full mixed profile.
  double expected_payoff(int player_pos, const std::vector<MixedAction>& profile) const;

  /// Expected payoff when `player_pos` plays pure action a and everyone else
  /// follows `profile`.
  double expected_payoff_vs(int player_pos, Action a,
                            const std::vector<MixedAction>& profile) const;
};

/// One-shot payoff function over a finite window of players (the function may
/// ignore everyone else). Used for d^h matrices and auxiliary-run moves.
struct OneShotFn {
  std::vector<PlayerId> window;  // sorted global ids
  std::vector<int> sizes;        // action counts per window player
  std::vector<double> values;    // flat mixed-radix over window actions

  int n_points() const {
    int n = 1;
    for (int s : sizes) n *= s;
    return n;
  }
  /// Index of a full joint action restricted to the window.
  int window_index_of_joint(const JointAction& a) const {
    int idx = 0;
    for (std::size_t k = 0; k < window.size(); ++k) idx = idx * sizes[k] + a[window[k]];
    return idx;
  }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Minmax
// ---------------------------------------------------------------------------

struct MinmaxResult {
  double value = 0.0;
  MixedAction own;                          // player i's maximin mixed action
  std::vector<double> coalition_correlated;  // distribution over coalition joint actions
};

/// Classical minmax of `player_pos`. A single coalition member gives the exact
/// two-player zero-sum value; with two or more, the coalition is relaxed to a
/// single correlated minimizer (a lower bound of the product minmax).
MinmaxResult minmax_classical(const NormalFormGame& g, int player_pos);

/// Encloses the finitistic (independent-coalition) minmax value when exact
/// computation is infeasible: lower from the correlated relaxation, upper from
/// the best product profile found.
struct ValueBracket {
  double lower = 0.0;
  double upper = 1.0;
  std::vector<double> witness_lower;        // correlated coalition distribution
  std::vector<MixedAction> witness_upper;   // independent coalition profile

  double width() const { return upper - lower; }
  double midpoint() const { return 0.5 * (lower + upper); }
  void validate() const {
    if (lower > upper + 1e-9)
      throw std::logic_error("value bracket inverted: " + to_dec12(lower) + " > " +
                             to_dec12(upper));
  }
};

/// Bracket of val_i^F: lower = correlated-coalition zero-sum value; upper =
/// best independent coalition profile found by exhaustive pure search plus
/// alternating minimization from `restarts` random starts.
ValueBracket minmax_finitistic_bracket(const NormalFormGame& g, int player_pos,
                                       int restarts = 32, double tol = 1e-9,
                                       std::uint64_t seed = 0);

/// Bracket of val_i^F for a one-shot payoff function given on a finite window.
/// Opponents outside the window cannot affect the value.
ValueBracket oneshot_value_bracket(const OneShotFn& f, PlayerId i, int restarts = 32,
                                   double tol = 1e-9, std::uint64_t seed = 0);

/// Expected value of the one-shot function under a stage plan's mixed profile.
double expected_value(const OneShotFn& f, const StagePlan& plan);

struct MinmaxEqualityReport {
  double classical = 0.0;
  ValueBracket bracket;
  double discrepancy = 0.0;  // |classical - bracket midpoint|
  bool ok = false;           // discrepancy <= half-width + tol
};

/// On a finite game the classical and finitistic values coincide; assert the
/// classical value sits inside the finitistic bracket up to tol.
MinmaxEqualityReport minmax_equality_check(const NormalFormGame& g, int player_pos,
                                           double tol = 1e-9, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Nash
// ---------------------------------------------------------------------------

struct NashResult {
  std::vector<MixedAction> profile;  // per active player
  std::vector<double> regret;        // per player, re-verified by best response
  double max_regret = 0.0;
  bool within_tol = false;
};

/// Two active players: exact support enumeration (lexicographic smallest
/// support first). Three or more: deterministic regret matching certified by
/// an explicit best-response check, falling back to exhaustive pure profiles.
/// Always returns a profile with a verified regret bound; `within_tol` tells
/// whether the requested tolerance was met.
NashResult nash_equilibrium(const NormalFormGame& g, double tol = 1e-3,
                            int max_iter = 20000);

// ---------------------------------------------------------------------------
// Reverse-martingale finitistic approximation experiment
// ---------------------------------------------------------------------------

/// Built-in test payoff with computable tails:
///   r(a) = 1/2 [a_0 = 1] + 1/2 sum_{j >= 1} w_j [a_j = 1],  w_j = 2^{-j}
/// (weights truncated to coordinates 1..cutoff when cutoff >= 0).
struct GeometricPayoff {
  int cutoff = -1;

  double weight(int j) const {
    if (j < 1) return 0.0;
    if (cutoff >= 0 && j > cutoff) return 0.0;
    return std::pow(2.0, -j);
  }
  double tail_weight_sum(int n) const {
    if (cutoff < 0) return std::pow(2.0, -n);
    double s = 0.0;
    for (int j = n + 1; j <= cutoff; ++j) s += weight(j);
    return s;
  }
};

struct FinApproxRow {
  int n = 0;
  double max_err = 0.0;   // max over samples of |xi_n - E[r]|
  double mean_err = 0.0;
  double bound = 0.0;     // analytic bound 2^{-n+1}
  double hit_rate = 0.0;  // fraction of samples that are n-finitistic approximations
};

struct FinApproxReport {
  std::vector<FinApproxRow> rows;  // n = 0..n_max
  int derived_n = 0;               // smallest n whose analytic bound is <= eps
  double hit_rate_at_derived = 0.0;
};

/// Samples pure opponent tails under the i.i.d. product with P(a_j = 1) =
/// opp_prob, computes xi_n for each n, and reports errors and the hit rate of
/// n-finitistic approximations for (r, eps, x_{-0}).
FinApproxReport finitistic_approximation(const GeometricPayoff& r, double opp_prob,
                                         double eps, int n_max, int n_samples,
                                         std::uint64_t seed);

}  // namespace tailgame
