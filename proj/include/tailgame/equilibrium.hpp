#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tailgame/game_core.hpp"
#include "tailgame/martin_d.hpp"
#include "tailgame/oneshot.hpp"
#include "tailgame/solver.hpp"

namespace tailgame {

// ---------------------------------------------------------------------------
// H_t^F: the finite per-stage history sets where inactive players stick to
// their defaults.
// ---------------------------------------------------------------------------
struct HFSet {
  const GameSpec* spec = nullptr;

  /// h in H_{len(h)}^F: every stage-k entry of a not-yet-active player is the
  /// default.
  bool contains(const History& h) const;
  /// |H_t^F| as a double (inf on overflow). H_0^F = {empty}.
  double cardinality(int t) const;
  /// number of stage-t completions: prod over active players of |A_i|.
  double branching(int t) const;
};

// ---------------------------------------------------------------------------
// The one-shot auxiliary games G(h)
// ---------------------------------------------------------------------------
struct GOfH {
  int stage = 0;                     // t = len(h)
  std::vector<PlayerId> active;      // players 0..min(t, N-1)
  std::vector<int> n_actions;        // per active player
  std::vector<OneShotFn> d_functions;  // d_i^h per active player, ledger window

  /// r_i^h at a joint action of the active players: the ledger function with
  /// every inactive window coordinate at its default.
  double payoff(std::size_t pos, const std::vector<Action>& active_actions,
                const GameSpec& spec) const;
};

/// Assemble G(h): walks each ledger to h and captures d_i^h.
GOfH build_Gh(const std::vector<const DLedger*>& ledgers, const History& h,
              const GameSpec& spec);

struct GhSolution {
  std::vector<MixedAction> profile;  // per active player
  double max_regret = 0.0;           // verified
  bool separable = false;            // solved by independent argmax
};

/// Nash profile of G(h). Players whose payoff depends only on their own action
/// are solved by argmax; otherwise the game tensor is materialized and handed
/// to the normal-form solver. Oversized non-separable games are rejected.
GhSolution solve_Gh(const GOfH& g, const GameSpec& spec, double tol = 1e-3);

/// Worst violation of E_{x(h)}[r_i^h] >= val_i^F(d_i^h) over active players
/// (positive = violated beyond tolerance).
double nash_value_gap(const GOfH& g, const GhSolution& sol, const GameSpec& spec);

/// The paper-shaped profile: at histories in H_t^F the active players follow
/// the G(h) Nash profile, everyone else (and everyone at histories off H^F)
/// plays their default.
std::shared_ptr<FiniteSupportProfile> staircase_profile(
    const GameSpec& spec, std::vector<DLedger> ledgers, double nash_tol = 1e-3);

// ---------------------------------------------------------------------------
// target play search
// ---------------------------------------------------------------------------
struct TargetSearchResult {
  bool found = false;
  LassoPlay play;
  std::vector<double> payoffs;          // per player at the found lasso
  bool exhaustive = false;              // full-alphabet enumeration completed
  std::vector<double> best_individual;  // per player best payoff seen anywhere
  std::string failure;                  // "bounds-too-small" | "infeasible-at-bounds"
};

/// Search for a lasso p with f_i(p) >= targets[i] - eps_i/2 for every player:
/// staircase-shaped candidates first, then exhaustive (state, cycle)
/// enumeration on the synchronized product when the joint alphabet is small.
TargetSearchResult find_target_play(const GameSpec& spec,
                                    const std::vector<double>& targets,
                                    int cycle_bound = 4, int max_alphabet = 4096,
                                    int max_product_states = 4096);

// ---------------------------------------------------------------------------
// grim trigger and the audit
// ---------------------------------------------------------------------------
struct GrimTrigger {
  LassoPlay play;
  std::vector<StationaryStrategy> punishments;  // per player id
};

/// Bundle a target play with audited per-deviator punishments.
GrimTrigger assemble_grim_trigger(const GameSpec& spec, LassoPlay play,
                                  std::vector<StationaryStrategy> punishments);

/// Composite profile: follow the play; upon the first deviation (lowest index
/// on ties) switch from the next stage to that player's punishment. Window
/// punishers randomize; everyone else plays defaults.
std::shared_ptr<FiniteSupportProfile> grim_trigger_profile(const GameSpec& spec,
                                                           GrimTrigger trigger);

struct PlayerAudit {
  PlayerId id = 0;
  double payoff = 0.0;   // f_i(p)
  double target = 0.0;   // v_i
  double eps = 0.0;
  double best_response_value = 0.0;
  double margin = 0.0;   // payoff + eps - best_response
};

struct EquilibriumCertificate {
  LassoPlay play;
  std::vector<PlayerAudit> players;
  std::vector<StationaryStrategy> punishments;
  bool accepted = false;
  double audit_tol = 1e-3;
  std::uint64_t seed = 0;
  double tol_inner = 1e-6, tol_outer = 1e-3;
  long long solver_iterations = 0;
  int threads = 1;
};

/// Audit the grim trigger: per player, the optimal deviation value against the
/// composite must not beat f_i(p) + eps_i + tol. Rejection names the player
/// and margin. Per-player audits run on `threads` workers with a fixed
/// aggregation order.
EquilibriumCertificate audit_equilibrium(const GameSpec& spec, const LassoPlay& play,
                                         const std::vector<double>& targets,
                                         std::vector<StationaryStrategy> punishments,
                                         double tol = 1e-3, int threads = 1);

struct EquilibriumOptions {
  double audit_tol = 1e-3;
  int cycle_bound = 4;
  std::uint64_t seed = 0;
  int threads = 1;
  double tol_inner = 1e-6;
  double tol_outer = 1e-3;
  int max_iter = 100000;
};

struct EquilibriumResult {
  bool accepted = false;
  EquilibriumCertificate certificate;
  TargetSearchResult search;
  std::vector<double> values;      // solver value per player (target source)
  std::vector<double> guarantees;  // audited punishment levels
};

/// Full pipeline: per-player punishment solve, target-play search at the
/// solver values, grim-trigger assembly, audit.
EquilibriumResult build_equilibrium(const GameSpec& spec, const EquilibriumOptions& opt);

// ---------------------------------------------------------------------------
// statistical cross-check of the existence route
// ---------------------------------------------------------------------------
struct LevyReport {
  double fraction = 0.0;  // of sampled plays with f_i >= target - eps_i/2
  int n_samples = 0;
  bool ok = false;
};

/// Samples plays of sigma, evaluates player i's objective on the truncated
/// lasso, and reports the fraction meeting the target.
LevyReport levy_bound_check(const GameSpec& spec, const FiniteSupportProfile& sigma,
                            PlayerId i, double target, int n_samples, int horizon,
                            std::uint64_t seed, double stat_tol = 1e-3,
                            int cycle_window = 0);

}  // namespace tailgame
