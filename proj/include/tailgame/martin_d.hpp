#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <string>

#include "tailgame/game_core.hpp"
#include "tailgame/objectives.hpp"
#include "tailgame/oneshot.hpp"

namespace tailgame {

// ---------------------------------------------------------------------------
// Fictitious-continuation ledgers: per-history values d(h) with re-initiation
// pointers alpha(h). Ledgers are lazy; the cursor walks one play incrementally
// and is the cheap path. Histories beyond the depth cap are rejected.
// ---------------------------------------------------------------------------

class DCursor {
public:
  virtual ~DCursor() = default;

  /// d at the current history.
  double value() const { return d_; }
  int stage() const { return stage_; }
  /// Length of alpha(h), the re-initiation root (0 = empty history).
  int alpha_stage() const { return alpha_; }
  /// True iff the ledger re-initiated at the current (nonempty) history.
  bool reinitiated_here() const { return reinit_here_; }

  void step(const JointAction& a) {
    if (stage_ >= depth_cap_)
      throw ValidationError("ledger depth cap exceeded at stage " +
                            std::to_string(stage_));
    do_step(a);
    ++stage_;
  }

  /// The one-shot payoff function d^h over the ledger's window.
  virtual OneShotFn one_shot() const = 0;

protected:
  virtual void do_step(const JointAction& a) = 0;

  double d_ = 0.0;
  int stage_ = 0;
  int alpha_ = 0;
  bool reinit_here_ = false;
  int depth_cap_ = 10000;
};

class DLedger {
public:
  using CursorFactory = std::function<std::unique_ptr<DCursor>()>;

  DLedger(std::string name, CursorFactory make_root)
      : name_(std::move(name)), make_root_(std::move(make_root)) {}

  const std::string& name() const { return name_; }
  std::unique_ptr<DCursor> cursor() const { return make_root_(); }

  /// d(h), walking from the root. O(len(h)); use cursors along plays.
  double d_of(const History& h) const;
  /// alpha(h) as a prefix of h (empty for ledgers without re-initiation).
  History alpha_of(const History& h) const;

private:
  std::string name_;
  CursorFactory make_root_;
};

/// Steps of the matching-pennies recursion: move half the distance to the
/// nearer boundary, up on diagonal stages and down otherwise.
inline double half_step_up(double x) { return x + 0.5 * std::min(x, 1.0 - x); }
inline double half_step_down(double x) { return x - 0.5 * std::min(x, 1.0 - x); }

/// Minority-game ledger: d(empty) = w; absorbing at 0; otherwise d(h,a) =
/// the stage reward of player i under the analytic default tail.
DLedger d_voorneveld(double w, PlayerId i, PopulationStatistic stat);

/// Non-absorbing minority ledger: d(empty) = 1 and d(h,a) = stage reward at
/// every history, so d^h = r_i and val(d^h) = 1 in every subgame. This is the
/// variant the one-shot games G(h) consume; the absorbing ledger above decays
/// and cannot anchor subgame values.
DLedger d_voorneveld_reward(PlayerId i, PopulationStatistic stat);

/// Matching-pennies ledger: diagonal stages step d up, off-diagonal stages
/// step it down. Requires w in (0,1).
DLedger d_matching_pennies(double w, PlayerId row = 0, PlayerId col = 1);

/// Produces, for a subgame root with value `val`, the fictitious-continuation
/// function rooted there: value max(val - delta/2, 0) at the root, constant 0
/// when val < delta/2.
struct DGenerator {
  double delta = 0.0;
  std::function<std::unique_ptr<DCursor>(double val_at_root)> make;
};

/// Matching-pennies generator family for the re-initiation ledger.
DGenerator matching_pennies_generator(double delta, PlayerId row = 0, PlayerId col = 1);

/// Re-initiating ledger: follows the generator's function until d drops below
/// val - delta, then re-initiates (alpha(h) = h), taking effect from the next
/// stage. `val_oracle(stage)` supplies the subgame value Val_i^F; it is
/// constant across histories for tail objectives.
DLedger d_with_reinit(DGenerator gen, double delta,
                      std::function<double(int)> val_oracle);

// ---------------------------------------------------------------------------
// Ledger quality checks: value defense, level bounds, submartingale and
// re-initiation statistics, sampled payoff floor
// ---------------------------------------------------------------------------

struct MCheckConfig {
  PlayerId player = 0;
  int n_samples = 1000;
  int horizon = 100;
  std::uint64_t seed = 1;
  double tol = 1e-9;
  /// subgame-value floor every one-shot game must clear; negative disables.
  double value_floor = -1.0;
  /// delta of the re-initiation ledger; enables the jump-gap check when > 0.
  double delta = 0.0;
  /// cycle window of the lasso truncation for the payoff check; 0 picks horizon/2.
  int cycle_window = 0;
  /// objective for the payoff check; null disables it.
  std::shared_ptr<const PayoffAutomaton> objective;
};

struct MReport {
  // precondition: the profile defends the ledger, val(d^h) <= E_{sigma(h)}[d^h]
  bool defense_ok = true;
  int defense_stage = -1;
  std::string defense_note;

  bool level_ok = true;
  double level_worst = 0.0;  // max over samples of d(h) - val(d^h)

  bool floor_ok = true;
  double floor_worst = 0.0;  // max of value_floor - val(d^h)

  MeanSe increments;  // submartingale statistic
  MeanSe reinits;     // re-initiations per sampled play

  bool reinit_gap_ok = true;
  double reinit_gap_worst = 0.0;  // max of d(h) + delta/2 - val(d^h) at re-inits

  bool payoff_checked = false;
  bool payoff_ok = true;
  double payoff_threshold = 0.0;  // val(d^{empty})
  MeanSe payoff_stats;
};

/// Samples plays of sigma and walks the ledger alongside. At every sampled
/// history the one-shot bracket checks, exactly, that d(h) never exceeds
/// val(d^h) and that val(d^h) clears the declared floor; the profile must
/// defend the value (val(d^h) <= E_{sigma(h)}[d^h], verified, aborting with a
/// witness otherwise). Also reports the submartingale statistic,
/// re-initiation counts and jump gaps, and the sampled payoff floor at the
/// root via lasso-truncated evaluation.
MReport check_M_conditions(const DLedger& ledger, const FiniteSupportProfile& sigma,
                           const MCheckConfig& cfg);

// ---------------------------------------------------------------------------
// Auxiliary-game runs: alternating one-shot payoff functions and joint actions
// ---------------------------------------------------------------------------

struct MRun {
  std::vector<OneShotFn> functions;  // r_0 .. r_{T-1}
  std::vector<JointAction> moves;    // a^0 .. a^{T-1}
};

/// r_t = d^{h^t} along the given play; moves are the play's joint actions.
MRun extract_m_run(const DLedger& ledger, const History& play);

struct MRunVerdict {
  bool legal = true;
  int first_bad_index = -1;
  std::string reason;
  std::vector<double> r_at_moves;  // r_t(a^t), for limsup inspection
};

/// Legality per the auxiliary game: val^F(r_0) >= w, r_t(a^t) > 0, and
/// val^F(r_{t+1}) >= r_t(a^t); values certified with the bracket upper bound.
MRunVerdict validate_m_run(const MRun& run, double w, PlayerId i, double tol = 1e-9);

}  // namespace tailgame
