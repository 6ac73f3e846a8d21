#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tailgame/util.hpp"

namespace tailgame {

struct PayoffAutomaton;  // objectives module

using PlayerId = int;
using Action = int;  // index into the owning player's action set

// ---------------------------------------------------------------------------
// Joint actions, histories, lasso plays
// ---------------------------------------------------------------------------

/// One action per concrete player 0..N-1.
struct JointAction {
  std::vector<Action> a;

  JointAction() = default;
  explicit JointAction(std::vector<Action> v) : a(std::move(v)) {}
  JointAction(std::initializer_list<Action> v) : a(v) {}

  int size() const { return static_cast<int>(a.size()); }
  Action operator[](int i) const { return a[static_cast<std::size_t>(i)]; }
  Action& operator[](int i) { return a[static_cast<std::size_t>(i)]; }
  bool operator==(const JointAction& o) const { return a == o.a; }
  bool operator!=(const JointAction& o) const { return !(*this == o); }
};

using History = std::vector<JointAction>;

/// Eventually periodic play: prefix followed by cycle repeated forever.
/// The computable stand-in for an infinite play.
struct LassoPlay {
  History prefix;
  History cycle;  // nonempty

  LassoPlay() = default;
  LassoPlay(History pre, History cyc) : prefix(std::move(pre)), cycle(std::move(cyc)) {
    if (cycle.empty()) throw ValidationError("lasso cycle must be nonempty");
  }

  /// Joint action at stage t of the denoted infinite play.
  const JointAction& at(std::size_t t) const {
    if (t < prefix.size()) return prefix[t];
    return cycle[(t - prefix.size()) % cycle.size()];
  }
};

// ---------------------------------------------------------------------------
// Mixed actions and finite-support strategy profiles
// ---------------------------------------------------------------------------

/// Probability distribution over one player's actions.
struct MixedAction {
  std::vector<double> prob;

  MixedAction() = default;
  explicit MixedAction(std::vector<double> p) : prob(std::move(p)) { validate(); }

  static MixedAction pure(int n_actions, Action a) {
    std::vector<double> p(static_cast<std::size_t>(n_actions), 0.0);
    p[static_cast<std::size_t>(a)] = 1.0;
    return MixedAction(std::move(p));
  }

  static MixedAction uniform(int n_actions) {
    std::vector<double> p(static_cast<std::size_t>(n_actions),
                          1.0 / static_cast<double>(n_actions));
    return MixedAction(std::move(p));
  }

  void validate() const {
    double s = 0.0;
    bool has_support = false;
    for (double p : prob) {
      if (p < 0.0) throw ValidationError("mixed action has negative probability");
      if (p > 0.0) has_support = true;
      s += p;
    }
    if (!has_support) throw ValidationError("mixed action has empty support");
    if (std::fabs(s - 1.0) > 1e-12)
      throw ValidationError("mixed action probabilities sum to " + to_dec12(s));
  }

  double operator[](Action a) const { return prob[static_cast<std::size_t>(a)]; }
  int n_actions() const { return static_cast<int>(prob.size()); }

  bool is_pure() const {
    for (double p : prob)
      if (p != 0.0 && p != 1.0) return false;
    return true;
  }

  Action sample(Rng& rng) const {
    double u = rng.next_double();
    double acc = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
      acc += prob[i];
      if (u < acc) return static_cast<Action>(i);
    }
    return static_cast<Action>(prob.size() - 1);
  }
};

/// Mixed action profile at one history: every player has a pure prescription;
/// the explicitly listed randomizers override theirs with a mixed action.
/// All but finitely many players are pure by construction.
struct StagePlan {
  std::vector<Action> pure;  // size N
  std::vector<std::pair<PlayerId, MixedAction>> randomizers;

  /// Probability that the plan produces joint action `a`.
  double probability_of(const JointAction& a) const;

  /// Sample a joint action; also returns its probability.
  JointAction sample(Rng& rng, double* prob_out = nullptr) const;
};

/// Incremental view of a strategy profile along one play. Stepping is the
/// cheap path; profiles backed by per-history ledgers stay O(stage work).
class ProfileWalker {
public:
  virtual ~ProfileWalker() = default;
  /// Plan at the current history.
  virtual StagePlan plan() const = 0;
  /// Advance the history by one realized joint action.
  virtual void step(const JointAction& a) = 0;
};

/// Strategy profile with finite support: at every history all but finitely
/// many players play a pure action. Defined lazily, by rule.
class FiniteSupportProfile {
public:
  explicit FiniteSupportProfile(int n_players) : n_players_(n_players) {}
  virtual ~FiniteSupportProfile() = default;

  int n_players() const { return n_players_; }
  virtual std::unique_ptr<ProfileWalker> walk() const = 0;

  /// Plan at an arbitrary history (walks from the root).
  StagePlan plan_at(const History& h) const;

private:
  int n_players_;
};

/// Profile defined by a plain function of the history. The walker keeps the
/// history explicitly, so this is O(t) memory per walk; fine for tests and
/// small horizons.
class FunctionProfile final : public FiniteSupportProfile {
public:
  using PlanFn = std::function<StagePlan(const History&)>;
  FunctionProfile(int n_players, PlanFn fn)
      : FiniteSupportProfile(n_players), fn_(std::move(fn)) {}

  std::unique_ptr<ProfileWalker> walk() const override;

private:
  PlanFn fn_;
};

// ---------------------------------------------------------------------------
// Game spec and staircase activation
// ---------------------------------------------------------------------------

/// Truncation of the countable game: N concrete players plus an analytic
/// default tail (players beyond N permanently play `tail_default`).
struct GameSpec {
  int n_players = 0;
  std::vector<std::vector<std::string>> action_labels;  // per player
  std::vector<Action> defaults;                         // per player
  Action tail_default = 0;  // action of every player beyond the truncation
  std::vector<double> eps;  // per player, > 0
  std::vector<std::shared_ptr<const PayoffAutomaton>> objectives;  // per player

  int n_actions(PlayerId i) const {
    return static_cast<int>(action_labels[static_cast<std::size_t>(i)].size());
  }
  const std::string& label(PlayerId i, Action a) const {
    return action_labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
  }
  JointAction all_defaults() const { return JointAction(defaults); }
};

/// Player i is inactive before stage i and plays their default there.
struct StaircaseSchedule {
  int n_players = 0;

  bool is_active(PlayerId i, int stage) const { return i < n_players && i <= stage; }
  /// Players active at `stage`: 0 .. active_count-1.
  int active_count(int stage) const {
    return stage + 1 < n_players ? stage + 1 : n_players;
  }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Validating constructor for GameSpec. Rejects empty action sets, defaults
/// outside action sets, nonpositive eps.
GameSpec make_game(int n_players, std::vector<std::vector<std::string>> action_labels,
                   std::vector<Action> defaults, std::vector<double> eps,
                   std::vector<std::shared_ptr<const PayoffAutomaton>> objectives = {},
                   Action tail_default = 0);

/// Complete a partial stage-t assignment over exactly the active players to a
/// full joint action, inactive players at their defaults. Idempotent when the
/// assignment already covers everyone.
JointAction staircase_complete(const std::vector<std::pair<PlayerId, Action>>& partial,
                               int stage, const StaircaseSchedule& sched,
                               const GameSpec& spec);

/// The lasso denoting history h followed by the play of p.
LassoPlay subgame_shift(const History& h, const LassoPlay& p);

struct SampledPlay {
  History history;
  double probability = 1.0;  // product of stage probabilities
};

/// Sample a length-`horizon` history under the profile; reproducible from seed.
SampledPlay sample_play(const FiniteSupportProfile& profile, int horizon,
                        std::uint64_t seed);

/// Product over stages of the profile's probabilities of h's actions.
double history_probability(const FiniteSupportProfile& profile, const History& h);

}  // namespace tailgame
