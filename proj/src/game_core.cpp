#include "tailgame/game_core.hpp"

#include <algorithm>

namespace tailgame {

double StagePlan::probability_of(const JointAction& a) const {
  if (a.size() != static_cast<int>(pure.size()))
    throw ValidationError("joint action size does not match plan");
  double p = 1.0;
  std::vector<bool> randomized(pure.size(), false);
  for (const auto& [pid, mix] : randomizers) {
    randomized[static_cast<std::size_t>(pid)] = true;
    p *= mix[a[pid]];
    if (p == 0.0) return 0.0;
  }
  for (std::size_t i = 0; i < pure.size(); ++i) {
    if (randomized[i]) continue;
    if (a.a[i] != pure[i]) return 0.0;
  }
  return p;
}

JointAction StagePlan::sample(Rng& rng, double* prob_out) const {
  JointAction out(pure);
  double p = 1.0;
  for (const auto& [pid, mix] : randomizers) {
    Action a = mix.sample(rng);
    out[pid] = a;
    p *= mix[a];
  }
  if (prob_out) *prob_out = p;
  return out;
}

namespace {

class FunctionWalker final : public ProfileWalker {
public:
  FunctionWalker(const FunctionProfile::PlanFn* fn) : fn_(fn) {}
  StagePlan plan() const override { return (*fn_)(history_); }
  void step(const JointAction& a) override { history_.push_back(a); }

private:
  const FunctionProfile::PlanFn* fn_;
  History history_;
};

}  // namespace

std::unique_ptr<ProfileWalker> FunctionProfile::walk() const {
  return std::make_unique<FunctionWalker>(&fn_);
}

StagePlan FiniteSupportProfile::plan_at(const History& h) const {
  auto w = walk();
  for (const auto& a : h) w->step(a);
  return w->plan();
}

GameSpec make_game(int n_players, std::vector<std::vector<std::string>> action_labels,
                   std::vector<Action> defaults, std::vector<double> eps,
                   std::vector<std::shared_ptr<const PayoffAutomaton>> objectives,
                   Action tail_default) {
  if (n_players < 1) throw ValidationError("n_players must be >= 1");
  auto n = static_cast<std::size_t>(n_players);
  if (action_labels.size() != n) throw ValidationError("need one action set per player");
  if (defaults.size() != n) throw ValidationError("need one default action per player");
  if (eps.size() != n) throw ValidationError("need one eps per player");
  if (!objectives.empty() && objectives.size() != n)
    throw ValidationError("objectives must be empty or one per player");
  for (std::size_t i = 0; i < n; ++i) {
    if (action_labels[i].empty())
      throw ValidationError("player " + std::to_string(i) + " has an empty action set");
    for (std::size_t a = 0; a < action_labels[i].size(); ++a)
      for (std::size_t b = a + 1; b < action_labels[i].size(); ++b)
        if (action_labels[i][a] == action_labels[i][b])
          throw ValidationError("player " + std::to_string(i) +
                                " has duplicate action label '" + action_labels[i][a] +
                                "'");
    if (defaults[i] < 0 || defaults[i] >= static_cast<Action>(action_labels[i].size()))
      throw ValidationError("default action of player " + std::to_string(i) +
                            " is outside the action set");
    if (!(eps[i] > 0.0))
      throw ValidationError("eps of player " + std::to_string(i) + " must be > 0");
  }
  GameSpec g;
  g.n_players = n_players;
  g.action_labels = std::move(action_labels);
  g.defaults = std::move(defaults);
  g.eps = std::move(eps);
  g.objectives = std::move(objectives);
  g.tail_default = tail_default;
  return g;
}

JointAction staircase_complete(const std::vector<std::pair<PlayerId, Action>>& partial,
                               int stage, const StaircaseSchedule& sched,
                               const GameSpec& spec) {
  JointAction out = spec.all_defaults();
  int active = sched.active_count(stage);
  std::vector<bool> covered(static_cast<std::size_t>(spec.n_players), false);
  for (const auto& [pid, act] : partial) {
    if (pid < 0 || pid >= spec.n_players)
      throw ValidationError("assignment names unknown player " + std::to_string(pid));
    if (pid >= active)
      throw ValidationError("assignment covers inactive player " + std::to_string(pid) +
                            " at stage " + std::to_string(stage));
    if (act < 0 || act >= spec.n_actions(pid))
      throw ValidationError("action out of range for player " + std::to_string(pid));
    covered[static_cast<std::size_t>(pid)] = true;
    out[pid] = act;
  }
  for (int i = 0; i < active; ++i)
    if (!covered[static_cast<std::size_t>(i)])
      throw ValidationError("assignment misses active player " + std::to_string(i));
  return out;
}

LassoPlay subgame_shift(const History& h, const LassoPlay& p) {
  History prefix = h;
  prefix.insert(prefix.end(), p.prefix.begin(), p.prefix.end());
  return LassoPlay(std::move(prefix), p.cycle);
}

SampledPlay sample_play(const FiniteSupportProfile& profile, int horizon,
                        std::uint64_t seed) {
  if (horizon < 0) throw ValidationError("horizon must be >= 0");
  Rng rng(seed);
  SampledPlay out;
  auto w = profile.walk();
  out.history.reserve(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    double p = 1.0;
    JointAction a = w->plan().sample(rng, &p);
    out.probability *= p;
    w->step(a);
    out.history.push_back(std::move(a));
  }
  return out;
}

double history_probability(const FiniteSupportProfile& profile, const History& h) {
  double p = 1.0;
  auto w = profile.walk();
  for (const auto& a : h) {
    p *= w->plan().probability_of(a);
    if (p == 0.0) return 0.0;
    w->step(a);
  }
  return p;
}

}  // namespace tailgame
