#include "tailgame/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

namespace tailgame {

namespace {
std::size_t uz(int i) { return static_cast<std::size_t>(i); }
}

// ---------------------------------------------------------------------------
// H_t^F
// ---------------------------------------------------------------------------

bool HFSet::contains(const History& h) const {
  for (std::size_t k = 0; k < h.size(); ++k)
    for (int i = static_cast<int>(k) + 1; i < spec->n_players; ++i)
      if (h[k][i] != spec->defaults[uz(i)]) return false;
  return true;
}

double HFSet::branching(int t) const {
  StaircaseSchedule sched{spec->n_players};
  double b = 1.0;
  for (int i = 0; i < sched.active_count(t); ++i) b *= spec->n_actions(i);
  return b;
}

double HFSet::cardinality(int t) const {
  double c = 1.0;
  for (int k = 0; k < t; ++k) c *= branching(k);
  return c;
}

// ---------------------------------------------------------------------------
// G(h)
// ---------------------------------------------------------------------------

double GOfH::payoff(std::size_t pos, const std::vector<Action>& active_actions,
                    const GameSpec& spec) const {
  const OneShotFn& f = d_functions[pos];
  int idx = 0;
  for (std::size_t k = 0; k < f.window.size(); ++k) {
    PlayerId w = f.window[k];
    Action a = w < static_cast<int>(active.size()) ? active_actions[uz(w)]
                                                   : spec.defaults[uz(w)];
    idx = idx * f.sizes[k] + a;
  }
  return f.values[uz(idx)];
}

namespace {

GOfH gh_from_cursors(const std::vector<DCursor*>& cursors, int stage,
                     const GameSpec& spec) {
  GOfH g;
  g.stage = stage;
  StaircaseSchedule sched{spec.n_players};
  int k = sched.active_count(stage);
  for (int i = 0; i < k; ++i) {
    g.active.push_back(i);
    g.n_actions.push_back(spec.n_actions(i));
    g.d_functions.push_back(cursors[uz(i)]->one_shot());
  }
  return g;
}

}  // namespace

GOfH build_Gh(const std::vector<const DLedger*>& ledgers, const History& h,
              const GameSpec& spec) {
  StaircaseSchedule sched{spec.n_players};
  int k = sched.active_count(static_cast<int>(h.size()));
  if (static_cast<int>(ledgers.size()) < k)
    throw ValidationError("need one ledger per active player");
  std::vector<std::unique_ptr<DCursor>> cursors;
  std::vector<DCursor*> raw;
  for (int i = 0; i < k; ++i) {
    cursors.push_back(ledgers[uz(i)]->cursor());
    for (const auto& a : h) cursors.back()->step(a);
    raw.push_back(cursors.back().get());
  }
  return gh_from_cursors(raw, static_cast<int>(h.size()), spec);
}

GhSolution solve_Gh(const GOfH& g, const GameSpec& spec, double tol) {
  GhSolution sol;
  const std::size_t k = g.active.size();

  bool separable = true;
  for (std::size_t pos = 0; pos < k && separable; ++pos)
    for (PlayerId w : g.d_functions[pos].window)
      if (w < static_cast<int>(k) && w != g.active[pos]) separable = false;

  if (separable) {
    sol.separable = true;
    std::vector<Action> actions(k, 0);
    for (std::size_t pos = 0; pos < k; ++pos) {
      Action best = 0;
      double best_v = -1.0;
      std::vector<Action> probe(k, 0);
      for (Action a = 0; a < g.n_actions[pos]; ++a) {
        probe[pos] = a;
        double v = g.payoff(pos, probe, spec);
        if (v > best_v + 1e-15) {
          best_v = v;
          best = a;
        }
      }
      actions[pos] = best;
    }
    for (std::size_t pos = 0; pos < k; ++pos)
      sol.profile.push_back(MixedAction::pure(g.n_actions[pos], actions[pos]));
    sol.max_regret = 0.0;
    return sol;
  }

  // materialize and hand to the normal-form solver
  NormalFormGame nf;
  nf.players = g.active;
  nf.n_actions = g.n_actions;
  long long joint = 1;
  for (int n : g.n_actions) {
    joint *= n;
    if (joint > 4096) throw ValidationError("G(h) too large to materialize");
  }
  nf.payoffs.assign(k, std::vector<double>(uz(static_cast<int>(joint))));
  for (int j = 0; j < joint; ++j) {
    std::vector<Action> a = nf.decode(static_cast<int>(j));
    for (std::size_t pos = 0; pos < k; ++pos)
      nf.payoffs[pos][uz(static_cast<int>(j))] = clamp01(g.payoff(pos, a, spec));
  }
  NashResult nash = nash_equilibrium(nf, tol);
  sol.profile = std::move(nash.profile);
  sol.max_regret = nash.max_regret;
  return sol;
}

double nash_value_gap(const GOfH& g, const GhSolution& sol, const GameSpec& spec) {
  StagePlan plan;
  plan.pure = spec.defaults;
  for (std::size_t pos = 0; pos < g.active.size(); ++pos) {
    if (sol.profile[pos].is_pure()) {
      for (Action a = 0; a < sol.profile[pos].n_actions(); ++a)
        if (sol.profile[pos][a] == 1.0) plan.pure[uz(g.active[pos])] = a;
    } else {
      plan.randomizers.emplace_back(g.active[pos], sol.profile[pos]);
    }
  }
  double worst = -1.0;
  for (std::size_t pos = 0; pos < g.active.size(); ++pos) {
    ValueBracket b = oneshot_value_bracket(g.d_functions[pos], g.active[pos]);
    double expect = expected_value(g.d_functions[pos], plan);
    worst = std::max(worst, b.lower - expect);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// staircase profile
// ---------------------------------------------------------------------------

namespace {

class StaircaseWalker final : public ProfileWalker {
public:
  StaircaseWalker(const GameSpec& spec, const std::vector<DLedger>& ledgers,
                  double nash_tol)
      : spec_(spec), nash_tol_(nash_tol) {
    for (const auto& l : ledgers) cursors_.push_back(l.cursor());
  }

  StagePlan plan() const override {
    StagePlan out;
    out.pure = spec_.defaults;
    if (!in_hf_) return out;
    std::vector<DCursor*> raw;
    for (const auto& c : cursors_) raw.push_back(c.get());
    GOfH g = gh_from_cursors(raw, stage_, spec_);
    GhSolution sol = solve_Gh(g, spec_, nash_tol_);
    for (std::size_t pos = 0; pos < g.active.size(); ++pos) {
      if (sol.profile[pos].is_pure()) {
        for (Action a = 0; a < sol.profile[pos].n_actions(); ++a)
          if (sol.profile[pos][a] == 1.0) out.pure[uz(g.active[pos])] = a;
      } else {
        out.randomizers.emplace_back(g.active[pos], sol.profile[pos]);
      }
    }
    return out;
  }

  void step(const JointAction& a) override {
    if (in_hf_)
      for (int i = stage_ + 1; i < spec_.n_players; ++i)
        if (a[i] != spec_.defaults[uz(i)]) in_hf_ = false;
    for (auto& c : cursors_) c->step(a);
    ++stage_;
  }

private:
  const GameSpec& spec_;
  double nash_tol_;
  std::vector<std::unique_ptr<DCursor>> cursors_;
  int stage_ = 0;
  bool in_hf_ = true;
};

class StaircaseProfile final : public FiniteSupportProfile {
public:
  StaircaseProfile(GameSpec spec, std::vector<DLedger> ledgers, double nash_tol)
      : FiniteSupportProfile(spec.n_players),
        spec_(std::move(spec)),
        ledgers_(std::move(ledgers)),
        nash_tol_(nash_tol) {
    if (static_cast<int>(ledgers_.size()) != spec_.n_players)
      throw ValidationError("need one ledger per player");
  }

  std::unique_ptr<ProfileWalker> walk() const override {
    return std::make_unique<StaircaseWalker>(spec_, ledgers_, nash_tol_);
  }

private:
  GameSpec spec_;
  std::vector<DLedger> ledgers_;
  double nash_tol_;
};

}  // namespace

std::shared_ptr<FiniteSupportProfile> staircase_profile(const GameSpec& spec,
                                                        std::vector<DLedger> ledgers,
                                                        double nash_tol) {
  return std::make_shared<StaircaseProfile>(spec, std::move(ledgers), nash_tol);
}

// ---------------------------------------------------------------------------
// target play search
// ---------------------------------------------------------------------------

namespace {

std::vector<double> lasso_payoffs(const GameSpec& spec, const LassoPlay& p) {
  std::vector<double> out;
  for (int i = 0; i < spec.n_players; ++i)
    out.push_back(evaluate_lasso(*spec.objectives[uz(i)], p));
  return out;
}

bool meets_targets(const GameSpec& spec, const std::vector<double>& payoffs,
                   const std::vector<double>& targets) {
  for (int i = 0; i < spec.n_players; ++i)
    if (payoffs[uz(i)] < targets[uz(i)] - spec.eps[uz(i)] / 2.0 - 1e-12) return false;
  return true;
}

}  // namespace

TargetSearchResult find_target_play(const GameSpec& spec,
                                    const std::vector<double>& targets,
                                    int cycle_bound, int max_alphabet,
                                    int max_product_states) {
  if (static_cast<int>(targets.size()) != spec.n_players)
    throw ValidationError("need one target per player");
  if (spec.objectives.empty()) throw ValidationError("objectives required");
  TargetSearchResult res;
  res.best_individual.assign(uz(spec.n_players), 0.0);

  auto consider = [&](const LassoPlay& p) {
    std::vector<double> pay = lasso_payoffs(spec, p);
    for (int i = 0; i < spec.n_players; ++i)
      res.best_individual[uz(i)] = std::max(res.best_individual[uz(i)], pay[uz(i)]);
    if (!res.found && meets_targets(spec, pay, targets)) {
      res.found = true;
      res.play = p;
      res.payoffs = std::move(pay);
    }
    return res.found;
  };

  // staircase-shaped candidates: everyone ramps into a common action at their
  // activation stage, inactive players default-completed
  int common_actions = spec.n_actions(0);
  for (int i = 1; i < spec.n_players; ++i)
    common_actions = std::min(common_actions, spec.n_actions(i));
  StaircaseSchedule sched{spec.n_players};
  if (consider(LassoPlay({}, {spec.all_defaults()}))) return res;
  for (Action a = 0; a < common_actions; ++a) {
    JointAction all_a(std::vector<Action>(uz(spec.n_players), a));
    History ramp;
    for (int t = 0; t + 1 < spec.n_players; ++t) {
      JointAction stage = spec.all_defaults();
      for (int i = 0; i < sched.active_count(t); ++i) stage[i] = a;
      ramp.push_back(stage);
    }
    if (consider(LassoPlay(ramp, {all_a}))) return res;
  }

  // exhaustive (reachable product state, cycle) enumeration for small alphabets
  long long alphabet = 1;
  for (int i = 0; i < spec.n_players; ++i) {
    alphabet *= spec.n_actions(i);
    if (alphabet > (1ll << 40)) break;  // saturate; far beyond any enumerable size
  }
  long long cycles = 1, budget = 1 << 18;
  int feasible_bound = 0;
  while (feasible_bound < cycle_bound) {
    cycles *= alphabet;
    if (cycles > budget) break;
    ++feasible_bound;
  }
  if (alphabet <= max_alphabet && feasible_bound >= 1) {
    // breadth-first reachability over the synchronized product with witnesses
    std::vector<int> state_sizes;
    long long product = 1;
    for (int i = 0; i < spec.n_players; ++i) {
      state_sizes.push_back(spec.objectives[uz(i)]->n_states);
      product *= state_sizes.back();
    }
    auto encode = [&](const std::vector<int>& qs) {
      long long idx = 0;
      for (std::size_t i = 0; i < qs.size(); ++i) idx = idx * state_sizes[i] + qs[i];
      return idx;
    };
    JointAction decode_joint(std::vector<Action>(uz(spec.n_players), 0));
    auto joint_of = [&](long long code) {
      JointAction ja = decode_joint;
      for (int i = spec.n_players - 1; i >= 0; --i) {
        ja[i] = static_cast<Action>(code % spec.n_actions(i));
        code /= spec.n_actions(i);
      }
      return ja;
    };

    if (product <= max_product_states) {
      std::map<long long, History> witness;
      std::vector<int> init;
      for (int i = 0; i < spec.n_players; ++i) init.push_back(spec.objectives[uz(i)]->initial);
      std::vector<std::vector<int>> frontier{init};
      witness[encode(init)] = {};
      while (!frontier.empty()) {
        std::vector<int> qs = frontier.back();
        frontier.pop_back();
        History base = witness[encode(qs)];
        for (long long code = 0; code < alphabet; ++code) {
          JointAction ja = joint_of(code);
          std::vector<int> next(uz(spec.n_players));
          for (int i = 0; i < spec.n_players; ++i) {
            const auto& aut = *spec.objectives[uz(i)];
            next[uz(i)] = aut.step(qs[uz(i)], aut.window_index(ja));
          }
          if (witness.count(encode(next))) continue;
          History w = base;
          w.push_back(ja);
          witness[encode(next)] = std::move(w);
          frontier.push_back(next);
        }
      }

      // pad witnesses with default stages until every player is activated, so
      // cycles start after the staircase ramp
      {
        std::map<long long, History> padded;
        JointAction defaults = spec.all_defaults();
        for (auto& [code, hist] : witness) {
          History h = hist;
          long long rest = code;
          std::vector<int> qs(uz(spec.n_players));
          for (int i = spec.n_players - 1; i >= 0; --i) {
            qs[uz(i)] = static_cast<int>(rest % state_sizes[uz(i)]);
            rest /= state_sizes[uz(i)];
          }
          while (static_cast<int>(h.size()) + 1 < spec.n_players) {
            for (int i = 0; i < spec.n_players; ++i) {
              const auto& aut = *spec.objectives[uz(i)];
              qs[uz(i)] = aut.step(qs[uz(i)], aut.window_index(defaults));
            }
            h.push_back(defaults);
          }
          long long code2 = encode(qs);
          if (!padded.count(code2)) padded[code2] = std::move(h);
        }
        witness = std::move(padded);
      }

      // cycles over the full alphabet, from every reachable product state
      std::vector<long long> cycle_codes;
      std::function<bool(int)> enumerate = [&](int remaining) {
        if (!cycle_codes.empty()) {
          History cyc;
          for (long long c : cycle_codes) cyc.push_back(joint_of(c));
          for (const auto& [code, hist] : witness) {
            long long rest = code;
            std::vector<int> qs(uz(spec.n_players));
            for (int i = spec.n_players - 1; i >= 0; --i) {
              qs[uz(i)] = static_cast<int>(rest % state_sizes[uz(i)]);
              rest /= state_sizes[uz(i)];
            }
            std::vector<double> pay(uz(spec.n_players));
            bool all_ok = true;
            for (int i = 0; i < spec.n_players; ++i) {
              pay[uz(i)] = evaluate_lasso_from(*spec.objectives[uz(i)], qs[uz(i)],
                                               LassoPlay({}, cyc));
              res.best_individual[uz(i)] =
                  std::max(res.best_individual[uz(i)], pay[uz(i)]);
              if (pay[uz(i)] < targets[uz(i)] - spec.eps[uz(i)] / 2.0 - 1e-12)
                all_ok = false;
            }
            if (all_ok) {
              res.found = true;
              res.play = LassoPlay(hist, cyc);
              res.payoffs = lasso_payoffs(spec, res.play);
              return true;
            }
          }
        }
        if (remaining == 0) return false;
        for (long long c = 0; c < alphabet; ++c) {
          cycle_codes.push_back(c);
          if (enumerate(remaining - 1)) return true;
          cycle_codes.pop_back();
        }
        return false;
      };
      if (enumerate(feasible_bound)) return res;
      res.exhaustive = feasible_bound >= cycle_bound;
    }
  }

  res.failure = res.exhaustive ? "infeasible-at-bounds" : "bounds-too-small";
  return res;
}

// ---------------------------------------------------------------------------
// grim trigger
// ---------------------------------------------------------------------------

namespace {

class GrimWalker final : public ProfileWalker {
public:
  GrimWalker(const GameSpec& spec, const GrimTrigger& trigger)
      : spec_(spec), trigger_(trigger) {
    for (int i = 0; i < spec_.n_players; ++i)
      q_.push_back(spec_.objectives[uz(i)]->initial);
  }

  StagePlan plan() const override {
    StagePlan out;
    out.pure = spec_.defaults;
    if (deviator_ < 0) {
      const JointAction& a = trigger_.play.at(uz(stage_));
      out.pure = a.a;
      return out;
    }
    const StationaryStrategy& punish = trigger_.punishments[uz(deviator_)];
    int q = q_[uz(deviator_)];
    for (std::size_t j = 0; j < punish.window.size(); ++j) {
      const MixedAction& mix = punish.mixes[uz(q)][j];
      if (mix.is_pure()) {
        for (Action a = 0; a < mix.n_actions(); ++a)
          if (mix[a] == 1.0) out.pure[uz(punish.window[j])] = a;
      } else {
        out.randomizers.emplace_back(punish.window[j], mix);
      }
    }
    return out;
  }

  void step(const JointAction& a) override {
    if (deviator_ < 0) {
      const JointAction& prescribed = trigger_.play.at(uz(stage_));
      for (int i = 0; i < spec_.n_players; ++i)
        if (a[i] != prescribed[i]) {
          deviator_ = i;  // lowest index deviates first
          break;
        }
    }
    for (int i = 0; i < spec_.n_players; ++i) {
      const auto& aut = *spec_.objectives[uz(i)];
      q_[uz(i)] = aut.step(q_[uz(i)], aut.window_index(a));
    }
    ++stage_;
  }

private:
  const GameSpec& spec_;
  const GrimTrigger& trigger_;
  std::vector<int> q_;
  int stage_ = 0;
  int deviator_ = -1;
};

class GrimProfile final : public FiniteSupportProfile {
public:
  GrimProfile(GameSpec spec, GrimTrigger trigger)
      : FiniteSupportProfile(spec.n_players),
        spec_(std::move(spec)),
        trigger_(std::move(trigger)) {
    if (static_cast<int>(trigger_.punishments.size()) != spec_.n_players)
      throw ValidationError("need one punishment per player");
  }

  std::unique_ptr<ProfileWalker> walk() const override {
    return std::make_unique<GrimWalker>(spec_, trigger_);
  }

private:
  GameSpec spec_;
  GrimTrigger trigger_;
};

}  // namespace

GrimTrigger assemble_grim_trigger(const GameSpec& spec, LassoPlay play,
                                  std::vector<StationaryStrategy> punishments) {
  if (static_cast<int>(punishments.size()) != spec.n_players)
    throw ValidationError("need one punishment per player");
  for (std::size_t t = 0; t < play.prefix.size(); ++t)
    if (play.prefix[t].size() != spec.n_players)
      throw ValidationError("play prefix arity mismatch");
  for (std::size_t t = 0; t < play.cycle.size(); ++t)
    if (play.cycle[t].size() != spec.n_players)
      throw ValidationError("play cycle arity mismatch");
  return GrimTrigger{std::move(play), std::move(punishments)};
}

std::shared_ptr<FiniteSupportProfile> grim_trigger_profile(const GameSpec& spec,
                                                           GrimTrigger trigger) {
  return std::make_shared<GrimProfile>(spec, std::move(trigger));
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

EquilibriumCertificate audit_equilibrium(const GameSpec& spec, const LassoPlay& play,
                                         const std::vector<double>& targets,
                                         std::vector<StationaryStrategy> punishments,
                                         double tol, int threads) {
  if (static_cast<int>(punishments.size()) != spec.n_players)
    throw ValidationError("need one punishment per player");
  EquilibriumCertificate cert;
  cert.play = play;
  cert.audit_tol = tol;
  cert.threads = threads;
  cert.players.resize(uz(spec.n_players));

  auto audit_one = [&](int i) {
    PlayerAudit a;
    a.id = i;
    a.eps = spec.eps[uz(i)];
    a.target = targets.empty() ? 0.0 : targets[uz(i)];
    a.payoff = evaluate_lasso(*spec.objectives[uz(i)], play);
    ConcurrentGame g = make_concurrent_game(spec, i);
    a.best_response_value = best_response_grim(g, play, punishments[uz(i)]).value;
    a.margin = a.payoff + a.eps - a.best_response_value;
    cert.players[uz(i)] = a;
  };

  int workers = std::max(1, threads);
  if (workers == 1) {
    for (int i = 0; i < spec.n_players; ++i) audit_one(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w]() {
        for (int i = w; i < spec.n_players; i += workers) audit_one(i);
      });
    for (auto& t : pool) t.join();
  }

  cert.punishments = std::move(punishments);
  cert.accepted = true;
  for (const auto& a : cert.players)
    if (a.margin < -tol) cert.accepted = false;
  return cert;
}

EquilibriumResult build_equilibrium(const GameSpec& spec, const EquilibriumOptions& opt) {
  if (spec.objectives.empty()) throw ValidationError("objectives required");
  EquilibriumResult out;
  out.values.assign(uz(spec.n_players), 0.0);
  out.guarantees.assign(uz(spec.n_players), 1.0);

  std::vector<StationaryStrategy> punishments(uz(spec.n_players));
  long long iters = 0;

  auto solve_one = [&](int i) {
    ConcurrentGame g = make_concurrent_game(spec, i);
    PunishmentResult p =
        punishment_profile(g, opt.tol_inner, opt.tol_outer, opt.max_iter);
    punishments[uz(i)] = std::move(p.strategy);
    out.guarantees[uz(i)] = p.guarantee;
    // the sound side of the approximate table
    out.values[uz(i)] =
        clamp01(p.table.value[uz(g.objective->initial)] - p.table.residual);
    return p.table.iterations;
  };

  int workers = std::max(1, opt.threads);
  if (workers == 1) {
    for (int i = 0; i < spec.n_players; ++i) iters += solve_one(i);
  } else {
    std::vector<long long> per(uz(spec.n_players), 0);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w]() {
        for (int i = w; i < spec.n_players; i += workers) per[uz(i)] = solve_one(i);
      });
    for (auto& t : pool) t.join();
    for (long long v : per) iters += v;
  }

  out.search = find_target_play(spec, out.values, opt.cycle_bound);
  if (!out.search.found) return out;

  out.certificate = audit_equilibrium(spec, out.search.play, out.values,
                                      std::move(punishments), opt.audit_tol,
                                      opt.threads);
  out.certificate.seed = opt.seed;
  out.certificate.tol_inner = opt.tol_inner;
  out.certificate.tol_outer = opt.tol_outer;
  out.certificate.solver_iterations = iters;
  out.accepted = out.certificate.accepted;
  return out;
}

// ---------------------------------------------------------------------------
// Levy-style statistical check
// ---------------------------------------------------------------------------

LevyReport levy_bound_check(const GameSpec& spec, const FiniteSupportProfile& sigma,
                            PlayerId i, double target, int n_samples, int horizon,
                            std::uint64_t seed, double stat_tol, int cycle_window) {
  if (horizon < 2) throw ValidationError("horizon too short");
  LevyReport rep;
  rep.n_samples = n_samples;
  const auto& aut = *spec.objectives[uz(i)];
  double need = target - spec.eps[uz(i)] / 2.0;
  int cyc = cycle_window > 0 ? std::min(cycle_window, horizon) : horizon / 2;
  long long hits = 0;
  Rng seeder(seed);
  for (int s = 0; s < n_samples; ++s) {
    Rng rng = seeder.fork(static_cast<std::uint64_t>(s));
    auto walker = sigma.walk();
    History h;
    for (int t = 0; t < horizon; ++t) {
      JointAction a = walker->plan().sample(rng);
      walker->step(a);
      h.push_back(std::move(a));
    }
    History prefix(h.begin(), h.end() - cyc);
    History cycle(h.end() - cyc, h.end());
    if (evaluate_lasso(aut, LassoPlay(prefix, cycle)) >= need - 1e-12) ++hits;
  }
  rep.fraction = static_cast<double>(hits) / n_samples;
  rep.ok = rep.fraction >= 1.0 - stat_tol;
  return rep;
}

}  // namespace tailgame
