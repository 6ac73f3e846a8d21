#include "tailgame/martin_d.hpp"

#include <algorithm>
#include <cmath>

namespace tailgame {

namespace {
std::size_t uz(int i) { return static_cast<std::size_t>(i); }
}

double DLedger::d_of(const History& h) const {
  auto c = cursor();
  for (const auto& a : h) c->step(a);
  return c->value();
}

History DLedger::alpha_of(const History& h) const {
  auto c = cursor();
  for (const auto& a : h) c->step(a);
  return History(h.begin(), h.begin() + c->alpha_stage());
}

// ---------------------------------------------------------------------------
// example ledgers
// ---------------------------------------------------------------------------

namespace {

class VoorneveldCursor final : public DCursor {
public:
  VoorneveldCursor(double w, PlayerId i, PopulationStatistic stat, bool absorbing)
      : player_(i), stat_(stat), absorbing_(absorbing) {
    d_ = w;
  }

  OneShotFn one_shot() const override {
    OneShotFn f;
    f.window = {player_};
    f.sizes = {2};
    f.values = {child(0), child(1)};
    return f;
  }

private:
  double child(Action a) const {
    if (absorbing_ && d_ <= 0.0) return 0.0;
    return static_cast<double>(voorneveld_stage_reward(a, stat_));
  }

  void do_step(const JointAction& a) override { d_ = child(a[player_]); }

  PlayerId player_;
  PopulationStatistic stat_;
  bool absorbing_;
};

class PennyCursor final : public DCursor {
public:
  PennyCursor(double w, PlayerId row, PlayerId col) : row_(row), col_(col) { d_ = w; }

  OneShotFn one_shot() const override {
    OneShotFn f;
    f.window = {row_, col_};
    f.sizes = {2, 2};
    f.values = {half_step_up(d_), half_step_down(d_), half_step_down(d_), half_step_up(d_)};
    return f;
  }

private:
  void do_step(const JointAction& a) override {
    d_ = a[row_] == a[col_] ? half_step_up(d_) : half_step_down(d_);
  }

  PlayerId row_, col_;
};

class ReinitCursor final : public DCursor {
public:
  ReinitCursor(DGenerator gen, double delta, std::function<double(int)> val_oracle)
      : gen_(std::move(gen)), delta_(delta), oracle_(std::move(val_oracle)) {
    double val = oracle_(0);
    inner_ = gen_.make(val);
    check_generator(val);
    d_ = inner_->value();
  }

  OneShotFn one_shot() const override { return inner_->one_shot(); }

private:
  void check_generator(double val) const {
    double got = inner_->value();
    if (val >= delta_ / 2.0) {
      if (got + 1e-9 < val - delta_ / 2.0)
        throw std::logic_error("generator invariant violated: D(root) = " +
                               to_dec12(got) + " < val - delta/2 = " +
                               to_dec12(val - delta_ / 2.0));
    } else if (got > 1e-12) {
      throw std::logic_error("generator must be identically 0 below delta/2");
    }
  }

  void do_step(const JointAction& a) override {
    inner_->step(a);
    d_ = inner_->value();  // d(h) comes from the pre-re-initiation function
    reinit_here_ = false;
    double val = oracle_(stage_ + 1);
    if (d_ < val - delta_) {
      // re-initiate: extensions follow the function rooted here
      inner_ = gen_.make(val);
      check_generator(val);
      alpha_ = stage_ + 1;
      reinit_here_ = true;
    }
  }

  DGenerator gen_;
  double delta_;
  std::function<double(int)> oracle_;
  std::unique_ptr<DCursor> inner_;
};

}  // namespace

DLedger d_voorneveld(double w, PlayerId i, PopulationStatistic stat) {
  if (!(w > 0.0 && w < 1.0)) throw ValidationError("w must lie in (0,1)");
  return DLedger("d-voorneveld", [w, i, stat]() {
    return std::make_unique<VoorneveldCursor>(w, i, stat, true);
  });
}

DLedger d_voorneveld_reward(PlayerId i, PopulationStatistic stat) {
  return DLedger("d-voorneveld-reward", [i, stat]() {
    return std::make_unique<VoorneveldCursor>(1.0, i, stat, false);
  });
}

DLedger d_matching_pennies(double w, PlayerId row, PlayerId col) {
  if (!(w > 0.0 && w < 1.0)) throw ValidationError("w must lie in (0,1)");
  return DLedger("d-matching-pennies", [w, row, col]() {
    return std::make_unique<PennyCursor>(w, row, col);
  });
}

DGenerator matching_pennies_generator(double delta, PlayerId row, PlayerId col) {
  if (!(delta > 0.0)) throw ValidationError("delta must be > 0");
  DGenerator gen;
  gen.delta = delta;
  gen.make = [delta, row, col](double val) -> std::unique_ptr<DCursor> {
    double w = val - delta / 2.0;
    if (w <= 0.0) {
      // constant-zero function: an absorbed minority cursor serves as one
      return std::make_unique<VoorneveldCursor>(0.0, row, PopulationStatistic{0}, true);
    }
    return std::make_unique<PennyCursor>(std::min(w, 1.0), row, col);
  };
  return gen;
}

DLedger d_with_reinit(DGenerator gen, double delta,
                      std::function<double(int)> val_oracle) {
  if (!(delta > 0.0)) throw ValidationError("delta must be > 0");
  return DLedger("d-reinit", [gen, delta, val_oracle]() {
    return std::make_unique<ReinitCursor>(gen, delta, val_oracle);
  });
}

// ---------------------------------------------------------------------------
// M conditions
// ---------------------------------------------------------------------------

MReport check_M_conditions(const DLedger& ledger, const FiniteSupportProfile& sigma,
                           const MCheckConfig& cfg) {
  MReport rep;
  std::vector<double> increments, reinit_counts, payoffs;
  Rng seeder(cfg.seed);

  for (int sample = 0; sample < cfg.n_samples && rep.defense_ok; ++sample) {
    Rng rng = seeder.fork(static_cast<std::uint64_t>(sample));
    auto walker = sigma.walk();
    auto cur = ledger.cursor();
    History h;
    int reinits = 0;

    for (int t = 0; t < cfg.horizon; ++t) {
      OneShotFn f = cur->one_shot();
      ValueBracket bracket = oneshot_value_bracket(f, cfg.player);
      StagePlan plan = walker->plan();

      // the profile must defend the value: val(d^h) <= E_{sigma(h)}[d^h];
      // a violation aborts the payoff claim
      double expect = expected_value(f, plan);
      if (bracket.lower > expect + 1e-9) {
        rep.defense_ok = false;
        rep.defense_stage = t;
        rep.defense_note = "val(d^h) = " + to_dec12(bracket.lower) + " > E[d^h] = " +
                       to_dec12(expect) + " at a stage-" + std::to_string(t) +
                       " history";
        break;
      }
      // the ledger level never exceeds its one-shot value
      rep.level_worst = std::max(rep.level_worst, cur->value() - bracket.lower);
      // every one-shot value clears the floor (certified on the upper side)
      if (cfg.value_floor >= 0.0)
        rep.floor_worst = std::max(rep.floor_worst, cfg.value_floor - bracket.upper);

      double d_before = cur->value();
      JointAction a = plan.sample(rng);
      walker->step(a);
      cur->step(a);
      increments.push_back(cur->value() - d_before);
      if (cur->reinitiated_here()) {
        ++reinits;
        if (cfg.delta > 0.0) {
          // jump gap at re-initiations: d(h) + delta/2 <= val(d^h)
          ValueBracket at_reinit = oneshot_value_bracket(cur->one_shot(), cfg.player);
          rep.reinit_gap_worst = std::max(
              rep.reinit_gap_worst, cur->value() + cfg.delta / 2.0 - at_reinit.upper);
        }
      }
      h.push_back(std::move(a));
    }
    reinit_counts.push_back(static_cast<double>(reinits));

    if (cfg.objective && static_cast<int>(h.size()) == cfg.horizon && cfg.horizon >= 2) {
      int cyc = cfg.cycle_window > 0 ? cfg.cycle_window : cfg.horizon / 2;
      cyc = std::min(cyc, cfg.horizon);
      History prefix(h.begin(), h.end() - cyc);
      History cycle(h.end() - cyc, h.end());
      payoffs.push_back(evaluate_lasso(*cfg.objective, LassoPlay(prefix, cycle)));
    }
  }

  rep.level_ok = rep.level_worst <= cfg.tol;
  rep.floor_ok = cfg.value_floor < 0.0 || rep.floor_worst <= cfg.tol;
  rep.increments = mean_se(increments);
  rep.reinits = mean_se(reinit_counts);
  rep.reinit_gap_ok = rep.reinit_gap_worst <= cfg.tol;

  if (cfg.objective && rep.defense_ok && !payoffs.empty()) {
    rep.payoff_checked = true;
    auto root = ledger.cursor();
    rep.payoff_threshold = oneshot_value_bracket(root->one_shot(), cfg.player).upper;
    rep.payoff_stats = mean_se(payoffs);
    rep.payoff_ok =
        rep.payoff_stats.mean >= rep.payoff_threshold - 3.0 * rep.payoff_stats.se - 1e-12;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// auxiliary-game runs
// ---------------------------------------------------------------------------

MRun extract_m_run(const DLedger& ledger, const History& play) {
  MRun run;
  auto cur = ledger.cursor();
  for (const auto& a : play) {
    run.functions.push_back(cur->one_shot());
    run.moves.push_back(a);
    cur->step(a);
  }
  return run;
}

MRunVerdict validate_m_run(const MRun& run, double w, PlayerId i, double tol) {
  MRunVerdict v;
  if (run.functions.size() != run.moves.size()) {
    v.legal = false;
    v.reason = "functions and moves disagree in length";
    return v;
  }
  for (std::size_t t = 0; t < run.functions.size(); ++t) {
    const OneShotFn& f = run.functions[t];
    f.validate();
    ValueBracket bracket = oneshot_value_bracket(f, i);
    double required = t == 0 ? w : v.r_at_moves.back();
    // player I's move must defend the running level; the bracket's upper
    // side certifies the >= claim
    if (bracket.upper < required - tol) {
      v.legal = false;
      v.first_bad_index = static_cast<int>(t);
      v.reason = "val(r_" + std::to_string(t) + ") = " + to_dec12(bracket.upper) +
                 " below required " + to_dec12(required);
      return v;
    }
    // player II's move must keep r_t(a^t) positive
    int point = f.window_index_of_joint(run.moves[t]);
    double at_move = f.values[uz(point)];
    if (!(at_move > 0.0)) {
      v.legal = false;
      v.first_bad_index = static_cast<int>(t);
      v.reason = "r_" + std::to_string(t) + "(a^" + std::to_string(t) + ") = " +
                 to_dec12(at_move) + " is not positive";
      return v;
    }
    v.r_at_moves.push_back(at_move);
  }
  return v;
}

}  // namespace tailgame
