#include "tailgame/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace tailgame {

namespace {
std::size_t uz(int i) { return static_cast<std::size_t>(i); }
}

int ConcurrentGame::automaton_index(Action own, int wact) const {
  const auto& aut = *objective;
  std::vector<Action> wa(aut.support.size());
  // window digits in support order, deviator slot replaced by `own`
  std::vector<Action> wdigits(window.size());
  for (std::size_t k = window.size(); k-- > 0;) {
    wdigits[k] = wact % window_sizes[k];
    wact /= window_sizes[k];
  }
  std::size_t wi = 0;
  for (std::size_t k = 0; k < aut.support.size(); ++k) {
    if (aut.support[k] == deviator)
      wa[k] = own;
    else
      wa[k] = wdigits[wi++];
  }
  return aut.window_index_of(wa);
}

void ConcurrentGame::validate() const {
  if (!objective) throw ValidationError("concurrent game needs an objective");
  objective->validate();
  if (n_own_actions < 1) throw ValidationError("deviator needs actions");
  if (window.size() != window_sizes.size())
    throw ValidationError("window size mismatch");
  std::size_t expect = 0;
  for (std::size_t k = 0; k < objective->support.size(); ++k)
    if (objective->support[k] != deviator) ++expect;
  if (window.size() != expect)
    throw ValidationError("window must be the objective support minus the deviator");
}

ConcurrentGame make_concurrent_game(const GameSpec& spec, PlayerId i) {
  if (i < 0 || i >= spec.n_players) throw ValidationError("unknown player");
  if (spec.objectives.empty() || !spec.objectives[uz(i)])
    throw ValidationError("player " + std::to_string(i) + " has no objective");
  ConcurrentGame g;
  g.deviator = i;
  g.objective = spec.objectives[uz(i)];
  g.n_own_actions = spec.n_actions(i);
  const auto& aut = *g.objective;
  for (std::size_t k = 0; k < aut.support.size(); ++k) {
    PlayerId p = aut.support[k];
    if (p == i) {
      if (aut.support_sizes[k] != g.n_own_actions)
        throw ValidationError("objective window size disagrees with the action set");
      continue;
    }
    g.window.push_back(p);
    int expected = p < spec.n_players ? spec.n_actions(p) : aut.support_sizes[k];
    if (aut.support_sizes[k] != expected)
      throw ValidationError("objective window size disagrees with the action set");
    g.window_sizes.push_back(aut.support_sizes[k]);
  }
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// nested fixpoints
// ---------------------------------------------------------------------------

namespace {

struct StageSolver {
  const ConcurrentGame& g;
  int n_states, n_own, n_w;

  explicit StageSolver(const ConcurrentGame& game)
      : g(game),
        n_states(game.n_states()),
        n_own(game.n_own_actions),
        n_w(game.n_window_actions()) {}

  /// One application of the value operator with entries from `entry`;
  /// optionally captures the coalition minimizer distribution per state.
  std::vector<double> apply(
      const std::function<double(int, Action, int)>& entry,
      std::vector<std::vector<double>>* minimizers = nullptr) const {
    std::vector<double> out(uz(n_states));
    if (minimizers) minimizers->assign(uz(n_states), {});
    for (int s = 0; s < n_states; ++s) {
      Mat m(n_own, n_w);
      for (Action own = 0; own < n_own; ++own)
        for (int w = 0; w < n_w; ++w) m.at(own, w) = entry(s, own, w);
      MatrixGameSolution sol = solve_matrix_game(m);
      out[uz(s)] = sol.value;
      if (minimizers) (*minimizers)[uz(s)] = sol.col.prob;
    }
    return out;
  }
};

void check_monotone(const std::vector<double>& before, const std::vector<double>& after,
                    bool nondecreasing, const char* where) {
  for (std::size_t k = 0; k < before.size(); ++k) {
    double drift = nondecreasing ? before[k] - after[k] : after[k] - before[k];
    if (drift > 1e-7)
      throw std::logic_error(std::string("fixpoint iteration not monotone in ") + where +
                             " (drift " + to_dec12(drift) + ")");
  }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) r = std::max(r, std::fabs(a[k] - b[k]));
  return r;
}

/// Buchi:   V = gfp Y. lfp X. val[acc ? Y(next) : X(next)]
/// CoBuchi: V = lfp Y. gfp X. val[rej ? Y(next) : X(next)]
ValueTable two_level_value(const ConcurrentGame& g, bool buchi, double tol_inner,
                           double tol_outer, int max_iter) {
  StageSolver stage(g);
  const auto& aut = *g.objective;
  ValueTable table;
  std::vector<double> outer(uz(stage.n_states), buchi ? 1.0 : 0.0);
  int used = 0;
  bool converged = false;

  while (used < max_iter && !converged) {
    std::vector<double> inner(uz(stage.n_states), buchi ? 0.0 : 1.0);
    while (used < max_iter) {
      ++used;
      std::vector<double> next = stage.apply([&](int s, Action own, int w) {
        int wa = g.automaton_index(own, w);
        const auto& cont = aut.flag(s, wa) ? outer : inner;
        return cont[uz(aut.step(s, wa))];
      });
      check_monotone(inner, next, buchi, "inner stage fixpoint");
      double inner_res = max_abs_diff(next, inner);
      inner = std::move(next);
      if (inner_res <= tol_inner) break;
    }
    check_monotone(outer, inner, !buchi, "outer fixpoint");
    double outer_res = max_abs_diff(inner, outer);
    outer = std::move(inner);
    table.residual = outer_res;
    if (outer_res <= tol_outer) converged = true;
  }
  table.value = outer;
  table.iterations = used;
  table.converged = converged;
  for (double& v : table.value) v = clamp01(v);
  return table;
}

/// Parity on state priorities, max-even convention: nested fixpoints with the
/// highest priority outermost (gfp on even, lfp on odd).
ValueTable parity_nested_value(const ConcurrentGame& g, double tol_inner,
                               double tol_outer, int max_iter) {
  StageSolver stage(g);
  const auto& aut = *g.objective;

  std::vector<int> prios = aut.state_priority;
  std::sort(prios.begin(), prios.end(), std::greater<int>());
  prios.erase(std::unique(prios.begin(), prios.end()), prios.end());
  const int levels = static_cast<int>(prios.size());
  int top = *std::max_element(aut.state_priority.begin(), aut.state_priority.end());
  std::vector<int> level_of_priority(uz(top + 1), -1);
  for (int k = 0; k < levels; ++k) level_of_priority[uz(prios[uz(k)])] = k;

  std::vector<std::vector<double>> var(uz(levels));
  int used = 0;
  bool converged = true;

  auto apply_once = [&]() {
    return stage.apply([&](int s, Action own, int w) {
      int wa = g.automaton_index(own, w);
      int lvl = level_of_priority[uz(aut.state_priority[uz(s)])];
      return var[uz(lvl)][uz(aut.step(s, wa))];
    });
  };

  std::function<std::vector<double>(int)> solve_level = [&](int k) {
    bool is_max = prios[uz(k)] % 2 == 0;  // even priority: greatest fixpoint
    var[uz(k)].assign(uz(stage.n_states), is_max ? 1.0 : 0.0);
    double tol = k == levels - 1 ? tol_inner : tol_outer;
    while (used < max_iter) {
      ++used;
      std::vector<double> next = k == levels - 1 ? apply_once() : solve_level(k + 1);
      check_monotone(var[uz(k)], next, !is_max, "parity level");
      double res = max_abs_diff(next, var[uz(k)]);
      var[uz(k)] = std::move(next);
      if (res <= tol) return var[uz(k)];
    }
    converged = false;
    return var[uz(k)];
  };

  ValueTable table;
  table.value = solve_level(0);
  table.iterations = used;
  table.converged = converged;
  table.residual = converged ? 0.0 : 1.0;
  for (double& v : table.value) v = clamp01(v);
  return table;
}

/// Limsup-mean: gain value iteration v_{k+1} = val(r + v_k); the gain is read
/// off value differences over the later rounds.
ValueTable mean_value(const ConcurrentGame& g, double tol_outer, int max_iter) {
  StageSolver stage(g);
  const auto& aut = *g.objective;
  const int rounds = std::max(16, std::min(max_iter, 4000));

  std::vector<double> v(uz(stage.n_states), 0.0), half, quarter;
  for (int k = 1; k <= rounds; ++k) {
    v = stage.apply([&](int s, Action own, int w) {
      int wa = g.automaton_index(own, w);
      return aut.weight(s, wa) + v[uz(aut.step(s, wa))];
    });
    if (k == rounds / 4) quarter = v;
    if (k == rounds / 2) half = v;
  }
  ValueTable table;
  table.iterations = rounds;
  table.value.assign(uz(stage.n_states), 0.0);
  double res = 0.0;
  for (int s = 0; s < stage.n_states; ++s) {
    double g1 = (v[uz(s)] - half[uz(s)]) / (rounds - rounds / 2);
    double g2 = (half[uz(s)] - quarter[uz(s)]) / (rounds / 2 - rounds / 4);
    table.value[uz(s)] = clamp01(g1);
    res = std::max(res, std::fabs(g1 - g2));
  }
  table.residual = res;
  table.converged = res <= tol_outer;
  return table;
}

}  // namespace

ValueTable concurrent_value(const ConcurrentGame& g, double tol_inner, double tol_outer,
                            int max_iter) {
  g.validate();
  switch (g.objective->kind) {
    case ValKind::BuchiEdge:
      return two_level_value(g, true, tol_inner, tol_outer, max_iter);
    case ValKind::CoBuchiEdge:
      return two_level_value(g, false, tol_inner, tol_outer, max_iter);
    case ValKind::ParityState:
      return parity_nested_value(g, tol_inner, tol_outer, max_iter);
    case ValKind::LimsupMean:
      return mean_value(g, tol_outer, max_iter);
    case ValKind::ZetaCapped:
      throw ValidationError("zeta-capped has no state-based solver");
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// punishment
// ---------------------------------------------------------------------------

PunishmentResult punishment_profile(const ConcurrentGame& g, double tol_inner,
                                    double tol_outer, int max_iter) {
  g.validate();
  PunishmentResult out;
  out.table = concurrent_value(g, tol_inner, tol_outer, max_iter);
  const auto& aut = *g.objective;

  // The fixpoint stage matrices are degenerate (all entries equal the value),
  // so minimizers extracted from them can miss the punishing direction. Solve
  // the discounted surrogate game instead: its minimizers look arbitrarily
  // many stages ahead, and the audit below carries the actual guarantee.
  const double gamma = 0.98;
  auto edge_payoff = [&](int s, int wa) {
    switch (aut.kind) {
      case ValKind::BuchiEdge:
        return aut.flag(s, wa) ? 1.0 : 0.0;
      case ValKind::CoBuchiEdge:
        return aut.flag(s, wa) ? 0.0 : 1.0;
      case ValKind::LimsupMean:
        return aut.weight(s, wa);
      default:
        return aut.state_priority[uz(aut.step(s, wa))] % 2 == 0 ? 1.0 : 0.0;
    }
  };
  StageSolver stage(g);
  std::vector<double> disc(uz(g.n_states()), 0.0);
  for (int it = 0; it < 1200; ++it) {
    std::vector<double> next = stage.apply([&](int s, Action own, int w) {
      int wa = g.automaton_index(own, w);
      return (1.0 - gamma) * edge_payoff(s, wa) + gamma * disc[uz(aut.step(s, wa))];
    });
    double res = max_abs_diff(next, disc);
    disc = std::move(next);
    if (res <= 1e-12) break;
  }
  std::vector<std::vector<double>> minimizers;
  stage.apply(
      [&](int s, Action own, int w) {
        int wa = g.automaton_index(own, w);
        return (1.0 - gamma) * edge_payoff(s, wa) + gamma * disc[uz(aut.step(s, wa))];
      },
      &minimizers);

  StationaryStrategy& strat = out.strategy;
  strat.window = g.window;
  strat.window_sizes = g.window_sizes;
  strat.correlated = minimizers;
  strat.mixes.resize(uz(g.n_states()));
  for (int s = 0; s < g.n_states(); ++s) {
    const auto& dist = minimizers[uz(s)];
    int mixing = 0;
    std::vector<std::vector<double>> marg(strat.window.size());
    for (std::size_t j = 0; j < strat.window.size(); ++j)
      marg[j].assign(uz(strat.window_sizes[j]), 0.0);
    for (std::size_t w = 0; w < dist.size(); ++w) {
      int rest = static_cast<int>(w);
      std::vector<Action> digits(strat.window.size());
      for (std::size_t k = strat.window.size(); k-- > 0;) {
        digits[k] = rest % strat.window_sizes[k];
        rest /= strat.window_sizes[k];
      }
      for (std::size_t j = 0; j < strat.window.size(); ++j)
        marg[j][uz(digits[j])] += dist[w];
    }
    for (std::size_t j = 0; j < strat.window.size(); ++j) {
      double top = 0.0, total = 0.0;
      std::size_t arg = 0;
      for (std::size_t a = 0; a < marg[j].size(); ++a) {
        if (marg[j][a] < 0) marg[j][a] = 0;
        total += marg[j][a];
        if (marg[j][a] > top) top = marg[j][a], arg = a;
      }
      for (double& p : marg[j]) p /= total;
      double t2 = 0.0;
      for (double p : marg[j]) t2 += p;
      marg[j][arg] += 1.0 - t2;
      if (top / total < 1.0 - 1e-9) ++mixing;
      strat.mixes[uz(s)].push_back(MixedAction(marg[j]));
    }
    if (mixing > 1) strat.product_exact = false;
  }

  out.guarantee = best_response(g, strat).value;
  return out;
}

// ---------------------------------------------------------------------------
// best responses
// ---------------------------------------------------------------------------

namespace {

bool edge_flag_of(const PayoffAutomaton& aut, int q, int wa) {
  if (aut.kind != ValKind::BuchiEdge && aut.kind != ValKind::CoBuchiEdge) return false;
  return aut.flag(q, wa);
}

void add_stationary_branches(const ConcurrentGame& g, const StationaryStrategy& strat,
                             int q, Action own, int state_offset,
                             std::vector<Branch>& branches) {
  const auto& aut = *g.objective;
  const int nw = g.n_window_actions();
  for (int w = 0; w < nw; ++w) {
    double p = 1.0;
    int rest = w;
    std::vector<Action> digits(g.window.size());
    for (std::size_t k = g.window.size(); k-- > 0;) {
      digits[k] = rest % g.window_sizes[k];
      rest /= g.window_sizes[k];
    }
    for (std::size_t j = 0; j < g.window.size() && p > 0.0; ++j)
      p *= strat.mixes[uz(q)][j][digits[j]];
    if (p <= 0.0) continue;
    int wa = g.automaton_index(own, w);
    branches.push_back(Branch{p, state_offset + aut.step(q, wa), edge_flag_of(aut, q, wa),
                              aut.kind == ValKind::LimsupMean ? aut.weight(q, wa) : 0.0});
  }
}

}  // namespace

BestResponseResult best_response(const ConcurrentGame& g, const StationaryStrategy& s,
                                 double tol) {
  g.validate();
  const auto& aut = *g.objective;
  DecisionProcess dp;
  dp.n_states = g.n_states();
  dp.initial = aut.initial;
  dp.kind = aut.kind;
  dp.state_priority = aut.state_priority;
  dp.actions.resize(uz(dp.n_states));
  for (int q = 0; q < dp.n_states; ++q)
    for (Action own = 0; own < g.n_own_actions; ++own) {
      std::vector<Branch> branches;
      add_stationary_branches(g, s, q, own, 0, branches);
      dp.actions[uz(q)].push_back(std::move(branches));
    }
  MdpSolution sol = solve_mdp(dp, tol);
  BestResponseResult out;
  out.value = sol.value[uz(dp.initial)];
  out.state_values = std::move(sol.value);
  out.policy = std::move(sol.policy);
  out.n_states = dp.n_states;
  return out;
}

BestResponseResult best_response_grim(const ConcurrentGame& g, const LassoPlay& play,
                                      const StationaryStrategy& punishment,
                                      double tol) {
  g.validate();
  if (play.cycle.empty()) throw ValidationError("lasso cycle must be nonempty");
  const auto& aut = *g.objective;
  const int nq = g.n_states();
  const int plen = static_cast<int>(play.prefix.size());
  const int clen = static_cast<int>(play.cycle.size());
  const int positions = plen + clen;
  // composite state = mode * nq + q; modes 0..positions-1 on path, then punish
  const int punish_mode = positions;
  const int n_states = (positions + 1) * nq;

  DecisionProcess dp;
  dp.n_states = n_states;
  dp.initial = aut.initial;  // mode 0
  dp.kind = aut.kind;
  dp.actions.resize(uz(n_states));
  if (aut.kind == ValKind::ParityState) {
    dp.state_priority.resize(uz(n_states));
    for (int m = 0; m <= positions; ++m)
      for (int q = 0; q < nq; ++q)
        dp.state_priority[uz(m * nq + q)] = aut.state_priority[uz(q)];
  }

  for (int pos = 0; pos < positions; ++pos) {
    const JointAction& prescribed = play.at(uz(pos));
    int next_pos = pos + 1 < positions ? pos + 1 : plen;
    int wact = 0;
    for (std::size_t k = 0; k < g.window.size(); ++k)
      wact = wact * g.window_sizes[k] + prescribed[g.window[k]];
    for (int q = 0; q < nq; ++q) {
      for (Action own = 0; own < g.n_own_actions; ++own) {
        int wa = g.automaton_index(own, wact);
        int q2 = aut.step(q, wa);
        bool conforms = own == prescribed[g.deviator];
        int mode2 = conforms ? next_pos : punish_mode;
        std::vector<Branch> branches{
            Branch{1.0, mode2 * nq + q2, edge_flag_of(aut, q, wa),
                   aut.kind == ValKind::LimsupMean ? aut.weight(q, wa) : 0.0}};
        dp.actions[uz(pos * nq + q)].push_back(std::move(branches));
      }
    }
  }
  for (int q = 0; q < nq; ++q)
    for (Action own = 0; own < g.n_own_actions; ++own) {
      std::vector<Branch> branches;
      add_stationary_branches(g, punishment, q, own, punish_mode * nq, branches);
      dp.actions[uz(punish_mode * nq + q)].push_back(std::move(branches));
    }

  MdpSolution sol = solve_mdp(dp, tol);
  BestResponseResult out;
  out.value = sol.value[uz(dp.initial)];
  out.state_values = std::move(sol.value);
  out.policy = std::move(sol.policy);
  out.n_states = n_states;
  return out;
}

// ---------------------------------------------------------------------------
// history independence
// ---------------------------------------------------------------------------

HistoryIndependenceReport history_independence_check(const ConcurrentGame& g,
                                                     const ValueTable& table,
                                                     double tol) {
  const auto& aut = *g.objective;
  std::vector<bool> reach(uz(aut.n_states), false);
  std::vector<int> stack{aut.initial};
  reach[uz(aut.initial)] = true;
  const int n_wa = aut.n_window_actions();
  while (!stack.empty()) {
    int q = stack.back();
    stack.pop_back();
    for (int wa = 0; wa < n_wa; ++wa) {
      int q2 = aut.step(q, wa);
      if (!reach[uz(q2)]) {
        reach[uz(q2)] = true;
        stack.push_back(q2);
      }
    }
  }
  HistoryIndependenceReport rep;
  bool first = true;
  for (int q = 0; q < aut.n_states; ++q) {
    if (!reach[uz(q)]) continue;
    double v = table.value[uz(q)];
    if (first || v < rep.min_value) {
      rep.min_value = v;
      rep.min_state = q;
    }
    if (first || v > rep.max_value) {
      rep.max_value = v;
      rep.max_state = q;
    }
    first = false;
  }
  rep.spread = rep.max_value - rep.min_value;
  rep.ok = rep.spread <= tol;
  return rep;
}

}  // namespace tailgame
