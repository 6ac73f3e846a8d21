#include "tailgame/oneshot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace tailgame {

void NormalFormGame::validate() const {
  if (n_actions.empty()) throw ValidationError("normal-form game has no players");
  if (!players.empty() && players.size() != n_actions.size())
    throw ValidationError("player id list size mismatch");
  for (int k : n_actions)
    if (k < 1) throw ValidationError("player with empty action set");
  long long joint = 1;
  for (int k : n_actions) {
    joint *= k;
    if (joint > (1ll << 22)) throw ValidationError("game tensor too large");
  }
  if (payoffs.size() != n_actions.size())
    throw ValidationError("need one payoff tensor per player");
  for (const auto& t : payoffs) {
    if (static_cast<long long>(t.size()) != joint)
      throw ValidationError("payoff tensor size mismatch");
    for (double v : t)
      if (v < -1e-12 || v > 1.0 + 1e-12)
        throw ValidationError("payoff outside [0,1]: " + to_dec12(v));
  }
}

void OneShotFn::validate() const {
  if (window.size() != sizes.size()) throw ValidationError("one-shot window mismatch");
  for (std::size_t k = 0; k + 1 < window.size(); ++k)
    if (window[k] >= window[k + 1])
      throw ValidationError("one-shot window must be sorted");
  if (static_cast<int>(values.size()) != n_points())
    throw ValidationError("one-shot value table size");
  for (double v : values)
    if (v < -1e-12 || v > 1.0 + 1e-12)
      throw ValidationError("one-shot value outside [0,1]");
}

double NormalFormGame::expected_payoff(int player_pos,
                                       const std::vector<MixedAction>& profile) const {
  const int nj = n_joint();
  double total = 0.0;
  for (int j = 0; j < nj; ++j) {
    std::vector<Action> a = decode(j);
    double p = 1.0;
    for (std::size_t k = 0; k < profile.size() && p > 0.0; ++k) p *= profile[k][a[k]];
    if (p > 0.0) total += p * payoff_of(player_pos, j);
  }
  return total;
}

double NormalFormGame::expected_payoff_vs(int player_pos, Action own,
                                          const std::vector<MixedAction>& profile) const {
  const int nj = n_joint();
  double total = 0.0;
  for (int j = 0; j < nj; ++j) {
    std::vector<Action> a = decode(j);
    if (a[static_cast<std::size_t>(player_pos)] != own) continue;
    double p = 1.0;
    for (std::size_t k = 0; k < profile.size() && p > 0.0; ++k) {
      if (static_cast<int>(k) == player_pos) continue;
      p *= profile[k][a[k]];
    }
    if (p > 0.0) total += p * payoff_of(player_pos, j);
  }
  return total;
}

// ---------------------------------------------------------------------------
// minmax
// ---------------------------------------------------------------------------

namespace {

/// Matrix of player_pos's payoffs: rows their actions, columns the coalition's
/// joint actions (mixed radix over the other positions in order).
struct CoalitionView {
  std::vector<int> members;  // positions other than player_pos
  int n_cols = 1;
  Mat matrix;

  CoalitionView(const NormalFormGame& g, int player_pos) {
    for (int k = 0; k < g.n_players(); ++k)
      if (k != player_pos) {
        members.push_back(k);
        n_cols *= g.n_actions[static_cast<std::size_t>(k)];
      }
    const int rows = g.n_actions[static_cast<std::size_t>(player_pos)];
    matrix = Mat(rows, n_cols);
    const int nj = g.n_joint();
    for (int j = 0; j < nj; ++j) {
      std::vector<Action> a = g.decode(j);
      int col = 0;
      for (int m : members) col = col * g.n_actions[static_cast<std::size_t>(m)] + a[m];
      matrix.at(a[static_cast<std::size_t>(player_pos)], col) = g.payoff_of(player_pos, j);
    }
  }

  std::vector<Action> decode_col(const NormalFormGame& g, int col) const {
    std::vector<Action> a(members.size());
    for (std::size_t k = members.size(); k-- > 0;) {
      int na = g.n_actions[static_cast<std::size_t>(members[k])];
      a[k] = col % na;
      col /= na;
    }
    return a;
  }
};

/// Value of the best response of the row player against an independent
/// coalition profile (one mixed action per coalition member, in member order).
double product_value(const CoalitionView& view, const NormalFormGame& g,
                     const std::vector<MixedAction>& coalition) {
  double best = -1.0;
  for (int r = 0; r < view.matrix.rows; ++r) {
    double v = 0.0;
    for (int c = 0; c < view.n_cols; ++c) {
      std::vector<Action> ca = view.decode_col(g, c);
      double p = 1.0;
      for (std::size_t k = 0; k < ca.size() && p > 0.0; ++k) p *= coalition[k][ca[k]];
      if (p > 0.0) v += p * view.matrix.at(r, c);
    }
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

MinmaxResult minmax_classical(const NormalFormGame& g, int player_pos) {
  g.validate();
  CoalitionView view(g, player_pos);
  MinmaxResult out;
  if (view.members.empty()) {
    // no opponents: plain maximization
    double best = 0.0;
    int arg = 0;
    for (int r = 0; r < view.matrix.rows; ++r)
      if (view.matrix.at(r, 0) > best) best = view.matrix.at(r, 0), arg = r;
    out.value = best;
    out.own = MixedAction::pure(view.matrix.rows, arg);
    out.coalition_correlated = {1.0};
    return out;
  }
  MatrixGameSolution sol = solve_matrix_game(view.matrix);
  out.value = sol.value;
  out.own = sol.row;
  out.coalition_correlated = sol.col.prob;
  return out;
}

ValueBracket minmax_finitistic_bracket(const NormalFormGame& g, int player_pos,
                                       int restarts, double tol, std::uint64_t seed) {
  g.validate();
  CoalitionView view(g, player_pos);
  ValueBracket out;

  MinmaxResult correlated = minmax_classical(g, player_pos);
  out.lower = correlated.value;
  out.witness_lower = correlated.coalition_correlated;

  if (view.members.empty() || view.members.size() == 1) {
    // product = correlated: the bracket is tight
    out.upper = out.lower;
    if (!view.members.empty())
      out.witness_upper = {MixedAction(correlated.coalition_correlated)};
    out.validate();
    return out;
  }

  // exhaustive search over pure coalition profiles
  double best_val = 2.0;
  std::vector<MixedAction> best_profile;
  for (int c = 0; c < view.n_cols; ++c) {
    double v = 0.0;
    for (int r = 0; r < view.matrix.rows; ++r) v = std::max(v, view.matrix.at(r, c));
    if (v < best_val) {
      best_val = v;
      best_profile.clear();
      std::vector<Action> ca = view.decode_col(g, c);
      for (std::size_t k = 0; k < view.members.size(); ++k)
        best_profile.push_back(MixedAction::pure(
            g.n_actions[static_cast<std::size_t>(view.members[k])], ca[k]));
    }
  }

  // alternating minimization: optimizing one member's mixed action with the
  // others fixed is an exact matrix-game LP
  Rng rng(seed ^ 0x5eedULL);
  auto polish = [&](std::vector<MixedAction> profile) {
    double value = product_value(view, g, profile);
    for (int round = 0; round < 64; ++round) {
      double before = value;
      for (std::size_t j = 0; j < view.members.size(); ++j) {
        int nj = g.n_actions[static_cast<std::size_t>(view.members[j])];
        // B[r][a_j] = E over the other members' mixes of the row payoff
        Mat b(view.matrix.rows, nj);
        for (int c = 0; c < view.n_cols; ++c) {
          std::vector<Action> ca = view.decode_col(g, c);
          double p = 1.0;
          for (std::size_t k = 0; k < ca.size() && p > 0.0; ++k)
            if (k != j) p *= profile[k][ca[k]];
          if (p == 0.0) continue;
          for (int r = 0; r < view.matrix.rows; ++r)
            b.at(r, ca[j]) += p * view.matrix.at(r, c);
        }
        MatrixGameSolution sol = solve_matrix_game(b);
        profile[j] = sol.col;
        value = sol.value;
      }
      if (before - value < 1e-12) break;
    }
    // evaluate the final profile exactly
    value = product_value(view, g, profile);
    if (value < best_val) {
      best_val = value;
      best_profile = std::move(profile);
    }
  };

  polish(best_profile);
  for (int s = 0; s < restarts; ++s) {
    std::vector<MixedAction> start;
    for (int m : view.members) {
      int na = g.n_actions[static_cast<std::size_t>(m)];
      std::vector<double> p(static_cast<std::size_t>(na));
      double sum = 0.0;
      for (double& x : p) sum += (x = rng.next_double() + 1e-9);
      for (double& x : p) x /= sum;
      // exact normalization
      double t = 0.0;
      for (double x : p) t += x;
      p[0] += 1.0 - t;
      start.push_back(MixedAction(std::move(p)));
    }
    polish(std::move(start));
  }

  out.upper = std::max(best_val, out.lower - tol);
  out.witness_upper = std::move(best_profile);
  out.validate();
  return out;
}

ValueBracket oneshot_value_bracket(const OneShotFn& f, PlayerId i, int restarts,
                                   double tol, std::uint64_t seed) {
  f.validate();
  NormalFormGame g;
  bool has_i = false;
  for (std::size_t k = 0; k < f.window.size(); ++k) {
    g.players.push_back(f.window[k]);
    g.n_actions.push_back(f.sizes[k]);
    if (f.window[k] == i) has_i = true;
  }
  int pos;
  std::vector<double> tensor = f.values;
  if (!has_i) {
    // the function ignores player i; a leading one-action slot keeps the
    // flat tensor layout intact
    g.players.insert(g.players.begin(), i);
    g.n_actions.insert(g.n_actions.begin(), 1);
    pos = 0;
  } else {
    pos = static_cast<int>(std::lower_bound(f.window.begin(), f.window.end(), i) -
                           f.window.begin());
  }
  for (double& v : tensor) v = clamp01(v);
  g.payoffs.assign(g.n_actions.size(), tensor);
  return minmax_finitistic_bracket(g, pos, restarts, tol, seed);
}

double expected_value(const OneShotFn& f, const StagePlan& plan) {
  const int n = f.n_points();
  double total = 0.0;
  for (int w = 0; w < n; ++w) {
    int rest = w;
    double p = 1.0;
    for (std::size_t k = f.window.size(); k-- > 0;) {
      Action a = rest % f.sizes[k];
      rest /= f.sizes[k];
      PlayerId pid = f.window[k];
      bool randomized = false;
      for (const auto& [rp, mix] : plan.randomizers)
        if (rp == pid) {
          p *= mix[a];
          randomized = true;
          break;
        }
      if (!randomized && plan.pure[static_cast<std::size_t>(pid)] != a) p = 0.0;
      if (p == 0.0) break;
    }
    if (p > 0.0) total += p * f.values[static_cast<std::size_t>(w)];
  }
  return total;
}

MinmaxEqualityReport minmax_equality_check(const NormalFormGame& g, int player_pos,
                                           double tol, std::uint64_t seed) {
  MinmaxEqualityReport rep;
  rep.classical = minmax_classical(g, player_pos).value;
  rep.bracket = minmax_finitistic_bracket(g, player_pos, 32, 1e-9, seed);
  rep.discrepancy = std::fabs(rep.classical - rep.bracket.midpoint());
  rep.ok = rep.discrepancy <= 0.5 * rep.bracket.width() + tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Nash
// ---------------------------------------------------------------------------

namespace {

NashResult verified(const NormalFormGame& g, std::vector<MixedAction> profile,
                    double tol) {
  NashResult r;
  r.profile = std::move(profile);
  r.regret.resize(static_cast<std::size_t>(g.n_players()));
  for (int i = 0; i < g.n_players(); ++i) {
    double own = g.expected_payoff(i, r.profile);
    double best = own;
    for (Action a = 0; a < g.n_actions[static_cast<std::size_t>(i)]; ++a)
      best = std::max(best, g.expected_payoff_vs(i, a, r.profile));
    r.regret[static_cast<std::size_t>(i)] = std::max(0.0, best - own);
    r.max_regret = std::max(r.max_regret, r.regret[static_cast<std::size_t>(i)]);
  }
  r.within_tol = r.max_regret <= tol;
  return r;
}

/// All pure profiles, lexicographically; returns the best one by max regret.
NashResult best_pure(const NormalFormGame& g, double tol) {
  NashResult best;
  best.max_regret = 2.0;
  const int nj = g.n_joint();
  for (int j = 0; j < nj; ++j) {
    std::vector<Action> a = g.decode(j);
    std::vector<MixedAction> prof;
    for (int i = 0; i < g.n_players(); ++i)
      prof.push_back(MixedAction::pure(g.n_actions[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i)]));
    NashResult r = verified(g, std::move(prof), tol);
    if (r.max_regret < best.max_regret) best = std::move(r);
    if (best.max_regret <= 1e-12) break;
  }
  return best;
}

std::vector<int> mask_actions(unsigned mask, int n) {
  std::vector<int> out;
  for (int a = 0; a < n; ++a)
    if (mask & (1u << a)) out.push_back(a);
  return out;
}

/// Exact bimatrix support enumeration. Returns profiles in lexicographic
/// smallest-support-first order; nullopt when no support pair solves.
std::optional<NashResult> support_enumeration(const NormalFormGame& g, double tol) {
  const int m = g.n_actions[0];
  const int n = g.n_actions[1];
  auto pay = [&](int player, Action a0, Action a1) {
    return g.payoff_of(player, a0 * n + a1);
  };

  for (int size = 1; size <= std::min(m, n); ++size) {
    for (unsigned m0 = 1; m0 < (1u << m); ++m0) {
      if (__builtin_popcount(m0) != size) continue;
      std::vector<int> s0 = mask_actions(m0, m);
      for (unsigned m1 = 1; m1 < (1u << n); ++m1) {
        if (__builtin_popcount(m1) != size) continue;
        std::vector<int> s1 = mask_actions(m1, n);

        // y over s1 makes player 0 indifferent across s0; v0 is the common value
        std::vector<std::vector<double>> a0(static_cast<std::size_t>(size) + 1,
                                            std::vector<double>(static_cast<std::size_t>(size) + 1, 0.0));
        std::vector<double> b0(static_cast<std::size_t>(size) + 1, 0.0);
        for (int r = 0; r < size; ++r) {
          for (int c = 0; c < size; ++c) a0[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = pay(0, s0[static_cast<std::size_t>(r)], s1[static_cast<std::size_t>(c)]);
          a0[static_cast<std::size_t>(r)][static_cast<std::size_t>(size)] = -1.0;  // -v0
        }
        for (int c = 0; c < size; ++c) a0[static_cast<std::size_t>(size)][static_cast<std::size_t>(c)] = 1.0;
        b0[static_cast<std::size_t>(size)] = 1.0;
        std::vector<double> y_sol;
        if (!solve_linear(a0, b0, y_sol)) continue;

        // x over s0 makes player 1 indifferent across s1
        std::vector<std::vector<double>> a1(static_cast<std::size_t>(size) + 1,
                                            std::vector<double>(static_cast<std::size_t>(size) + 1, 0.0));
        std::vector<double> b1(static_cast<std::size_t>(size) + 1, 0.0);
        for (int c = 0; c < size; ++c) {
          for (int r = 0; r < size; ++r) a1[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] = pay(1, s0[static_cast<std::size_t>(r)], s1[static_cast<std::size_t>(c)]);
          a1[static_cast<std::size_t>(c)][static_cast<std::size_t>(size)] = -1.0;  // -v1
        }
        for (int r = 0; r < size; ++r) a1[static_cast<std::size_t>(size)][static_cast<std::size_t>(r)] = 1.0;
        b1[static_cast<std::size_t>(size)] = 1.0;
        std::vector<double> x_sol;
        if (!solve_linear(a1, b1, x_sol)) continue;

        bool feasible = true;
        for (int k = 0; k < size; ++k)
          if (y_sol[static_cast<std::size_t>(k)] < -1e-9 || x_sol[static_cast<std::size_t>(k)] < -1e-9) feasible = false;
        if (!feasible) continue;

        std::vector<double> x(static_cast<std::size_t>(m), 0.0), y(static_cast<std::size_t>(n), 0.0);
        double sx = 0.0, sy = 0.0;
        for (int k = 0; k < size; ++k) {
          x[static_cast<std::size_t>(s0[static_cast<std::size_t>(k)])] = std::max(0.0, x_sol[static_cast<std::size_t>(k)]);
          y[static_cast<std::size_t>(s1[static_cast<std::size_t>(k)])] = std::max(0.0, y_sol[static_cast<std::size_t>(k)]);
        }
        for (double v : x) sx += v;
        for (double v : y) sy += v;
        if (sx <= 0 || sy <= 0) continue;
        for (double& v : x) v /= sx;
        for (double& v : y) v /= sy;
        x[static_cast<std::size_t>(s0[0])] += 1.0 - std::accumulate(x.begin(), x.end(), 0.0);
        y[static_cast<std::size_t>(s1[0])] += 1.0 - std::accumulate(y.begin(), y.end(), 0.0);

        NashResult r = verified(
            g, {MixedAction(std::move(x)), MixedAction(std::move(y))}, tol);
        if (r.max_regret <= std::max(tol, 1e-9)) return r;
      }
    }
  }
  return std::nullopt;
}

/// Deterministic regret matching with expected updates; average profile is
/// certified by an exact best-response check.
NashResult regret_matching(const NormalFormGame& g, double tol, int max_iter) {
  const int np = g.n_players();
  std::vector<std::vector<double>> cum_regret, avg;
  std::vector<MixedAction> current;
  for (int i = 0; i < np; ++i) {
    int na = g.n_actions[static_cast<std::size_t>(i)];
    cum_regret.emplace_back(static_cast<std::size_t>(na), 0.0);
    avg.emplace_back(static_cast<std::size_t>(na), 0.0);
    current.push_back(MixedAction::uniform(na));
  }

  NashResult best;
  best.max_regret = 2.0;
  auto consider = [&](const std::vector<MixedAction>& prof) {
    NashResult r = verified(g, prof, tol);
    if (r.max_regret < best.max_regret) best = std::move(r);
  };

  for (int it = 1; it <= max_iter; ++it) {
    for (int i = 0; i < np; ++i) {
      int na = g.n_actions[static_cast<std::size_t>(i)];
      double own = g.expected_payoff(i, current);
      for (Action a = 0; a < na; ++a)
        cum_regret[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] +=
            g.expected_payoff_vs(i, a, current) - own;
    }
    for (int i = 0; i < np; ++i) {
      int na = g.n_actions[static_cast<std::size_t>(i)];
      double pos = 0.0;
      for (double r : cum_regret[static_cast<std::size_t>(i)]) pos += std::max(0.0, r);
      std::vector<double> p(static_cast<std::size_t>(na));
      if (pos <= 0.0) {
        for (double& v : p) v = 1.0 / na;
      } else {
        for (int a = 0; a < na; ++a)
          p[static_cast<std::size_t>(a)] =
              std::max(0.0, cum_regret[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]) / pos;
        double t = 0.0;
        for (double v : p) t += v;
        p[0] += 1.0 - t;
      }
      current[static_cast<std::size_t>(i)] = MixedAction(std::move(p));
      for (int a = 0; a < na; ++a)
        avg[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] += current[static_cast<std::size_t>(i)][a];
    }
    if (it % 500 == 0 || it == max_iter) {
      std::vector<MixedAction> avg_prof;
      for (int i = 0; i < np; ++i) {
        std::vector<double> p = avg[static_cast<std::size_t>(i)];
        double t = 0.0;
        for (double v : p) t += v;
        for (double& v : p) v /= t;
        double t2 = 0.0;
        for (double v : p) t2 += v;
        p[0] += 1.0 - t2;
        avg_prof.push_back(MixedAction(std::move(p)));
      }
      consider(avg_prof);
      if (best.max_regret <= tol) return best;
    }
  }
  return best;
}

}  // namespace

NashResult nash_equilibrium(const NormalFormGame& g, double tol, int max_iter) {
  g.validate();
  const int np = g.n_players();

  if (np == 1) {
    int na = g.n_actions[0];
    Action arg = 0;
    for (Action a = 1; a < na; ++a)
      if (g.payoff_of(0, a) > g.payoff_of(0, arg)) arg = a;
    return verified(g, {MixedAction::pure(na, arg)}, tol);
  }

  if (np == 2) {
    if (auto r = support_enumeration(g, std::min(tol, 1e-6))) return *r;
    // degenerate game: fall through to the generic machinery
  }

  NashResult pure = best_pure(g, tol);
  if (pure.max_regret <= 1e-12) return pure;

  NashResult rm = regret_matching(g, tol, max_iter);
  return rm.max_regret <= pure.max_regret ? rm : pure;
}

// ---------------------------------------------------------------------------
// finitistic approximation experiment
// ---------------------------------------------------------------------------

FinApproxReport finitistic_approximation(const GeometricPayoff& r, double opp_prob,
                                         double eps, int n_max, int n_samples,
                                         std::uint64_t seed) {
  if (n_max < 0 || n_samples < 1) throw ValidationError("bad experiment size");
  if (opp_prob < 0.0 || opp_prob > 1.0) throw ValidationError("bad probability");
  // coordinates beyond n_max + 60 contribute less than 2^-60: below double noise
  const int horizon = r.cutoff >= 0 ? r.cutoff : n_max + 60;

  FinApproxReport report;
  report.rows.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    report.rows[static_cast<std::size_t>(n)].n = n;
    report.rows[static_cast<std::size_t>(n)].bound = std::pow(2.0, -n + 1);
  }

  Rng rng(seed);
  std::vector<long long> hits(static_cast<std::size_t>(n_max) + 1, 0);
  for (int s = 0; s < n_samples; ++s) {
    // pure opponent tail a_1..a_horizon drawn from the product measure
    std::vector<int> tail(static_cast<std::size_t>(horizon) + 1, 0);
    for (int j = 1; j <= horizon; ++j)
      tail[static_cast<std::size_t>(j)] = rng.next_double() < opp_prob ? 1 : 0;

    // err(n) = |xi_n - E[r]| = 1/2 |sum_{j>n} w_j ([a_j = 1] - p)|; the a_0
    // term cancels, so the bound holds for every a_0 simultaneously
    double suffix = 0.0;
    std::vector<double> err(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (int j = horizon; j >= 1; --j) {
      suffix += r.weight(j) * (tail[static_cast<std::size_t>(j)] - opp_prob);
      if (j - 1 <= n_max) err[static_cast<std::size_t>(j - 1)] = 0.5 * std::fabs(suffix);
    }
    for (int n = 0; n <= n_max; ++n) {
      auto& row = report.rows[static_cast<std::size_t>(n)];
      double e = n < static_cast<int>(err.size()) ? err[static_cast<std::size_t>(n)] : 0.0;
      row.max_err = std::max(row.max_err, e);
      row.mean_err += e / n_samples;
      if (e <= eps) ++hits[static_cast<std::size_t>(n)];
    }
  }
  for (int n = 0; n <= n_max; ++n)
    report.rows[static_cast<std::size_t>(n)].hit_rate =
        static_cast<double>(hits[static_cast<std::size_t>(n)]) / n_samples;

  report.derived_n = n_max;
  for (int n = 0; n <= n_max; ++n) {
    // worst-case error over all tails: 1/2 sum_{j>n} w_j
    if (0.5 * r.tail_weight_sum(n) <= eps) {
      report.derived_n = n;
      break;
    }
  }
  report.hit_rate_at_derived =
      report.rows[static_cast<std::size_t>(report.derived_n)].hit_rate;
  return report;
}

}  // namespace tailgame
