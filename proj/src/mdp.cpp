#include "tailgame/mdp.hpp"

#include <algorithm>
#include <cmath>

namespace tailgame {

void DecisionProcess::validate() const {
  if (n_states < 1) throw ValidationError("decision process needs states");
  if (initial < 0 || initial >= n_states)
    throw ValidationError("decision process initial state out of range");
  if (static_cast<int>(actions.size()) != n_states)
    throw ValidationError("decision process action table size");
  for (const auto& acts : actions) {
    if (acts.empty()) throw ValidationError("state with no actions");
    for (const auto& branches : acts) {
      if (branches.empty()) throw ValidationError("action with no branches");
      double total = 0.0;
      for (const Branch& b : branches) {
        if (b.prob < 0.0) throw ValidationError("negative branch probability");
        if (b.next < 0 || b.next >= n_states)
          throw ValidationError("branch target out of range");
        total += b.prob;
      }
      if (std::fabs(total - 1.0) > 1e-9)
        throw ValidationError("branch probabilities sum to " + to_dec12(total));
    }
  }
  if (kind == ValKind::ParityState &&
      static_cast<int>(state_priority.size()) != n_states)
    throw ValidationError("parity priorities missing");
}

// ---------------------------------------------------------------------------
// maximal end components
// ---------------------------------------------------------------------------

namespace {

std::size_t uz(int i) { return static_cast<std::size_t>(i); }

/// Tarjan SCCs over alive states, following enabled actions only.
struct SccFinder {
  const DecisionProcess& dp;
  const std::vector<std::vector<bool>>& enabled;
  const std::vector<bool>& alive;
  std::vector<int> comp, low, num, stack_;
  std::vector<bool> on_stack;
  int counter = 0, n_comps = 0;

  SccFinder(const DecisionProcess& d, const std::vector<std::vector<bool>>& en,
            const std::vector<bool>& al)
      : dp(d), enabled(en), alive(al) {
    comp.assign(uz(dp.n_states), -1);
    low.assign(uz(dp.n_states), 0);
    num.assign(uz(dp.n_states), -1);
    on_stack.assign(uz(dp.n_states), false);
    for (int s = 0; s < dp.n_states; ++s)
      if (alive[uz(s)] && num[uz(s)] < 0) dfs(s);
  }

  void dfs(int s) {
    num[uz(s)] = low[uz(s)] = counter++;
    stack_.push_back(s);
    on_stack[uz(s)] = true;
    for (std::size_t a = 0; a < dp.actions[uz(s)].size(); ++a) {
      if (!enabled[uz(s)][a]) continue;
      for (const Branch& b : dp.actions[uz(s)][a]) {
        if (b.prob <= 0.0 || !alive[uz(b.next)]) continue;
        if (num[uz(b.next)] < 0) {
          dfs(b.next);
          low[uz(s)] = std::min(low[uz(s)], low[uz(b.next)]);
        } else if (on_stack[uz(b.next)]) {
          low[uz(s)] = std::min(low[uz(s)], num[uz(b.next)]);
        }
      }
    }
    if (low[uz(s)] == num[uz(s)]) {
      while (true) {
        int t = stack_.back();
        stack_.pop_back();
        on_stack[uz(t)] = false;
        comp[uz(t)] = n_comps;
        if (t == s) break;
      }
      ++n_comps;
    }
  }
};

}  // namespace

MecDecomposition maximal_end_components(const DecisionProcess& dp) {
  std::vector<std::vector<bool>> enabled(uz(dp.n_states));
  std::vector<bool> alive(uz(dp.n_states));
  for (int s = 0; s < dp.n_states; ++s) {
    enabled[uz(s)].assign(dp.actions[uz(s)].size(), true);
    alive[uz(s)] = !dp.actions[uz(s)].empty();
  }

  // iteratively drop actions that can leave their SCC, then dead states
  bool changed = true;
  while (changed) {
    changed = false;
    SccFinder scc(dp, enabled, alive);
    for (int s = 0; s < dp.n_states; ++s) {
      if (!alive[uz(s)]) continue;
      for (std::size_t a = 0; a < dp.actions[uz(s)].size(); ++a) {
        if (!enabled[uz(s)][a]) continue;
        for (const Branch& b : dp.actions[uz(s)][a]) {
          if (b.prob <= 0.0) continue;
          if (!alive[uz(b.next)] || scc.comp[uz(b.next)] != scc.comp[uz(s)]) {
            enabled[uz(s)][a] = false;
            changed = true;
            break;
          }
        }
      }
      bool any = false;
      for (bool e : enabled[uz(s)]) any = any || e;
      if (!any) {
        alive[uz(s)] = false;
        changed = true;
      }
    }
  }

  MecDecomposition out;
  out.member.assign(uz(dp.n_states), -1);
  SccFinder scc(dp, enabled, alive);
  std::vector<int> comp_to_mec(uz(scc.n_comps), -1);
  for (int s = 0; s < dp.n_states; ++s) {
    if (!alive[uz(s)]) continue;
    int c = scc.comp[uz(s)];
    if (comp_to_mec[uz(c)] < 0) {
      comp_to_mec[uz(c)] = static_cast<int>(out.mecs.size());
      out.mecs.emplace_back();
      out.actions.emplace_back();
    }
    int m = comp_to_mec[uz(c)];
    out.member[uz(s)] = m;
    out.mecs[uz(m)].push_back(s);
    for (std::size_t a = 0; a < dp.actions[uz(s)].size(); ++a)
      if (enabled[uz(s)][a]) out.actions[uz(m)].emplace_back(s, static_cast<int>(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// reachability
// ---------------------------------------------------------------------------

std::vector<double> max_reachability(const DecisionProcess& dp,
                                     const std::vector<bool>& target, double tol,
                                     int max_iter, std::vector<int>* policy) {
  std::vector<double> x(uz(dp.n_states), 0.0);
  for (int s = 0; s < dp.n_states; ++s)
    if (target[uz(s)]) x[uz(s)] = 1.0;
  if (policy) policy->assign(uz(dp.n_states), -1);

  for (int it = 0; it < max_iter; ++it) {
    double residual = 0.0;
    for (int s = 0; s < dp.n_states; ++s) {
      if (target[uz(s)]) continue;
      double best = 0.0;
      int arg = 0;
      for (std::size_t a = 0; a < dp.actions[uz(s)].size(); ++a) {
        double v = 0.0;
        for (const Branch& b : dp.actions[uz(s)][a]) v += b.prob * x[uz(b.next)];
        if (v > best + 1e-15) {
          best = v;
          arg = static_cast<int>(a);
        }
      }
      residual = std::max(residual, best - x[uz(s)]);
      x[uz(s)] = best;
      if (policy) (*policy)[uz(s)] = arg;
    }
    if (residual <= tol) break;
  }
  return x;
}

// ---------------------------------------------------------------------------
// objective solving
// ---------------------------------------------------------------------------

namespace {

bool action_has_flag(const DecisionProcess& dp, int s, int a) {
  for (const Branch& b : dp.actions[uz(s)][uz(a)])
    if (b.prob > 0.0 && b.flag) return true;
  return false;
}

/// Buchi: a MEC wins iff some surviving action has an accepting branch.
std::vector<bool> buchi_winning(const DecisionProcess& dp, const MecDecomposition& mec) {
  std::vector<bool> win(uz(dp.n_states), false);
  for (std::size_t m = 0; m < mec.mecs.size(); ++m) {
    bool accepting = false;
    for (auto [s, a] : mec.actions[m])
      if (action_has_flag(dp, s, a)) {
        accepting = true;
        break;
      }
    if (accepting)
      for (int s : mec.mecs[m]) win[uz(s)] = true;
  }
  return win;
}

/// CoBuchi: winning states are those inside an end component of the sub-MDP
/// that keeps only actions with no rejecting branch.
std::vector<bool> cobuchi_winning(const DecisionProcess& dp) {
  DecisionProcess safe = dp;
  for (int s = 0; s < dp.n_states; ++s) {
    std::vector<std::vector<Branch>> keep;
    for (std::size_t a = 0; a < dp.actions[uz(s)].size(); ++a)
      if (!action_has_flag(dp, s, static_cast<int>(a)))
        keep.push_back(dp.actions[uz(s)][a]);
    safe.actions[uz(s)] = std::move(keep);  // may become empty; MECs handle that
  }
  MecDecomposition mec = maximal_end_components(safe);
  std::vector<bool> win(uz(dp.n_states), false);
  for (int s = 0; s < dp.n_states; ++s) win[uz(s)] = mec.member[uz(s)] >= 0;
  return win;
}

/// Parity: a MEC wins iff for some even priority d it has a sub-end-component
/// within states of priority <= d that touches priority d.
std::vector<bool> parity_winning(const DecisionProcess& dp, const MecDecomposition& mec) {
  std::vector<bool> win(uz(dp.n_states), false);
  int maxp = 0;
  for (int p : dp.state_priority) maxp = std::max(maxp, p);

  for (std::size_t m = 0; m < mec.mecs.size(); ++m) {
    bool winning = false;
    for (int d = maxp - (maxp % 2); d >= 0 && !winning; d -= 2) {
      std::vector<int> idx(uz(dp.n_states), -1);
      std::vector<int> states;
      for (int s : mec.mecs[m])
        if (dp.state_priority[uz(s)] <= d) {
          idx[uz(s)] = static_cast<int>(states.size());
          states.push_back(s);
        }
      if (states.empty()) continue;

      DecisionProcess sub;
      sub.n_states = static_cast<int>(states.size());
      sub.initial = 0;
      sub.kind = dp.kind;
      sub.actions.resize(states.size());
      sub.state_priority.resize(states.size());
      for (std::size_t k = 0; k < states.size(); ++k) {
        int s = states[k];
        sub.state_priority[k] = dp.state_priority[uz(s)];
        for (const auto& branches : dp.actions[uz(s)]) {
          bool stays = true;
          for (const Branch& b : branches)
            if (b.prob > 0.0 && idx[uz(b.next)] < 0) stays = false;
          if (!stays) continue;
          std::vector<Branch> mapped = branches;
          for (Branch& b : mapped) b.next = idx[uz(b.next)];
          sub.actions[k].push_back(std::move(mapped));
        }
      }
      MecDecomposition sm = maximal_end_components(sub);
      for (const auto& component : sm.mecs) {
        for (int sk : component)
          if (sub.state_priority[uz(sk)] == d) {
            winning = true;
            break;
          }
        if (winning) break;
      }
    }
    if (winning)
      for (int s : mec.mecs[m]) win[uz(s)] = true;
  }
  return win;
}

double action_reward(const DecisionProcess& dp, int s, int a) {
  double r = 0.0;
  for (const Branch& b : dp.actions[uz(s)][uz(a)]) r += b.prob * b.weight;
  return r;
}

/// Optimal gain of a MEC restricted to its surviving actions (a communicating
/// MDP): relative value iteration with half-damping for periodic chains.
double mec_gain(const DecisionProcess& dp, const std::vector<int>& states,
                const std::vector<std::pair<int, int>>& acts, double tol, int max_iter) {
  std::vector<int> idx(uz(dp.n_states), -1);
  for (std::size_t k = 0; k < states.size(); ++k) idx[uz(states[k])] = static_cast<int>(k);
  std::vector<std::vector<std::pair<int, int>>> by_state(states.size());
  for (auto [s, a] : acts) by_state[uz(idx[uz(s)])].emplace_back(s, a);

  std::vector<double> v(states.size(), 0.0), w(states.size(), 0.0);
  double gain = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t k = 0; k < states.size(); ++k) {
      double best = -1.0;
      for (auto [s, a] : by_state[k]) {
        double val = action_reward(dp, s, a);
        for (const Branch& b : dp.actions[uz(s)][uz(a)]) val += b.prob * v[uz(idx[uz(b.next)])];
        best = std::max(best, val);
      }
      w[k] = 0.5 * v[k] + 0.5 * best;
    }
    double lo = w[0] - v[0], hi = lo;
    for (std::size_t k = 0; k < states.size(); ++k) {
      lo = std::min(lo, w[k] - v[k]);
      hi = std::max(hi, w[k] - v[k]);
    }
    gain = lo + hi;  // the damped difference approaches gain / 2
    double base = w[0];
    for (std::size_t k = 0; k < states.size(); ++k) v[k] = w[k] - base;
    if (hi - lo <= 0.25 * tol && it > 8) break;
  }
  return clamp01(gain);
}

}  // namespace

MdpSolution solve_mdp(const DecisionProcess& dp, double tol, int max_iter) {
  dp.validate();
  MdpSolution sol;
  sol.policy.assign(uz(dp.n_states), -1);

  if (dp.kind == ValKind::LimsupMean) {
    MecDecomposition mec = maximal_end_components(dp);
    std::vector<double> terminal(uz(dp.n_states), 0.0);
    std::vector<bool> in_mec(uz(dp.n_states), false);
    for (std::size_t m = 0; m < mec.mecs.size(); ++m) {
      double g = mec_gain(dp, mec.mecs[m], mec.actions[m], tol, max_iter);
      for (int s : mec.mecs[m]) {
        terminal[uz(s)] = g;
        in_mec[uz(s)] = true;
      }
    }
    // x = max(collectable gain here, expected x after one step)
    std::vector<double> x = terminal;
    double residual = 0.0;
    int iters = 0;
    for (int it = 0; it < max_iter; ++it) {
      residual = 0.0;
      ++iters;
      for (int s = 0; s < dp.n_states; ++s) {
        double best = terminal[uz(s)];
        int arg = -1;
        for (std::size_t a = 0; a < dp.actions[uz(s)].size(); ++a) {
          double v = 0.0;
          for (const Branch& b : dp.actions[uz(s)][a]) v += b.prob * x[uz(b.next)];
          if (v > best + 1e-15) {
            best = v;
            arg = static_cast<int>(a);
          }
        }
        residual = std::max(residual, best - x[uz(s)]);
        x[uz(s)] = best;
        sol.policy[uz(s)] = arg;  // -1 means "stay and collect the local gain"
      }
      if (residual <= tol) break;
    }
    sol.value = std::move(x);
    sol.iterations = iters;
    sol.residual = residual;
    return sol;
  }

  std::vector<bool> win;
  if (dp.kind == ValKind::BuchiEdge) {
    win = buchi_winning(dp, maximal_end_components(dp));
  } else if (dp.kind == ValKind::CoBuchiEdge) {
    win = cobuchi_winning(dp);
  } else if (dp.kind == ValKind::ParityState) {
    win = parity_winning(dp, maximal_end_components(dp));
  } else {
    throw ValidationError("unsupported objective kind for decision process");
  }

  sol.value = max_reachability(dp, win, tol, max_iter, &sol.policy);
  for (double& v : sol.value) v = clamp01(v);
  return sol;
}

}  // namespace tailgame
