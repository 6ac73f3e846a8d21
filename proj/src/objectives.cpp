#include "tailgame/objectives.hpp"

#include <algorithm>
#include <queue>

namespace tailgame {

void PayoffAutomaton::validate() const {
  if (support.size() != support_sizes.size())
    throw ValidationError("automaton support/support_sizes mismatch");
  for (std::size_t k = 0; k + 1 < support.size(); ++k)
    if (support[k] >= support[k + 1])
      throw ValidationError("automaton support must be sorted and unique");
  for (int s : support_sizes)
    if (s < 1) throw ValidationError("automaton support action count < 1");
  if (n_states < 1) throw ValidationError("automaton needs at least one state");
  if (initial < 0 || initial >= n_states)
    throw ValidationError("automaton initial state out of range");
  const std::size_t need =
      static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_window_actions());
  if (trans.size() != need) throw ValidationError("automaton transition table size");
  for (int t : trans)
    if (t < 0 || t >= n_states) throw ValidationError("automaton transition target");
  switch (kind) {
    case ValKind::BuchiEdge:
    case ValKind::CoBuchiEdge:
      if (edge_flag.size() != need) throw ValidationError("automaton edge flag table size");
      break;
    case ValKind::ParityState:
      if (state_priority.size() != static_cast<std::size_t>(n_states))
        throw ValidationError("automaton parity priority table size");
      for (int p : state_priority)
        if (p < 0) throw ValidationError("parity priorities must be nonnegative");
      break;
    case ValKind::LimsupMean:
    case ValKind::ZetaCapped:
      if (edge_weight.size() != need) throw ValidationError("automaton weight table size");
      for (double w : edge_weight)
        if (w < 0.0 || w > 1.0) throw ValidationError("edge weights must lie in [0,1]");
      break;
  }
}

int voorneveld_stage_reward(Action own, PopulationStatistic stat) {
  const bool majority_ones = stat.limsup_average() > 0.5;
  if (own == 0) return majority_ones ? 1 : 0;
  return majority_ones ? 0 : 1;
}

std::vector<int> voorneveld_stage_reward(const JointAction& a, PopulationStatistic stat) {
  std::vector<int> r(static_cast<std::size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i)
    r[static_cast<std::size_t>(i)] = voorneveld_stage_reward(a[i], stat);
  return r;
}

namespace {

/// Edges of the periodic part of the run of `p.cycle` from `state`:
/// iterate until a (state, cycle position) pair repeats.
struct LoopInfo {
  std::vector<std::pair<int, int>> edges;  // (state, window action) in loop order
};

LoopInfo run_loop(const PayoffAutomaton& aut, int state, const std::vector<int>& cycle_w) {
  const int clen = static_cast<int>(cycle_w.size());
  std::vector<int> seen(static_cast<std::size_t>(aut.n_states) * cycle_w.size(), -1);
  std::vector<std::pair<int, int>> path;  // (state, w) per step
  int q = state, pos = 0, step_no = 0;
  while (true) {
    int& mark = seen[static_cast<std::size_t>(q) * cycle_w.size() +
                     static_cast<std::size_t>(pos)];
    if (mark >= 0) {
      LoopInfo li;
      li.edges.assign(path.begin() + mark, path.end());
      return li;
    }
    mark = step_no;
    int w = cycle_w[static_cast<std::size_t>(pos)];
    path.emplace_back(q, w);
    q = aut.step(q, w);
    pos = (pos + 1) % clen;
    ++step_no;
  }
}

double evaluate_loop(const PayoffAutomaton& aut, const LoopInfo& li) {
  switch (aut.kind) {
    case ValKind::BuchiEdge:
      for (auto [s, w] : li.edges)
        if (aut.flag(s, w)) return 1.0;
      return 0.0;
    case ValKind::CoBuchiEdge:
      for (auto [s, w] : li.edges)
        if (aut.flag(s, w)) return 0.0;
      return 1.0;
    case ValKind::ParityState: {
      int maxp = 0;
      for (auto [s, w] : li.edges) {
        (void)w;
        maxp = std::max(maxp, aut.state_priority[static_cast<std::size_t>(s)]);
      }
      return maxp % 2 == 0 ? 1.0 : 0.0;
    }
    case ValKind::LimsupMean: {
      double sum = 0.0;
      for (auto [s, w] : li.edges) sum += aut.weight(s, w);
      return sum / static_cast<double>(li.edges.size());
    }
    case ValKind::ZetaCapped: {
      std::size_t ones = 0;
      for (auto [s, w] : li.edges) {
        (void)s;
        ones += static_cast<std::size_t>(w != 0);
      }
      if (ones == li.edges.size()) return 0.0;  // frequency exactly 1 pays 0
      return static_cast<double>(ones) / static_cast<double>(li.edges.size());
    }
  }
  return 0.0;
}

std::vector<int> window_indices(const PayoffAutomaton& aut, const History& h) {
  std::vector<int> w;
  w.reserve(h.size());
  for (const auto& a : h) w.push_back(aut.window_index(a));
  return w;
}

}  // namespace

double evaluate_lasso_from(const PayoffAutomaton& aut, int state, const LassoPlay& p) {
  int q = state;
  for (const auto& a : p.prefix) q = aut.step(q, aut.window_index(a));
  LoopInfo li = run_loop(aut, q, window_indices(aut, p.cycle));
  return evaluate_loop(aut, li);
}

double evaluate_lasso(const PayoffAutomaton& aut, const LassoPlay& p) {
  return evaluate_lasso_from(aut, aut.initial, p);
}

double zeta_capped(const LassoPlay& p) {
  std::size_t ones = 0;
  for (const auto& a : p.cycle) {
    if (a.size() < 1) throw ValidationError("zeta_capped needs at least one player");
    ones += static_cast<std::size_t>(a[0] == 1);
  }
  if (ones == p.cycle.size()) return 0.0;
  return static_cast<double>(ones) / static_cast<double>(p.cycle.size());
}

// ---------------------------------------------------------------------------
// tail / shift certificates
// ---------------------------------------------------------------------------

namespace {

JointAction window_joint(const PayoffAutomaton& aut, const std::vector<Action>& wa) {
  int n = aut.support.empty() ? 1 : aut.support.back() + 1;
  JointAction a(std::vector<Action>(static_cast<std::size_t>(n), 0));
  for (std::size_t k = 0; k < aut.support.size(); ++k) a[aut.support[k]] = wa[k];
  return a;
}

History decode_history(const PayoffAutomaton& aut, const std::vector<int>& ws) {
  History h;
  h.reserve(ws.size());
  for (int w : ws) h.push_back(window_joint(aut, aut.decode_window(w)));
  return h;
}

/// All cycles over the window alphabet with length in [1, bound].
void for_each_cycle(int alphabet, int bound, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> cyc;
  std::function<void(int)> rec = [&](int remaining) {
    if (!cyc.empty()) f(cyc);
    if (remaining == 0) return;
    for (int w = 0; w < alphabet; ++w) {
      cyc.push_back(w);
      rec(remaining - 1);
      cyc.pop_back();
    }
  };
  rec(bound);
}

double eval_from(const PayoffAutomaton& aut, int state, const std::vector<int>& cycle_w) {
  return evaluate_loop(aut, run_loop(aut, state, cycle_w));
}

}  // namespace

TailReport tail_check(const PayoffAutomaton& aut, int bound) {
  if (bound < 1) throw ValidationError("tail_check bound must be >= 1");
  aut.validate();
  const int alpha = aut.n_window_actions();
  TailReport report;

  // Pairs of states co-reachable by equal-length histories, with witnesses.
  const int ns = aut.n_states;
  std::vector<int> wit_len(static_cast<std::size_t>(ns) * ns, -1);
  std::vector<std::pair<std::vector<int>, std::vector<int>>> wit(
      static_cast<std::size_t>(ns) * ns);
  std::queue<std::pair<int, int>> frontier;
  auto idx = [ns](int a, int b) { return static_cast<std::size_t>(a) * ns + b; };
  wit_len[idx(aut.initial, aut.initial)] = 0;
  frontier.emplace(aut.initial, aut.initial);
  while (!frontier.empty()) {
    auto [q1, q2] = frontier.front();
    frontier.pop();
    for (int w1 = 0; w1 < alpha; ++w1)
      for (int w2 = 0; w2 < alpha; ++w2) {
        int r1 = aut.step(q1, w1), r2 = aut.step(q2, w2);
        if (wit_len[idx(r1, r2)] >= 0) continue;
        wit_len[idx(r1, r2)] = wit_len[idx(q1, q2)] + 1;
        wit[idx(r1, r2)].first = wit[idx(q1, q2)].first;
        wit[idx(r1, r2)].first.push_back(w1);
        wit[idx(r1, r2)].second = wit[idx(q1, q2)].second;
        wit[idx(r1, r2)].second.push_back(w2);
        frontier.emplace(r1, r2);
      }
  }

  // Tail: the same suffix must evaluate identically from any co-reachable pair.
  for (int q1 = 0; q1 < ns && report.tail; ++q1)
    for (int q2 = 0; q2 < ns && report.tail; ++q2) {
      if (q1 == q2 || wit_len[idx(q1, q2)] < 0) continue;
      for_each_cycle(alpha, bound, [&](const std::vector<int>& cyc) {
        if (!report.tail) return;
        double v1 = eval_from(aut, q1, cyc);
        double v2 = eval_from(aut, q2, cyc);
        if (v1 != v2) {
          report.tail = false;
          History cycle_h = decode_history(aut, cyc);
          report.tail_counterexample = {
              LassoPlay(decode_history(aut, wit[idx(q1, q2)].first), cycle_h),
              LassoPlay(decode_history(aut, wit[idx(q1, q2)].second), cycle_h)};
        }
      });
    }

  // Shift invariance: f(p) must equal f(shift p) and f(a . p).
  for_each_cycle(alpha, bound, [&](const std::vector<int>& cyc) {
    if (!report.shift_invariant) return;
    History cycle_h = decode_history(aut, cyc);
    LassoPlay base(History{}, cycle_h);
    double v = evaluate_lasso(aut, base);
    // shift of a pure cycle = rotation
    std::vector<int> rot(cyc.begin() + 1, cyc.end());
    rot.push_back(cyc.front());
    double vs = evaluate_lasso(aut, LassoPlay(History{}, decode_history(aut, rot)));
    if (vs != v) {
      report.shift_invariant = false;
      report.shift_counterexample = {base, LassoPlay(History{}, decode_history(aut, rot))};
      return;
    }
    for (int a = 0; a < alpha; ++a) {
      LassoPlay prepended(decode_history(aut, {a}), cycle_h);
      double vp = evaluate_lasso(aut, prepended);
      if (vp != v) {
        report.shift_invariant = false;
        report.shift_counterexample = {base, prepended};
        return;
      }
    }
  });

  return report;
}

// ---------------------------------------------------------------------------
// built-ins
// ---------------------------------------------------------------------------

std::shared_ptr<const PayoffAutomaton> make_automaton(AutomatonBuild b) {
  auto aut = std::make_shared<PayoffAutomaton>();
  aut->name = std::move(b.name);
  aut->support = std::move(b.support);
  aut->support_sizes = std::move(b.support_sizes);
  aut->n_states = b.n_states;
  aut->initial = b.initial;
  aut->kind = b.kind;
  aut->trans = std::move(b.trans);
  aut->edge_flag = std::move(b.edge_flag);
  aut->edge_weight = std::move(b.edge_weight);
  aut->state_priority = std::move(b.state_priority);
  aut->validate();
  return aut;
}

std::shared_ptr<const PayoffAutomaton> make_matching_pennies_io(PlayerId row, PlayerId col) {
  AutomatonBuild b;
  b.name = "matching-pennies-io";
  b.support = {row, col};
  b.support_sizes = {2, 2};
  b.kind = ValKind::BuchiEdge;
  b.trans = {0, 0, 0, 0};
  b.edge_flag = {1, 0, 0, 1};  // (T,L) and (B,R)
  return make_automaton(std::move(b));
}

std::shared_ptr<const PayoffAutomaton> make_matching_pennies_fin(PlayerId row, PlayerId col) {
  AutomatonBuild b;
  b.name = "matching-pennies-fin";
  b.support = {row, col};
  b.support_sizes = {2, 2};
  b.kind = ValKind::CoBuchiEdge;
  b.trans = {0, 0, 0, 0};
  b.edge_flag = {1, 0, 0, 1};  // rejecting on the diagonal
  return make_automaton(std::move(b));
}

std::shared_ptr<const PayoffAutomaton> make_voorneveld_ev(PlayerId i, PopulationStatistic stat) {
  AutomatonBuild b;
  b.name = "voorneveld-ev";
  b.support = {i};
  b.support_sizes = {2};
  b.kind = ValKind::CoBuchiEdge;
  b.trans = {0, 0};
  b.edge_flag = {static_cast<std::uint8_t>(voorneveld_stage_reward(0, stat) == 0),
                 static_cast<std::uint8_t>(voorneveld_stage_reward(1, stat) == 0)};
  return make_automaton(std::move(b));
}

std::shared_ptr<const PayoffAutomaton> make_zeta_capped(PlayerId player) {
  AutomatonBuild b;
  b.name = "zeta-capped";
  b.support = {player};
  b.support_sizes = {2};
  b.kind = ValKind::ZetaCapped;
  b.trans = {0, 0};
  b.edge_weight = {0.0, 1.0};
  return make_automaton(std::move(b));
}

std::shared_ptr<const PayoffAutomaton> make_even_position_cobuchi(PlayerId player) {
  AutomatonBuild b;
  b.name = "even-position-ones-finite";
  b.support = {player};
  b.support_sizes = {2};
  b.n_states = 2;  // state = stage parity
  b.kind = ValKind::CoBuchiEdge;
  b.trans = {1, 1, 0, 0};
  b.edge_flag = {0, 1, 0, 0};  // a 1 played at an even stage is rejecting
  return make_automaton(std::move(b));
}

}  // namespace tailgame
