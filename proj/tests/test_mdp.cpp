#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tailgame/mdp.hpp"

using namespace tailgame;

namespace {

DecisionProcess two_state_random(ValKind kind, Rng& rng) {
  DecisionProcess dp;
  dp.n_states = 2;
  dp.initial = 0;
  dp.kind = kind;
  dp.actions.resize(2);
  for (int s = 0; s < 2; ++s) {
    int n_actions = 2 + static_cast<int>(rng.next_below(2));
    for (int a = 0; a < n_actions; ++a) {
      // both-successor branches with probabilities bounded away from 0
      double p = 0.1 + 0.8 * rng.next_double();
      std::vector<Branch> branches;
      branches.push_back({p, 0, rng.next_below(4) == 0, rng.next_double()});
      branches.push_back({1.0 - p, 1, rng.next_below(4) == 0, rng.next_double()});
      dp.actions[static_cast<std::size_t>(s)].push_back(std::move(branches));
    }
  }
  return dp;
}

// ---- independent oracle: positional policy enumeration + chain analysis ----

struct Chain {
  // 2-state chain under a fixed policy
  double p[2][2];            // transition matrix
  bool accept[2];            // policy action has an accepting branch
  double reward[2];          // expected stage weight
};

Chain chain_of(const DecisionProcess& dp, int a0, int a1) {
  Chain c{};
  int act[2] = {a0, a1};
  for (int s = 0; s < 2; ++s) {
    for (const Branch& b : dp.actions[static_cast<std::size_t>(s)][static_cast<std::size_t>(act[s])]) {
      c.p[s][b.next] += b.prob;
      if (b.prob > 0 && b.flag) c.accept[s] = true;
      c.reward[s] += b.prob * b.weight;
    }
  }
  return c;
}

/// closed communicating classes of the 2-state chain
std::vector<std::vector<int>> recurrent_classes(const Chain& c) {
  auto reaches = [&](int from, int to) {
    if (from == to) return true;
    return c.p[from][to] > 0.0;
  };
  bool comm01 = c.p[0][1] > 0 && c.p[1][0] > 0;
  std::vector<std::vector<int>> out;
  if (comm01) {
    out.push_back({0, 1});
    return out;
  }
  for (int s = 0; s < 2; ++s) {
    int o = 1 - s;
    if (!reaches(s, o) || c.p[s][s] >= 1.0 - 1e-15) {
      if (c.p[s][o] == 0.0) out.push_back({s});
    }
  }
  return out;
}

/// P(visit accepting branches infinitely often) per state under the policy:
/// reach probability of accepting recurrent classes, horizon-200 backward
/// induction.
void oracle_buchi_policy(const Chain& c, double out[2]) {
  bool target[2] = {false, false};
  for (const auto& rc : recurrent_classes(c)) {
    bool acc = false;
    for (int s : rc) acc = acc || c.accept[s];
    if (acc)
      for (int s : rc) target[s] = true;
  }
  double u[2] = {target[0] ? 1.0 : 0.0, target[1] ? 1.0 : 0.0};
  for (int t = 0; t < 200; ++t) {
    double next[2];
    for (int s = 0; s < 2; ++s)
      next[s] = target[s] ? 1.0 : c.p[s][0] * u[0] + c.p[s][1] * u[1];
    u[0] = next[0];
    u[1] = next[1];
  }
  out[0] = u[0];
  out[1] = u[1];
}

/// limsup-average value per state under the policy: horizon-200 backward
/// induction, reading the gain off the difference v_200 - v_100.
void oracle_mean_policy(const Chain& c, double out[2]) {
  double v[2] = {0, 0}, v100[2] = {0, 0};
  for (int t = 1; t <= 200; ++t) {
    double next[2];
    for (int s = 0; s < 2; ++s)
      next[s] = c.reward[s] + c.p[s][0] * v[0] + c.p[s][1] * v[1];
    v[0] = next[0];
    v[1] = next[1];
    if (t == 100) {
      v100[0] = v[0];
      v100[1] = v[1];
    }
  }
  out[0] = (v[0] - v100[0]) / 100.0;
  out[1] = (v[1] - v100[1]) / 100.0;
}

void oracle_values(const DecisionProcess& dp, bool mean, double out[2]) {
  out[0] = out[1] = 0.0;
  for (std::size_t a0 = 0; a0 < dp.actions[0].size(); ++a0)
    for (std::size_t a1 = 0; a1 < dp.actions[1].size(); ++a1) {
      Chain c = chain_of(dp, static_cast<int>(a0), static_cast<int>(a1));
      double v[2];
      if (mean)
        oracle_mean_policy(c, v);
      else
        oracle_buchi_policy(c, v);
      out[0] = std::max(out[0], v[0]);
      out[1] = std::max(out[1], v[1]);
    }
}

}  // namespace

TEST_CASE("maximal end components") {
  // 3 states: 0 can go to 1 or 2; 1 and 2 are absorbing with self loops
  DecisionProcess dp;
  dp.n_states = 3;
  dp.initial = 0;
  dp.kind = ValKind::BuchiEdge;
  dp.actions.resize(3);
  dp.actions[0].push_back({{1.0, 1, false, 0}});
  dp.actions[0].push_back({{1.0, 2, false, 0}});
  dp.actions[1].push_back({{1.0, 1, true, 0}});
  dp.actions[2].push_back({{1.0, 2, false, 0}});

  MecDecomposition mec = maximal_end_components(dp);
  CHECK(mec.mecs.size() == 2);
  CHECK(mec.member[0] == -1);  // state 0 cannot stay anywhere
  CHECK(mec.member[1] >= 0);
  CHECK(mec.member[2] >= 0);
  CHECK(mec.member[1] != mec.member[2]);
}

TEST_CASE("buchi / cobuchi winning structure") {
  // state 0: choice between the accepting sink 1 and the rejecting loop 2
  DecisionProcess dp;
  dp.n_states = 3;
  dp.initial = 0;
  dp.kind = ValKind::BuchiEdge;
  dp.actions.resize(3);
  dp.actions[0].push_back({{0.5, 1, false, 0}, {0.5, 2, false, 0}});
  dp.actions[1].push_back({{1.0, 1, true, 0}});
  dp.actions[2].push_back({{1.0, 2, false, 0}});

  MdpSolution sol = solve_mdp(dp);
  CHECK(sol.value[1] == doctest::Approx(1.0));
  CHECK(sol.value[2] == doctest::Approx(0.0));
  CHECK(sol.value[0] == doctest::Approx(0.5).epsilon(1e-6));

  SUBCASE("cobuchi dual") {
    dp.kind = ValKind::CoBuchiEdge;  // flags become rejecting
    MdpSolution cs = solve_mdp(dp);
    CHECK(cs.value[1] == doctest::Approx(0.0));  // forced to reject forever
    CHECK(cs.value[2] == doctest::Approx(1.0));
    CHECK(cs.value[0] == doctest::Approx(0.5).epsilon(1e-6));
  }
}

TEST_CASE("parity winning") {
  // priorities: state 0 -> 1, state 1 -> 2; controller chooses where to loop
  DecisionProcess dp;
  dp.n_states = 2;
  dp.initial = 0;
  dp.kind = ValKind::ParityState;
  dp.state_priority = {1, 2};
  dp.actions.resize(2);
  dp.actions[0].push_back({{1.0, 0, false, 0}});  // stay at odd priority
  dp.actions[0].push_back({{1.0, 1, false, 0}});  // move to even
  dp.actions[1].push_back({{1.0, 1, false, 0}});

  MdpSolution sol = solve_mdp(dp);
  CHECK(sol.value[0] == doctest::Approx(1.0));
  CHECK(sol.value[1] == doctest::Approx(1.0));

  // flip: only the odd loop exists
  DecisionProcess odd = dp;
  odd.actions[0].pop_back();
  odd.state_priority = {1, 2};
  MdpSolution so = solve_mdp(odd);
  CHECK(so.value[0] == doctest::Approx(0.0));
}

TEST_CASE("limsup-mean gain") {
  // deterministic cycle with weights 1 and 0: gain 1/2
  DecisionProcess dp;
  dp.n_states = 2;
  dp.initial = 0;
  dp.kind = ValKind::LimsupMean;
  dp.actions.resize(2);
  dp.actions[0].push_back({{1.0, 1, false, 1.0}});
  dp.actions[1].push_back({{1.0, 0, false, 0.0}});
  MdpSolution sol = solve_mdp(dp);
  CHECK(sol.value[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sol.value[1] == doctest::Approx(0.5).epsilon(1e-6));

  // a better absorbing option: gain 0.8 loop reachable from state 0
  DecisionProcess dp2 = dp;
  dp2.actions[0].push_back({{1.0, 0, false, 0.8}});
  MdpSolution sol2 = solve_mdp(dp2);
  CHECK(sol2.value[0] == doctest::Approx(0.8).epsilon(1e-6));
}

namespace {

/// exact-ish parity value of a fixed positional policy on a small chain:
/// recurrent classes via closedness of the support graph, winning iff the
/// class's max priority is even, then 300-step reachability
void oracle_parity_policy(const DecisionProcess& dp, const std::vector<int>& pol,
                          std::vector<double>& out) {
  const int n = dp.n_states;
  std::vector<std::vector<double>> p(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int s = 0; s < n; ++s)
    for (const Branch& b : dp.actions[static_cast<std::size_t>(s)][static_cast<std::size_t>(pol[static_cast<std::size_t>(s)])])
      p[static_cast<std::size_t>(s)][static_cast<std::size_t>(b.next)] += b.prob;

  // transitive closure of the support graph
  std::vector<std::vector<bool>> reach(static_cast<std::size_t>(n),
                                       std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int s = 0; s < n; ++s) reach[static_cast<std::size_t>(s)][static_cast<std::size_t>(s)] = true;
  for (int rep = 0; rep < n; ++rep)
    for (int s = 0; s < n; ++s)
      for (int m = 0; m < n; ++m)
        if (p[static_cast<std::size_t>(s)][static_cast<std::size_t>(m)] > 0)
          for (int t = 0; t < n; ++t)
            if (reach[static_cast<std::size_t>(m)][static_cast<std::size_t>(t)])
              reach[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] = true;

  // recurrent = its reachable set is mutually reachable (closed class)
  std::vector<bool> target(static_cast<std::size_t>(n), false);
  for (int s = 0; s < n; ++s) {
    bool recurrent = true;
    int maxp = 0;
    for (int t = 0; t < n; ++t)
      if (reach[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)]) {
        if (!reach[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)]) recurrent = false;
        maxp = std::max(maxp, dp.state_priority[static_cast<std::size_t>(t)]);
      }
    if (recurrent && maxp % 2 == 0) target[static_cast<std::size_t>(s)] = true;
  }
  out.assign(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) out[static_cast<std::size_t>(s)] = target[static_cast<std::size_t>(s)] ? 1.0 : 0.0;
  for (int it = 0; it < 300; ++it) {
    std::vector<double> next = out;
    for (int s = 0; s < n; ++s) {
      if (target[static_cast<std::size_t>(s)]) continue;
      double v = 0.0;
      for (int t = 0; t < n; ++t) v += p[static_cast<std::size_t>(s)][static_cast<std::size_t>(t)] * out[static_cast<std::size_t>(t)];
      next[static_cast<std::size_t>(s)] = v;
    }
    out = std::move(next);
  }
}

}  // namespace

TEST_CASE("random 3-state parity processes match the policy-enumeration oracle") {
  Rng rng(8101);
  double worst = 0.0;
  for (int rep = 0; rep < 40; ++rep) {
    DecisionProcess dp;
    dp.n_states = 3;
    dp.initial = 0;
    dp.kind = ValKind::ParityState;
    dp.actions.resize(3);
    dp.state_priority.resize(3);
    for (int s = 0; s < 3; ++s) {
      dp.state_priority[static_cast<std::size_t>(s)] = static_cast<int>(rng.next_below(3));
      for (int a = 0; a < 2; ++a) {
        // two-successor branches over random targets, probabilities off 0
        int t1 = static_cast<int>(rng.next_below(3));
        int t2 = static_cast<int>(rng.next_below(3));
        double p = 0.15 + 0.7 * rng.next_double();
        std::vector<Branch> branches;
        if (t1 == t2) {
          branches.push_back({1.0, t1, false, 0.0});
        } else {
          branches.push_back({p, t1, false, 0.0});
          branches.push_back({1.0 - p, t2, false, 0.0});
        }
        dp.actions[static_cast<std::size_t>(s)].push_back(std::move(branches));
      }
    }
    MdpSolution sol = solve_mdp(dp);
    // exhaustive positional policies
    std::vector<double> best(3, 0.0);
    for (int a0 = 0; a0 < 2; ++a0)
      for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2) {
          std::vector<double> v;
          oracle_parity_policy(dp, {a0, a1, a2}, v);
          for (int s = 0; s < 3; ++s) best[static_cast<std::size_t>(s)] = std::max(best[static_cast<std::size_t>(s)], v[static_cast<std::size_t>(s)]);
        }
    for (int s = 0; s < 3; ++s) {
      double err = std::fabs(sol.value[static_cast<std::size_t>(s)] - best[static_cast<std::size_t>(s)]);
      worst = std::max(worst, err);
      CHECK(err <= 1e-2);
    }
  }
  MESSAGE("worst parity err ", worst);
}

TEST_CASE("random 2-state processes match the finite-horizon oracle") {
  Rng rng(7001);
  double worst_b = 0.0, worst_m = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    SUBCASE(("buchi " + std::to_string(rep)).c_str()) {}
    DecisionProcess db = two_state_random(ValKind::BuchiEdge, rng);
    double ob[2];
    oracle_values(db, false, ob);
    MdpSolution sb = solve_mdp(db);
    for (int s = 0; s < 2; ++s) {
      CHECK(std::fabs(sb.value[static_cast<std::size_t>(s)] - ob[s]) <= 1e-2);
      worst_b = std::max(worst_b, std::fabs(sb.value[static_cast<std::size_t>(s)] - ob[s]));
    }

    DecisionProcess dm = two_state_random(ValKind::LimsupMean, rng);
    double om[2];
    oracle_values(dm, true, om);
    MdpSolution sm = solve_mdp(dm);
    for (int s = 0; s < 2; ++s) {
      CHECK(std::fabs(sm.value[static_cast<std::size_t>(s)] - om[s]) <= 1e-2);
      worst_m = std::max(worst_m, std::fabs(sm.value[static_cast<std::size_t>(s)] - om[s]));
    }
  }
  MESSAGE("worst buchi err ", worst_b, ", worst mean err ", worst_m);
}
