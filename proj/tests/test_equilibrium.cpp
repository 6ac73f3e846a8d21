#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tailgame/equilibrium.hpp"

using namespace tailgame;

namespace {

GameSpec voorneveld_spec(int n, double eps = 0.05) {
  std::vector<std::vector<std::string>> labels(
      static_cast<std::size_t>(n), std::vector<std::string>{"0", "1"});
  std::vector<std::shared_ptr<const PayoffAutomaton>> objectives;
  for (int i = 0; i < n; ++i)
    objectives.push_back(make_voorneveld_ev(i, PopulationStatistic{0}));
  return make_game(n, labels, std::vector<Action>(static_cast<std::size_t>(n), 0),
                   std::vector<double>(static_cast<std::size_t>(n), eps), objectives);
}

GameSpec coordination_spec(double eps = 0.05) {
  // both players want the diagonal infinitely often
  return make_game(2, {{"T", "B"}, {"L", "R"}}, {0, 0}, {eps, eps},
                   {make_matching_pennies_io(0, 1), make_matching_pennies_io(0, 1)});
}

std::vector<DLedger> voorneveld_ledgers(int n, double w = 0.5) {
  std::vector<DLedger> out;
  for (int i = 0; i < n; ++i)
    out.push_back(d_voorneveld(w, i, PopulationStatistic{0}));
  return out;
}

std::vector<DLedger> voorneveld_reward_ledgers(int n) {
  std::vector<DLedger> out;
  for (int i = 0; i < n; ++i)
    out.push_back(d_voorneveld_reward(i, PopulationStatistic{0}));
  return out;
}

bool is_staircase_play(const GameSpec& spec, const LassoPlay& p) {
  StaircaseSchedule sched{spec.n_players};
  for (std::size_t t = 0; t < p.prefix.size() + p.cycle.size(); ++t) {
    const JointAction& a = p.at(t);
    for (int i = 0; i < spec.n_players; ++i) {
      Action want = sched.is_active(i, static_cast<int>(t)) ? 1 : 0;
      if (a[i] != want) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("H_t^F bookkeeping") {
  GameSpec spec = voorneveld_spec(4);
  HFSet hf{&spec};

  CHECK(hf.cardinality(0) == 1.0);  // just the empty history
  CHECK(hf.branching(0) == 2.0);    // only player 0 is active
  CHECK(hf.branching(1) == 4.0);
  CHECK(hf.cardinality(2) == 8.0);

  CHECK(hf.contains({}));
  // stage 0: players 1.. must play the default
  CHECK(hf.contains({JointAction{1, 0, 0, 0}}));
  CHECK_FALSE(hf.contains({JointAction{1, 1, 0, 0}}));
  // stage 1: player 1 is active now
  CHECK(hf.contains({JointAction{1, 0, 0, 0}, JointAction{0, 1, 0, 0}}));
  CHECK_FALSE(hf.contains({JointAction{1, 0, 0, 0}, JointAction{0, 1, 1, 0}}));
}

TEST_CASE("auxiliary one-shot games G(h)") {
  SUBCASE("t = 0 is a single-player decision problem") {
    GameSpec spec = voorneveld_spec(3);
    auto ledgers = voorneveld_ledgers(3);
    std::vector<const DLedger*> lp{&ledgers[0], &ledgers[1], &ledgers[2]};
    GOfH g = build_Gh(lp, {}, spec);
    CHECK(g.active.size() == 1);
    GhSolution sol = solve_Gh(g, spec);
    CHECK(sol.separable);
    CHECK(sol.max_regret == 0.0);
    CHECK(sol.profile[0][1] == 1.0);  // playing 1 wins against the zero tail
  }

  SUBCASE("matching-pennies d functions give the stepped stage matrix at t = 1") {
    GameSpec spec = coordination_spec();
    double w = 0.6;
    std::vector<DLedger> ledgers{d_matching_pennies(w, 0, 1),
                                 d_matching_pennies(w, 0, 1)};
    std::vector<const DLedger*> lp{&ledgers[0], &ledgers[1]};
    History h{JointAction{0, 0}};  // diagonal: d moves to half_step_up(w)
    GOfH g = build_Gh(lp, h, spec);
    REQUIRE(g.active.size() == 2);
    double d1 = half_step_up(w);
    CHECK(g.payoff(0, {0, 0}, spec) == doctest::Approx(half_step_up(d1)));
    CHECK(g.payoff(0, {0, 1}, spec) == doctest::Approx(half_step_down(d1)));

    GhSolution sol = solve_Gh(g, spec);
    CHECK_FALSE(sol.separable);
    CHECK(sol.max_regret <= 1e-6);
    // the value property makes the stage profile satisfy the Nash payoff bound
    CHECK(nash_value_gap(g, sol, spec) <= 1e-6);
  }

  SUBCASE("three-player separable game satisfies the value bound") {
    GameSpec spec = voorneveld_spec(5);
    auto ledgers = voorneveld_reward_ledgers(5);
    std::vector<const DLedger*> lp;
    for (auto& l : ledgers) lp.push_back(&l);
    History h{JointAction{1, 0, 0, 0, 0}, JointAction{1, 1, 0, 0, 0}};
    GOfH g = build_Gh(lp, h, spec);
    CHECK(g.active.size() == 3);
    GhSolution sol = solve_Gh(g, spec);
    CHECK(sol.max_regret <= 1e-3);
    CHECK(nash_value_gap(g, sol, spec) <= 1e-3 + 1e-9);
  }
}

TEST_CASE("staircase profile plays the equilibrium of each G(h)") {
  const int n = 6;
  GameSpec spec = voorneveld_spec(n);
  auto sigma = staircase_profile(spec, voorneveld_reward_ledgers(n));

  // on the H^F path, every activated player plays 1, the rest default
  auto walker = sigma->walk();
  StaircaseSchedule sched{n};
  for (int t = 0; t < 12; ++t) {
    StagePlan plan = walker->plan();
    CHECK(plan.randomizers.empty());
    JointAction a(plan.pure);
    for (int i = 0; i < n; ++i)
      CHECK(a[i] == (sched.is_active(i, t) ? 1 : 0));
    walker->step(a);
  }

  SUBCASE("off the staircase set everyone defaults") {
    auto w2 = sigma->walk();
    // player 3 deviates from its default in stage 0
    w2->step(JointAction{1, 0, 0, 1, 0, 0});
    StagePlan plan = w2->plan();
    CHECK(plan.randomizers.empty());
    for (int i = 0; i < n; ++i) CHECK(plan.pure[static_cast<std::size_t>(i)] == 0);
  }
}

TEST_CASE("target play search") {
  SUBCASE("minority game finds the staircase lasso") {
    GameSpec spec = voorneveld_spec(20);
    TargetSearchResult r =
        find_target_play(spec, std::vector<double>(20, 1.0));
    REQUIRE(r.found);
    CHECK(is_staircase_play(spec, r.play));
    for (double f : r.payoffs) CHECK(f == 1.0);
  }

  SUBCASE("coordination variant finds a diagonal cycle") {
    GameSpec spec = coordination_spec();
    TargetSearchResult r = find_target_play(spec, {1.0, 1.0});
    REQUIRE(r.found);
    CHECK(r.payoffs[0] == 1.0);
    CHECK(r.payoffs[1] == 1.0);
  }

  SUBCASE("conflicting objectives are reported infeasible at the bounds") {
    GameSpec spec = make_game(
        2, {{"0", "1"}, {"0", "1"}}, {0, 0}, {0.05, 0.05},
        {make_matching_pennies_io(0, 1), make_matching_pennies_fin(0, 1)});
    TargetSearchResult r = find_target_play(spec, {1.0, 1.0}, 4);
    CHECK_FALSE(r.found);
    CHECK(r.exhaustive);
    CHECK(r.failure == "infeasible-at-bounds");
    // each objective is individually attainable
    CHECK(r.best_individual[0] == 1.0);
    CHECK(r.best_individual[1] == 1.0);
  }
}

TEST_CASE("grim trigger composite profile") {
  GameSpec spec = coordination_spec();
  std::vector<StationaryStrategy> punishments;
  for (int i = 0; i < 2; ++i)
    punishments.push_back(punishment_profile(make_concurrent_game(spec, i)).strategy);
  GrimTrigger trigger =
      assemble_grim_trigger(spec, LassoPlay({}, {JointAction{0, 0}}), punishments);
  auto grim = grim_trigger_profile(spec, trigger);

  SUBCASE("no deviation reproduces the play") {
    SampledPlay sp = sample_play(*grim, 20, 5);
    CHECK(sp.probability == 1.0);
    for (const auto& a : sp.history) CHECK(a == JointAction{0, 0});
  }

  SUBCASE("deviation at stage 3 switches to punishment at stage 4") {
    auto w = grim->walk();
    for (int t = 0; t < 3; ++t) w->step(JointAction{0, 0});
    CHECK(w->plan().randomizers.empty());
    w->step(JointAction{1, 0});  // player 0 deviates at stage 3
    StagePlan plan = w->plan();  // stage 4: punish player 0
    REQUIRE(plan.randomizers.size() == 1);
    CHECK(plan.randomizers[0].first == 1);  // the window opponent randomizes
  }

  SUBCASE("simultaneous deviations punish the lowest index") {
    auto w = grim->walk();
    w->step(JointAction{1, 1});  // both deviate at stage 0
    StagePlan plan = w->plan();
    // punishing player 0: player 1 is the active punisher
    REQUIRE(plan.randomizers.size() == 1);
    CHECK(plan.randomizers[0].first == 1);
  }
}

TEST_CASE("equilibrium pipeline") {
  SUBCASE("minority game, 20 players: accepted with unit payoffs") {
    GameSpec spec = voorneveld_spec(20);
    EquilibriumOptions opt;
    opt.seed = 7;
    EquilibriumResult r = build_equilibrium(spec, opt);
    REQUIRE(r.search.found);
    REQUIRE(r.accepted);
    CHECK(is_staircase_play(spec, r.certificate.play));
    for (const auto& a : r.certificate.players) {
      CHECK(a.payoff == 1.0);
      CHECK(a.margin >= 0.0);
    }
  }

  SUBCASE("coordination variant: accepted, payoff already maximal") {
    GameSpec spec = coordination_spec();
    EquilibriumOptions opt;
    EquilibriumResult r = build_equilibrium(spec, opt);
    REQUIRE(r.accepted);
    CHECK(r.certificate.players[0].payoff == 1.0);
    CHECK(r.certificate.players[1].payoff == 1.0);
  }

  SUBCASE("three players with a two-member punishment window") {
    // player 0 is rejected when their action equals the XOR of the others;
    // the others' objectives are trivially satisfied
    AutomatonBuild b;
    b.support = {0, 1, 2};
    b.support_sizes = {2, 2, 2};
    b.kind = ValKind::CoBuchiEdge;
    b.trans.assign(8, 0);
    b.edge_flag.resize(8);
    for (int w = 0; w < 8; ++w) {
      int a0 = w >> 2, a1 = (w >> 1) & 1, a2 = w & 1;
      b.edge_flag[static_cast<std::size_t>(w)] =
          static_cast<std::uint8_t>(a0 == (a1 ^ a2));
    }
    auto xor_trap = make_automaton(std::move(b));
    auto trivially_happy = [](PlayerId i) {
      AutomatonBuild c;
      c.support = {i};
      c.support_sizes = {2};
      c.kind = ValKind::BuchiEdge;
      c.trans = {0, 0};
      c.edge_flag = {1, 1};
      return make_automaton(std::move(c));
    };
    GameSpec spec = make_game(3, {{"0", "1"}, {"0", "1"}, {"0", "1"}}, {0, 0, 0},
                              {0.05, 0.05, 0.05},
                              {xor_trap, trivially_happy(1), trivially_happy(2)});
    EquilibriumOptions opt;
    EquilibriumResult r = build_equilibrium(spec, opt);
    REQUIRE(r.accepted);
    // player 0 is pinned at their punished value, the others at 1
    CHECK(r.certificate.players[0].payoff <= 1e-3);
    CHECK(r.certificate.players[0].best_response_value <= 1e-3 + 0.0501);
    CHECK(r.certificate.players[1].payoff == 1.0);
    CHECK(r.certificate.players[2].payoff == 1.0);
    for (const auto& a : r.certificate.players) CHECK(a.margin >= -1e-3);
  }

  SUBCASE("weak punishment is rejected with the deviating margin") {
    // player 0 wants (1,1) infinitely often; the target play never plays it
    AutomatonBuild b;
    b.support = {0, 1};
    b.support_sizes = {2, 2};
    b.kind = ValKind::BuchiEdge;
    b.trans = {0, 0, 0, 0};
    b.edge_flag = {0, 0, 0, 1};
    auto want11 = make_automaton(std::move(b));

    AutomatonBuild c;
    c.support = {0, 1};
    c.support_sizes = {2, 2};
    c.kind = ValKind::BuchiEdge;
    c.trans = {0, 0, 0, 0};
    c.edge_flag = {1, 1, 1, 1};  // trivially satisfied
    auto anything = make_automaton(std::move(c));

    GameSpec spec = make_game(2, {{"0", "1"}, {"0", "1"}}, {0, 0}, {0.1, 0.1},
                              {want11, anything});
    LassoPlay play({}, {JointAction{0, 0}});

    // proper punishment: the opponent holds action 0, so (1,1) never recurs
    StationaryStrategy proper;
    proper.window = {1};
    proper.window_sizes = {2};
    proper.mixes = {{MixedAction::pure(2, 0)}};
    StationaryStrategy trivial;  // punishment of player 1: empty window
    ConcurrentGame g1 = make_concurrent_game(spec, 1);
    trivial = punishment_profile(g1).strategy;

    EquilibriumCertificate ok =
        audit_equilibrium(spec, play, {0.0, 1.0}, {proper, trivial}, 1e-3);
    CHECK(ok.accepted);

    // weak punishment: the opponent plays 1 forever, handing (1,1) to the deviator
    StationaryStrategy weak;
    weak.window = {1};
    weak.window_sizes = {2};
    weak.mixes = {{MixedAction::pure(2, 1)}};
    EquilibriumCertificate bad =
        audit_equilibrium(spec, play, {0.0, 1.0}, {weak, trivial}, 1e-3);
    CHECK_FALSE(bad.accepted);
    CHECK(bad.players[0].margin < 0.0);
    CHECK(bad.players[0].best_response_value == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("statistical bound on the G(h)-equilibrium profile") {
  const int n = 6;
  GameSpec spec = voorneveld_spec(n);
  auto sigma = staircase_profile(spec, voorneveld_reward_ledgers(n));

  SUBCASE("minority pipeline reaches the target on every sampled play") {
    for (int i = 0; i < n; ++i) {
      LevyReport rep = levy_bound_check(spec, *sigma, i, 1.0, 2000, 30, 11);
      CHECK(rep.ok);
      CHECK(rep.fraction == 1.0);
    }
  }

  SUBCASE("at scale: 20 players, ten thousand samples") {
    GameSpec big = voorneveld_spec(20);
    auto sigma20 = staircase_profile(big, voorneveld_reward_ledgers(20));
    LevyReport rep = levy_bound_check(big, *sigma20, 19, 1.0, 10000, 50, 11);
    CHECK(rep.ok);
    CHECK(rep.fraction == 1.0);
  }

  SUBCASE("negative control: the all-defaults profile misses the target") {
    auto defaults = std::make_shared<FunctionProfile>(n, [&spec](const History&) {
      StagePlan plan;
      plan.pure = spec.defaults;
      return plan;
    });
    LevyReport rep = levy_bound_check(spec, *defaults, 0, 1.0, 500, 30, 11);
    CHECK_FALSE(rep.ok);
    CHECK(rep.fraction == 0.0);
  }

  SUBCASE("trivially satisfied objective reports fraction 1") {
    AutomatonBuild b;
    b.support = {0};
    b.support_sizes = {2};
    b.kind = ValKind::BuchiEdge;
    b.trans = {0, 0};
    b.edge_flag = {1, 1};
    GameSpec one = make_game(1, {{"0", "1"}}, {0}, {0.05},
                             {make_automaton(std::move(b))});
    auto pure = std::make_shared<FunctionProfile>(1, [](const History&) {
      StagePlan plan;
      plan.pure = {0};
      return plan;
    });
    LevyReport rep = levy_bound_check(one, *pure, 0, 1.0, 200, 20, 1);
    CHECK(rep.fraction == 1.0);
  }
}
