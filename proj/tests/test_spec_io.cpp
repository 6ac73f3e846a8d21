#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "tailgame/spec_io.hpp"

using namespace tailgame;

namespace {
std::string data_path(const std::string& name) {
  return std::string(TG_DATA_DIR) + "/" + name;
}
}  // namespace

TEST_CASE("bundled spec files") {
  SUBCASE("minority game file: 20 players, binary actions") {
    GameSpec g = load_spec_file(data_path("voorneveld.json"));
    CHECK(g.n_players == 20);
    CHECK(g.n_actions(7) == 2);
    CHECK(g.defaults[7] == 0);
    CHECK(g.eps[7] == 0.05);
    REQUIRE(g.objectives.size() == 20);
    CHECK(g.objectives[7]->kind == ValKind::CoBuchiEdge);
    // each player's evaluator reads only that player
    CHECK(g.objectives[7]->support == std::vector<PlayerId>{7});
  }
  SUBCASE("matching pennies file: diagonal objective pair") {
    GameSpec g = load_spec_file(data_path("matching_pennies.json"));
    CHECK(g.n_players == 2);
    CHECK(g.label(0, 0) == "T");
    CHECK(g.label(1, 1) == "R");
    CHECK(g.objectives[0]->kind == ValKind::BuchiEdge);
    CHECK(g.objectives[1]->kind == ValKind::CoBuchiEdge);
    // player 0's objective pays 1 on the diagonal cycle
    CHECK(evaluate_lasso(*g.objectives[0], LassoPlay({}, {JointAction{0, 0}})) == 1.0);
    CHECK(evaluate_lasso(*g.objectives[1], LassoPlay({}, {JointAction{0, 0}})) == 0.0);
  }
}

TEST_CASE("spec parsing diagnostics") {
  SUBCASE("truncated file reports the byte position") {
    try {
      parse_spec_text("{\"n_players\": 2, \"actions\": [\"0\",");
      FAIL("expected a throw");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
  }
  SUBCASE("unknown fields rejected in strict mode, tolerated in lax mode") {
    std::string text = R"({"n_players": 1, "actions": ["0","1"], "bogus": 3})";
    CHECK_THROWS_AS(parse_spec_text(text, true), ValidationError);
    GameSpec g = parse_spec_text(text, false);
    CHECK(g.n_players == 1);
  }
  SUBCASE("invariant violations delegate to the game validator") {
    std::string text = R"({"n_players": 1, "actions": ["0","1"], "defaults": "2"})";
    CHECK_THROWS_AS(parse_spec_text(text, true), ValidationError);
    std::string text2 = R"({"n_players": 1, "actions": ["0","1"], "eps": 0})";
    CHECK_THROWS_AS(parse_spec_text(text2, true), ValidationError);
  }
  SUBCASE("decimal strings are accepted for numbers") {
    GameSpec g = parse_spec_text(
        R"({"n_players": 1, "actions": ["0","1"], "eps": "0.125"})");
    CHECK(g.eps[0] == 0.125);
  }
}

TEST_CASE("table-driven objectives with wildcards") {
  std::string text = R"({
    "n_players": 2,
    "actions": [["T","B"],["L","R"]],
    "eps": 0.1,
    "objectives": {
      "kind": "buchi",
      "support": [0, 1],
      "states": 1,
      "edges": [
        {"from": 0, "on": ["T","L"], "to": 0, "accept": true},
        {"from": 0, "on": ["B","R"], "to": 0, "accept": true},
        {"from": 0, "on": ["T","R"], "to": 0},
        {"from": 0, "on": ["B","L"], "to": 0}
      ]
    }
  })";
  GameSpec g = parse_spec_text(text);
  CHECK(evaluate_lasso(*g.objectives[0], LassoPlay({}, {JointAction{0, 0}})) == 1.0);
  CHECK(evaluate_lasso(*g.objectives[0], LassoPlay({}, {JointAction{0, 1}})) == 0.0);

  SUBCASE("wildcard covers a whole coordinate") {
    std::string wc = R"({
      "n_players": 2,
      "actions": [["T","B"],["L","R"]],
      "eps": 0.1,
      "objectives": {
        "kind": "limsup-mean",
        "support": [0, 1],
        "states": 1,
        "edges": [
          {"from": 0, "on": ["T","*"], "to": 0, "weight": 1},
          {"from": 0, "on": ["B","*"], "to": 0, "weight": 0}
        ]
      }
    })";
    GameSpec g2 = parse_spec_text(wc);
    CHECK(evaluate_lasso(*g2.objectives[0],
                         LassoPlay({}, {JointAction{0, 1}, JointAction{1, 0}})) == 0.5);
  }
  SUBCASE("incomplete transition tables are rejected") {
    std::string bad = R"({
      "n_players": 1,
      "actions": ["0","1"],
      "objectives": {
        "kind": "buchi", "support": [0], "states": 1,
        "edges": [{"from": 0, "on": ["0"], "to": 0}]
      }
    })";
    CHECK_THROWS_AS(parse_spec_text(bad), ValidationError);
  }
}

TEST_CASE("certificate round trip") {
  GameSpec spec = load_spec_file(data_path("coordination.json"));
  EquilibriumOptions opt;
  EquilibriumResult r = build_equilibrium(spec, opt);
  REQUIRE(r.accepted);

  std::string json1 = certificate_to_json(r.certificate, spec);
  EquilibriumCertificate back = certificate_from_json(json1, spec);
  CHECK(back.accepted == r.certificate.accepted);
  CHECK(back.players.size() == r.certificate.players.size());
  CHECK(back.play.cycle.size() == r.certificate.play.cycle.size());
  // serialization is stable
  CHECK(certificate_to_json(back, spec) == json1);

  SUBCASE("re-audit of the parsed certificate accepts") {
    std::vector<double> targets;
    for (const auto& p : back.players) targets.push_back(p.target);
    EquilibriumCertificate again = audit_equilibrium(
        spec, back.play, targets, back.punishments, back.audit_tol);
    CHECK(again.accepted);
  }
}

TEST_CASE("strategies with repeating decimals survive the round trip") {
  // thirds serialize to 12 significant digits; the parsed sum may miss 1 by
  // more than the mixed-action tolerance unless renormalized
  GameSpec spec = make_game(2, {{"a", "b", "c"}, {"a", "b", "c"}}, {0, 0},
                            {0.1, 0.1}, {});
  EquilibriumCertificate cert;
  cert.play = LassoPlay({}, {JointAction{0, 0}});
  cert.accepted = true;
  StationaryStrategy s;
  s.window = {1};
  s.window_sizes = {3};
  s.mixes = {{MixedAction({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0})}};
  cert.punishments = {s, StationaryStrategy{}};
  PlayerAudit a;
  cert.players = {a, a};
  std::string text = certificate_to_json(cert, spec);
  EquilibriumCertificate back = certificate_from_json(text, spec);
  const MixedAction& mix = back.punishments[0].mixes[0][0];
  double sum = mix[0] + mix[1] + mix[2];
  CHECK(sum == 1.0);
  CHECK(mix[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("auxiliary run round trip") {
  auto ledger = d_matching_pennies(0.8);
  History play{JointAction{0, 0}, JointAction{0, 1}, JointAction{1, 1}};
  MRun run = extract_m_run(ledger, play);
  std::string text = mrun_to_json(run);
  MRun back = mrun_from_json(text);
  REQUIRE(back.functions.size() == run.functions.size());
  REQUIRE(back.moves.size() == run.moves.size());
  MRunVerdict v = validate_m_run(back, 0.8, 0);
  CHECK(v.legal);
}

TEST_CASE("normal-form game files") {
  std::string text = R"({
    "players": 2,
    "actions": [2, 2],
    "tensors": [["1","0","0","1"], ["0","1","1","0"]]
  })";
  NormalFormGame g = game_from_json(text);
  CHECK(g.n_players() == 2);
  CHECK(minmax_classical(g, 0).value == doctest::Approx(0.5).epsilon(1e-9));
}
