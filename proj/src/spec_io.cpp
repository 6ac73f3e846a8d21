#include "tailgame/spec_io.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace tailgame {

using nlohmann::json;

namespace {

std::size_t uz(int i) { return static_cast<std::size_t>(i); }

double as_number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_dec(j.get<std::string>());
  throw ValidationError(where + ": expected a number or decimal string");
}

void check_fields(const json& j, std::initializer_list<const char*> allowed,
                  bool strict, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* f : allowed)
      if (it.key() == f) known = true;
    if (known) continue;
    if (strict)
      throw ValidationError(where + ": unknown field '" + it.key() + "'");
    std::cerr << "warning: " << where << ": ignoring unknown field '" << it.key()
              << "'\n";
  }
}

Action label_index(const std::vector<std::string>& labels, const std::string& s,
                   const std::string& where) {
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == s) return static_cast<Action>(k);
  throw ValidationError(where + ": unknown action label '" + s + "'");
}

// ---------------------------------------------------------------------------
// objective descriptors
// ---------------------------------------------------------------------------

std::shared_ptr<const PayoffAutomaton> parse_table_objective(
    const json& j, const std::string& kind,
    const std::vector<std::vector<std::string>>& actions, bool strict,
    const std::string& where) {
  check_fields(j,
               {"kind", "support", "states", "initial", "edges", "priorities"},
               strict, where);
  AutomatonBuild b;
  b.name = kind;
  if (!j.contains("support")) throw ValidationError(where + ": missing support");
  for (const auto& p : j.at("support")) b.support.push_back(p.get<int>());
  for (PlayerId p : b.support) {
    if (p < 0 || p >= static_cast<int>(actions.size()))
      throw ValidationError(where + ": support player out of range");
    b.support_sizes.push_back(static_cast<int>(actions[uz(p)].size()));
  }
  b.n_states = j.value("states", 1);
  b.initial = j.value("initial", 0);

  if (kind == "buchi")
    b.kind = ValKind::BuchiEdge;
  else if (kind == "cobuchi")
    b.kind = ValKind::CoBuchiEdge;
  else if (kind == "parity")
    b.kind = ValKind::ParityState;
  else
    b.kind = ValKind::LimsupMean;

  int n_w = 1;
  for (int s : b.support_sizes) n_w *= s;
  const std::size_t table = uz(b.n_states) * uz(n_w);
  b.trans.assign(table, -1);
  if (b.kind == ValKind::BuchiEdge || b.kind == ValKind::CoBuchiEdge)
    b.edge_flag.assign(table, 0);
  if (b.kind == ValKind::LimsupMean) b.edge_weight.assign(table, 0.0);

  if (!j.contains("edges")) throw ValidationError(where + ": missing edges");
  for (const auto& e : j.at("edges")) {
    check_fields(e, {"from", "on", "to", "accept", "reject", "weight"}, strict,
                 where + " edge");
    int from = e.at("from").get<int>();
    int to = e.at("to").get<int>();
    if (from < 0 || from >= b.n_states || to < 0 || to >= b.n_states)
      throw ValidationError(where + ": edge state out of range");
    const auto& on = e.at("on");
    if (static_cast<std::size_t>(on.size()) != b.support.size())
      throw ValidationError(where + ": edge 'on' arity mismatch");
    // expand wildcards over the window alphabet
    std::vector<std::vector<Action>> choices;
    for (std::size_t k = 0; k < b.support.size(); ++k) {
      const auto& labels = actions[uz(b.support[k])];
      std::string s = on[k].get<std::string>();
      std::vector<Action> c;
      if (s == "*")
        for (std::size_t a = 0; a < labels.size(); ++a) c.push_back(static_cast<Action>(a));
      else
        c.push_back(label_index(labels, s, where));
      choices.push_back(std::move(c));
    }
    std::vector<std::size_t> pick(b.support.size(), 0);
    while (true) {
      int w = 0;
      for (std::size_t k = 0; k < b.support.size(); ++k)
        w = w * b.support_sizes[k] + choices[k][pick[k]];
      std::size_t slot = uz(from) * uz(n_w) + uz(w);
      if (b.trans[slot] != -1)
        throw ValidationError(where + ": duplicate edge for state " +
                              std::to_string(from) + ", action " + std::to_string(w));
      b.trans[slot] = to;
      if (b.kind == ValKind::BuchiEdge && e.value("accept", false)) b.edge_flag[slot] = 1;
      if (b.kind == ValKind::CoBuchiEdge && e.value("reject", false)) b.edge_flag[slot] = 1;
      if (b.kind == ValKind::LimsupMean)
        b.edge_weight[slot] = e.contains("weight") ? as_number(e.at("weight"), where) : 0.0;
      std::size_t k = 0;
      for (; k < pick.size(); ++k) {
        if (++pick[k] < choices[k].size()) break;
        pick[k] = 0;
      }
      if (k == pick.size()) break;
    }
  }
  for (std::size_t slot = 0; slot < table; ++slot)
    if (b.trans[slot] == -1)
      throw ValidationError(where + ": transition table incomplete (state " +
                            std::to_string(slot / uz(n_w)) + ", action " +
                            std::to_string(slot % uz(n_w)) + ")");
  if (b.kind == ValKind::ParityState) {
    if (!j.contains("priorities"))
      throw ValidationError(where + ": parity objective needs priorities");
    for (const auto& p : j.at("priorities")) b.state_priority.push_back(p.get<int>());
    if (static_cast<int>(b.state_priority.size()) != b.n_states)
      throw ValidationError(where + ": need one priority per state");
  }
  return make_automaton(std::move(b));
}

std::shared_ptr<const PayoffAutomaton> parse_objective(
    const json& j, PlayerId player, const std::vector<std::vector<std::string>>& actions,
    Action tail_default, bool strict) {
  std::string where = "objective of player " + std::to_string(player);
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  std::string kind = j.value("kind", "");
  if (kind == "special") {
    check_fields(j, {"kind", "name", "players", "player"}, strict, where);
    std::string name = j.value("name", "");
    if (name == "voorneveld-ev") {
      PlayerId who = j.value("player", player);
      return make_voorneveld_ev(who, PopulationStatistic{tail_default});
    }
    if (name == "matching-pennies-io" || name == "matching-pennies-fin") {
      PlayerId row = 0, col = 1;
      if (j.contains("players")) {
        row = j.at("players").at(0).get<int>();
        col = j.at("players").at(1).get<int>();
      }
      return name == "matching-pennies-io" ? make_matching_pennies_io(row, col)
                                           : make_matching_pennies_fin(row, col);
    }
    if (name == "zeta-capped") return make_zeta_capped(j.value("player", player));
    if (name == "even-position-ones-finite")
      return make_even_position_cobuchi(j.value("player", player));
    throw ValidationError(where + ": unknown special objective '" + name + "'");
  }
  if (kind == "buchi" || kind == "cobuchi" || kind == "parity" ||
      kind == "limsup-mean")
    return parse_table_objective(j, kind, actions, strict, where);
  throw ValidationError(where + ": unknown objective kind '" + kind + "'");
}

}  // namespace

// ---------------------------------------------------------------------------
// spec files
// ---------------------------------------------------------------------------

GameSpec parse_spec_text(const std::string& text, bool strict) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("spec syntax error at byte " + std::to_string(e.byte) +
                          ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("spec must be a JSON object");
  check_fields(j,
               {"version", "n_players", "actions", "defaults", "tail_default",
                "eps", "objectives"},
               strict, "spec");

  int version = j.value("version", 1);
  if (version != 1) throw ValidationError("unsupported spec version");
  if (!j.contains("n_players")) throw ValidationError("spec: missing n_players");
  int n = j.at("n_players").get<int>();
  if (n < 1) throw ValidationError("spec: n_players must be >= 1");

  // actions: uniform list of labels, or one list per player
  if (!j.contains("actions")) throw ValidationError("spec: missing actions");
  const json& ja = j.at("actions");
  std::vector<std::vector<std::string>> actions;
  if (ja.is_array() && !ja.empty() && ja.front().is_string()) {
    std::vector<std::string> labels;
    for (const auto& s : ja) labels.push_back(s.get<std::string>());
    actions.assign(uz(n), labels);
  } else if (ja.is_array()) {
    for (const auto& row : ja) {
      std::vector<std::string> labels;
      for (const auto& s : row) labels.push_back(s.get<std::string>());
      actions.push_back(std::move(labels));
    }
    if (static_cast<int>(actions.size()) != n)
      throw ValidationError("spec: need one action list per player");
  } else {
    throw ValidationError("spec: actions must be a list");
  }

  // defaults: uniform label or per player
  std::vector<Action> defaults(uz(n), 0);
  if (j.contains("defaults")) {
    const json& jd = j.at("defaults");
    if (jd.is_string()) {
      for (int i = 0; i < n; ++i)
        defaults[uz(i)] = label_index(actions[uz(i)], jd.get<std::string>(),
                                      "defaults");
    } else {
      if (static_cast<int>(jd.size()) != n)
        throw ValidationError("spec: need one default per player");
      for (int i = 0; i < n; ++i)
        defaults[uz(i)] =
            label_index(actions[uz(i)], jd[uz(i)].get<std::string>(), "defaults");
    }
  }

  Action tail_default = 0;
  if (j.contains("tail_default"))
    tail_default = label_index(actions[0], j.at("tail_default").get<std::string>(),
                               "tail_default");

  std::vector<double> eps(uz(n), 0.05);
  if (j.contains("eps")) {
    const json& je = j.at("eps");
    if (je.is_array()) {
      if (static_cast<int>(je.size()) != n)
        throw ValidationError("spec: need one eps per player");
      for (int i = 0; i < n; ++i) eps[uz(i)] = as_number(je[uz(i)], "eps");
    } else {
      double e = as_number(je, "eps");
      eps.assign(uz(n), e);
    }
  }

  std::vector<std::shared_ptr<const PayoffAutomaton>> objectives;
  if (j.contains("objectives")) {
    const json& jo = j.at("objectives");
    if (jo.is_array()) {
      if (static_cast<int>(jo.size()) != n)
        throw ValidationError("spec: need one objective per player");
      for (int i = 0; i < n; ++i)
        objectives.push_back(parse_objective(jo[uz(i)], i, actions, tail_default, strict));
    } else {
      for (int i = 0; i < n; ++i)
        objectives.push_back(parse_objective(jo, i, actions, tail_default, strict));
    }
  }

  return make_game(n, std::move(actions), std::move(defaults), std::move(eps),
                   std::move(objectives), tail_default);
}

GameSpec load_spec_file(const std::string& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spec file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec_text(ss.str(), strict);
}

// ---------------------------------------------------------------------------
// certificates
// ---------------------------------------------------------------------------

namespace {

json play_to_json(const LassoPlay& play, const GameSpec& spec) {
  auto encode = [&](const History& h) {
    json out = json::array();
    for (const auto& a : h) {
      json row = json::array();
      for (int i = 0; i < spec.n_players; ++i) row.push_back(spec.label(i, a[i]));
      out.push_back(std::move(row));
    }
    return out;
  };
  return json{{"prefix", encode(play.prefix)}, {"cycle", encode(play.cycle)}};
}

History history_from_json(const json& j, const GameSpec& spec,
                          const std::string& where) {
  History h;
  for (const auto& row : j) {
    if (static_cast<int>(row.size()) != spec.n_players)
      throw ValidationError(where + ": joint action arity mismatch");
    JointAction a(std::vector<Action>(uz(spec.n_players), 0));
    for (int i = 0; i < spec.n_players; ++i)
      a[i] = label_index(spec.action_labels[uz(i)], row[uz(i)].get<std::string>(),
                         where);
    h.push_back(std::move(a));
  }
  return h;
}

json strategy_to_json(const StationaryStrategy& s) {
  json out;
  out["window"] = s.window;
  out["window_sizes"] = s.window_sizes;
  out["product_exact"] = s.product_exact;
  json states = json::array();
  for (const auto& mixes : s.mixes) {
    json row = json::array();
    for (const auto& mix : mixes) {
      json p = json::array();
      for (double v : mix.prob) p.push_back(to_dec12(v));
      row.push_back(std::move(p));
    }
    states.push_back(std::move(row));
  }
  out["states"] = std::move(states);
  return out;
}

StationaryStrategy strategy_from_json(const json& j) {
  StationaryStrategy s;
  for (const auto& w : j.at("window")) s.window.push_back(w.get<int>());
  for (const auto& w : j.at("window_sizes")) s.window_sizes.push_back(w.get<int>());
  s.product_exact = j.value("product_exact", true);
  for (const auto& row : j.at("states")) {
    std::vector<MixedAction> mixes;
    for (const auto& p : row) {
      std::vector<double> probs;
      double total = 0.0;
      std::size_t arg = 0;
      for (const auto& v : p) {
        probs.push_back(as_number(v, "strategy"));
        total += probs.back();
        if (probs.back() > probs[arg]) arg = probs.size() - 1;
      }
      if (total <= 0.0) throw ValidationError("strategy row without mass");
      // 12-digit decimals can drift by a few ulps per entry; renormalize
      for (double& v : probs) v /= total;
      double t2 = 0.0;
      for (double v : probs) t2 += v;
      probs[arg] += 1.0 - t2;
      mixes.push_back(MixedAction(std::move(probs)));
    }
    s.mixes.push_back(std::move(mixes));
  }
  return s;
}

}  // namespace

std::string certificate_to_json(const EquilibriumCertificate& cert,
                                const GameSpec& spec) {
  json j;
  j["version"] = 1;
  j["accepted"] = cert.accepted;
  j["play"] = play_to_json(cert.play, spec);
  json players = json::array();
  for (const auto& a : cert.players) {
    json row;
    row["id"] = a.id;
    row["payoff"] = to_dec12(a.payoff);
    row["target"] = to_dec12(a.target);
    row["eps"] = to_dec12(a.eps);
    row["audit_value"] = to_dec12(a.best_response_value);
    row["margin"] = to_dec12(a.margin);
    players.push_back(std::move(row));
  }
  j["players"] = std::move(players);
  json punishments = json::array();
  for (const auto& p : cert.punishments) punishments.push_back(strategy_to_json(p));
  j["punishments"] = std::move(punishments);
  // thread count deliberately omitted: certificates must be byte-identical
  // across --threads settings
  j["meta"] = json{{"seed", std::to_string(cert.seed)},
                   {"audit_tol", to_dec12(cert.audit_tol)},
                   {"tol_inner", to_dec12(cert.tol_inner)},
                   {"tol_outer", to_dec12(cert.tol_outer)},
                   {"solver_iters", std::to_string(cert.solver_iterations)}};
  return j.dump(2) + "\n";
}

EquilibriumCertificate certificate_from_json(const std::string& text,
                                             const GameSpec& spec) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("certificate syntax error at byte " +
                          std::to_string(e.byte) + ": " + e.what());
  }
  EquilibriumCertificate cert;
  cert.accepted = j.value("accepted", false);
  cert.play = LassoPlay(history_from_json(j.at("play").at("prefix"), spec, "play"),
                        history_from_json(j.at("play").at("cycle"), spec, "play"));
  for (const auto& row : j.at("players")) {
    PlayerAudit a;
    a.id = row.at("id").get<int>();
    a.payoff = as_number(row.at("payoff"), "players");
    a.target = as_number(row.at("target"), "players");
    a.eps = as_number(row.at("eps"), "players");
    a.best_response_value = as_number(row.at("audit_value"), "players");
    a.margin = as_number(row.at("margin"), "players");
    cert.players.push_back(a);
  }
  for (const auto& p : j.at("punishments"))
    cert.punishments.push_back(strategy_from_json(p));
  if (j.contains("meta")) {
    const json& m = j.at("meta");
    if (m.contains("seed")) cert.seed = std::stoull(m.at("seed").get<std::string>());
    if (m.contains("audit_tol")) cert.audit_tol = as_number(m.at("audit_tol"), "meta");
    if (m.contains("tol_inner")) cert.tol_inner = as_number(m.at("tol_inner"), "meta");
    if (m.contains("tol_outer")) cert.tol_outer = as_number(m.at("tol_outer"), "meta");
    if (m.contains("solver_iters"))
      cert.solver_iterations = std::stoll(m.at("solver_iters").get<std::string>());
  }
  return cert;
}

// ---------------------------------------------------------------------------
// auxiliary runs
// ---------------------------------------------------------------------------

std::string mrun_to_json(const MRun& run) {
  json j;
  json fns = json::array();
  for (const auto& f : run.functions) {
    json row;
    row["window"] = f.window;
    row["sizes"] = f.sizes;
    json vals = json::array();
    for (double v : f.values) vals.push_back(to_dec12(v));
    row["values"] = std::move(vals);
    fns.push_back(std::move(row));
  }
  j["functions"] = std::move(fns);
  json moves = json::array();
  for (const auto& a : run.moves) moves.push_back(a.a);
  j["moves"] = std::move(moves);
  return j.dump(2) + "\n";
}

MRun mrun_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("run syntax error at byte " + std::to_string(e.byte) +
                          ": " + e.what());
  }
  MRun run;
  for (const auto& row : j.at("functions")) {
    OneShotFn f;
    for (const auto& w : row.at("window")) f.window.push_back(w.get<int>());
    for (const auto& s : row.at("sizes")) f.sizes.push_back(s.get<int>());
    for (const auto& v : row.at("values")) f.values.push_back(as_number(v, "run"));
    f.validate();
    run.functions.push_back(std::move(f));
  }
  for (const auto& m : j.at("moves")) {
    std::vector<Action> a;
    for (const auto& v : m) a.push_back(v.get<int>());
    run.moves.push_back(JointAction(std::move(a)));
  }
  return run;
}

NormalFormGame game_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("game syntax error at byte " + std::to_string(e.byte) +
                          ": " + e.what());
  }
  NormalFormGame g;
  int players = j.at("players").get<int>();
  const json& ja = j.at("actions");
  for (int i = 0; i < players; ++i) {
    g.players.push_back(i);
    g.n_actions.push_back(ja.is_array() ? ja[uz(i)].get<int>() : ja.get<int>());
  }
  for (const auto& tensor : j.at("tensors")) {
    std::vector<double> t;
    for (const auto& v : tensor) t.push_back(as_number(v, "tensors"));
    g.payoffs.push_back(std::move(t));
  }
  g.validate();
  return g;
}

}  // namespace tailgame
