#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tailgame/equilibrium.hpp"
#include "tailgame/spec_io.hpp"

using namespace tailgame;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kRejected = 2;
constexpr int kInfeasible = 3;
constexpr int kInputError = 4;

int log_level() {
  const char* env = std::getenv("TAILGAME_LOG");
  if (!env) return 0;
  std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "info: " << msg << "\n";
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ValidationError("cannot write output file: " + out_path);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> parse_eps_list(const std::string& text, int n) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_dec(item));
  if (out.size() == 1) out.assign(static_cast<std::size_t>(n), out[0]);
  if (static_cast<int>(out.size()) != n)
    throw ValidationError("eps list must have one entry or one per player");
  for (double e : out)
    if (!(e > 0.0)) throw ValidationError("eps must be positive");
  return out;
}

GameSpec load_spec_with_eps(const std::string& path, const std::string& eps) {
  GameSpec spec = load_spec_file(path);
  if (!eps.empty()) spec.eps = parse_eps_list(eps, spec.n_players);
  return spec;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int run_minmax(const std::string& spec_path, int player, double tol,
               const std::string& out) {
  GameSpec spec = load_spec_file(spec_path);
  json report;
  json rows = json::array();
  for (int i = 0; i < spec.n_players; ++i) {
    if (player >= 0 && i != player) continue;
    ConcurrentGame g = make_concurrent_game(spec, i);
    ValueTable t = concurrent_value(g, 1e-6, tol > 0 ? tol : 1e-3);
    HistoryIndependenceReport h = history_independence_check(g, t, 1e-3);
    json row;
    row["player"] = i;
    json values = json::array();
    for (double v : t.value) values.push_back(to_dec12(v));
    row["values"] = std::move(values);
    row["iterations"] = t.iterations;
    row["residual"] = to_dec12(t.residual);
    row["converged"] = t.converged;
    row["history_independent"] = h.ok;
    row["spread"] = to_dec12(h.spread);
    rows.push_back(std::move(row));
    log_info("minmax of player " + std::to_string(i) + ": " +
             to_dec12(t.value[static_cast<std::size_t>(g.objective->initial)]));
  }
  report["minmax"] = std::move(rows);
  emit(out, report.dump(2) + "\n");
  return kOk;
}

int run_punish(const std::string& spec_path, int player, const std::string& out) {
  GameSpec spec = load_spec_file(spec_path);
  if (player < 0) throw ValidationError("punish needs --player");
  ConcurrentGame g = make_concurrent_game(spec, player);
  PunishmentResult p = punishment_profile(g);
  json report;
  report["player"] = player;
  report["guarantee"] = to_dec12(p.guarantee);
  json values = json::array();
  for (double v : p.table.value) values.push_back(to_dec12(v));
  report["values"] = std::move(values);
  report["product_exact"] = p.strategy.product_exact;
  json states = json::array();
  for (const auto& mixes : p.strategy.mixes) {
    json row = json::array();
    for (const auto& mix : mixes) {
      json probs = json::array();
      for (double v : mix.prob) probs.push_back(to_dec12(v));
      row.push_back(std::move(probs));
    }
    states.push_back(std::move(row));
  }
  report["strategy"] = std::move(states);
  report["window"] = p.strategy.window;
  emit(out, report.dump(2) + "\n");
  return kOk;
}

int run_bestresponse(const std::string& spec_path, const std::string& cert_path,
                     int player, const std::string& out) {
  GameSpec spec = load_spec_file(spec_path);
  if (player < 0) throw ValidationError("bestresponse needs --player");
  EquilibriumCertificate cert = certificate_from_json(slurp(cert_path), spec);
  ConcurrentGame g = make_concurrent_game(spec, player);
  BestResponseResult br = best_response_grim(
      g, cert.play, cert.punishments[static_cast<std::size_t>(player)]);
  json report;
  report["player"] = player;
  report["value"] = to_dec12(br.value);
  report["states"] = br.n_states;
  json policy = json::array();
  for (int a : br.policy) policy.push_back(a);
  report["policy"] = std::move(policy);
  emit(out, report.dump(2) + "\n");
  return kOk;
}

int run_equilibrium(const std::string& spec_path, const std::string& eps,
                    std::uint64_t seed, double tol, int cycle_bound, int threads,
                    const std::string& out) {
  GameSpec spec = load_spec_with_eps(spec_path, eps);
  EquilibriumOptions opt;
  opt.audit_tol = tol > 0 ? tol : 1e-3;
  opt.cycle_bound = cycle_bound;
  opt.seed = seed;
  opt.threads = threads;
  EquilibriumResult r = build_equilibrium(spec, opt);
  if (!r.search.found) {
    std::cerr << "target-play search failed: " << r.search.failure << "\n";
    for (int i = 0; i < spec.n_players; ++i)
      std::cerr << "  player " << i << ": target " << to_dec12(r.values[static_cast<std::size_t>(i)])
                << ", best seen " << to_dec12(r.search.best_individual[static_cast<std::size_t>(i)])
                << "\n";
    return kInfeasible;
  }
  if (!r.accepted) {
    std::cerr << "audit rejected the certificate:\n";
    for (const auto& a : r.certificate.players)
      if (a.margin < -opt.audit_tol)
        std::cerr << "  player " << a.id << ": margin " << to_dec12(a.margin)
                  << " (payoff " << to_dec12(a.payoff) << ", deviation value "
                  << to_dec12(a.best_response_value) << ")\n";
    return kRejected;  // no partial certificate is written
  }
  emit(out, certificate_to_json(r.certificate, spec));
  log_info("certificate accepted for " + std::to_string(spec.n_players) + " players");
  return kOk;
}

int run_audit(const std::string& spec_path, const std::string& cert_path, double tol,
              int threads, const std::string& out) {
  GameSpec spec = load_spec_file(spec_path);
  EquilibriumCertificate cert = certificate_from_json(slurp(cert_path), spec);
  std::vector<double> targets;
  for (const auto& p : cert.players) targets.push_back(p.target);
  EquilibriumCertificate again =
      audit_equilibrium(spec, cert.play, targets, cert.punishments,
                        tol > 0 ? tol : cert.audit_tol, threads);
  json report;
  report["accepted"] = again.accepted;
  json rows = json::array();
  for (const auto& a : again.players) {
    json row;
    row["id"] = a.id;
    row["payoff"] = to_dec12(a.payoff);
    row["audit_value"] = to_dec12(a.best_response_value);
    row["margin"] = to_dec12(a.margin);
    rows.push_back(std::move(row));
  }
  report["players"] = std::move(rows);
  emit(out, report.dump(2) + "\n");
  if (!again.accepted) {
    for (const auto& a : again.players)
      if (a.margin < -(tol > 0 ? tol : cert.audit_tol))
        std::cerr << "audit: player " << a.id << " margin " << to_dec12(a.margin)
                  << "\n";
    return kRejected;
  }
  return kOk;
}

int run_dtrace(const std::string& example, double w, int stages, std::uint64_t seed,
               double delta, const std::string& out) {
  std::ostringstream rows;
  rows << "stage\td\talpha_changed\tr_t_at\n";
  Rng rng(seed);

  if (example == "matching-pennies") {
    DLedger ledger = delta > 0.0
                         ? d_with_reinit(matching_pennies_generator(delta), delta,
                                         [](int) { return 1.0; })
                         : d_matching_pennies(w);
    auto cur = ledger.cursor();
    for (int t = 0; t < stages; ++t) {
      double d_here = cur->value();
      JointAction a{static_cast<Action>(rng.next_below(2)),
                    static_cast<Action>(rng.next_below(2))};
      OneShotFn f = cur->one_shot();
      double r_at = f.values[static_cast<std::size_t>(f.window_index_of_joint(a))];
      cur->step(a);
      rows << t << "\t" << to_dec12(d_here) << "\t"
           << (cur->reinitiated_here() ? 1 : 0) << "\t" << to_dec12(r_at) << "\n";
    }
  } else if (example == "voorneveld") {
    const int n = 8;
    DLedger ledger = d_voorneveld(w, 0, PopulationStatistic{0});
    StaircaseSchedule sched{n};
    auto cur = ledger.cursor();
    for (int t = 0; t < stages; ++t) {
      double d_here = cur->value();
      JointAction a(std::vector<Action>(static_cast<std::size_t>(n), 0));
      for (int i = 0; i < sched.active_count(t); ++i) a[i] = 1;
      OneShotFn f = cur->one_shot();
      double r_at = f.values[static_cast<std::size_t>(f.window_index_of_joint(a))];
      cur->step(a);
      rows << t << "\t" << to_dec12(d_here) << "\t0\t" << to_dec12(r_at) << "\n";
    }
  } else {
    throw ValidationError("unknown dtrace example: " + example);
  }
  emit(out, rows.str());
  return kOk;
}

int run_oneshot_approx(double eps, int nmax, int samples, std::uint64_t seed, double p,
                       const std::string& out) {
  GeometricPayoff r;
  FinApproxReport rep = finitistic_approximation(r, p, eps, nmax, samples, seed);
  std::ostringstream rows;
  rows << "n\tmax_err\tmean_err\tbound\thit_rate\n";
  for (const auto& row : rep.rows)
    rows << row.n << "\t" << to_dec12(row.max_err) << "\t" << to_dec12(row.mean_err)
         << "\t" << to_dec12(row.bound) << "\t" << to_dec12(row.hit_rate) << "\n";
  rows << "# derived_n " << rep.derived_n << " hit_rate "
       << to_dec12(rep.hit_rate_at_derived) << "\n";
  emit(out, rows.str());
  return kOk;
}

int run_oneshot_minmax(const std::string& game_path, int player, int restarts,
                       std::uint64_t seed, const std::string& out) {
  NormalFormGame g = game_from_json(slurp(game_path));
  MinmaxResult classical = minmax_classical(g, player);
  ValueBracket bracket = minmax_finitistic_bracket(g, player, restarts, 1e-9, seed);
  json report;
  report["player"] = player;
  report["classical"] = to_dec12(classical.value);
  report["bracket_lower"] = to_dec12(bracket.lower);
  report["bracket_upper"] = to_dec12(bracket.upper);
  report["width"] = to_dec12(bracket.width());
  emit(out, report.dump(2) + "\n");
  return kOk;
}

int run_mrun_validate(const std::string& in_path, double w, int player,
                      const std::string& out) {
  MRun run = mrun_from_json(slurp(in_path));
  MRunVerdict v = validate_m_run(run, w, player);
  json report;
  report["legal"] = v.legal;
  if (!v.legal) {
    report["first_bad_index"] = v.first_bad_index;
    report["reason"] = v.reason;
  }
  json seq = json::array();
  for (double r : v.r_at_moves) seq.push_back(to_dec12(r));
  report["r_at_moves"] = std::move(seq);
  emit(out, report.dump(2) + "\n");
  if (!v.legal) {
    std::cerr << "illegal run at index " << v.first_bad_index << ": " << v.reason
              << "\n";
    return kRejected;
  }
  return kOk;
}

int run_simulate(const std::string& spec_path, const std::string& cert_path,
                 int horizon, int samples, std::uint64_t seed,
                 const std::string& out) {
  GameSpec spec = load_spec_file(spec_path);
  EquilibriumCertificate cert = certificate_from_json(slurp(cert_path), spec);
  GrimTrigger trigger{cert.play, cert.punishments};
  auto grim = grim_trigger_profile(spec, trigger);
  std::ostringstream rows;
  rows << "sample";
  for (int i = 0; i < spec.n_players; ++i) rows << "\tpayoff_" << i;
  rows << "\n";
  int cyc = std::max(1, horizon / 2);
  Rng seeder(seed);
  for (int s = 0; s < samples; ++s) {
    Rng rng = seeder.fork(static_cast<std::uint64_t>(s));
    auto walker = grim->walk();
    History h;
    for (int t = 0; t < horizon; ++t) {
      JointAction a = walker->plan().sample(rng);
      walker->step(a);
      h.push_back(std::move(a));
    }
    History prefix(h.begin(), h.end() - cyc);
    History cycle(h.end() - cyc, h.end());
    LassoPlay lasso(prefix, cycle);
    rows << s;
    for (int i = 0; i < spec.n_players; ++i)
      rows << "\t" << to_dec12(evaluate_lasso(*spec.objectives[static_cast<std::size_t>(i)], lasso));
    rows << "\n";
  }
  emit(out, rows.str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equilibrium construction and verification for repeated games "
               "with tail-measurable objectives"};
  app.require_subcommand(1);

  std::string spec_path, cert_path, game_path, in_path, out_path, eps_text, example;
  int player = -1, stages = 60, nmax = 12, samples = 10000, horizon = 100;
  int cycle_bound = 4, threads = 1, restarts = 32;
  double tol = 0.0, w = 0.9, delta = 0.0, eps_value = 0.01, prob = 0.5;
  std::uint64_t seed = 0;

  auto* minmax = app.add_subcommand("minmax", "solver values per automaton state");
  minmax->add_option("--spec", spec_path)->required();
  minmax->add_option("--player", player);
  minmax->add_option("--tol", tol);
  minmax->add_option("--out", out_path);

  auto* punish = app.add_subcommand("punish", "punishment strategy and audited guarantee");
  punish->add_option("--spec", spec_path)->required();
  punish->add_option("--player", player)->required();
  punish->add_option("--out", out_path);

  auto* bestresponse = app.add_subcommand("bestresponse",
                                          "best deviation against a certificate");
  bestresponse->add_option("--spec", spec_path)->required();
  bestresponse->add_option("--cert", cert_path)->required();
  bestresponse->add_option("--player", player)->required();
  bestresponse->add_option("--out", out_path);

  auto* equilibrium = app.add_subcommand("equilibrium", "full pipeline to a certificate");
  equilibrium->add_option("--spec", spec_path)->required();
  equilibrium->add_option("--eps", eps_text);
  equilibrium->add_option("--seed", seed)->required();
  equilibrium->add_option("--tol", tol);
  equilibrium->add_option("--cycle-bound", cycle_bound);
  equilibrium->add_option("--threads", threads);
  equilibrium->add_option("--out", out_path);

  auto* audit = app.add_subcommand("audit", "re-audit an existing certificate");
  audit->add_option("--spec", spec_path)->required();
  audit->add_option("--cert", cert_path)->required();
  audit->add_option("--tol", tol);
  audit->add_option("--threads", threads);
  audit->add_option("--out", out_path);

  auto* dtrace = app.add_subcommand("dtrace", "ledger trajectory rows");
  dtrace->add_option("--example", example)->required();
  dtrace->add_option("--w", w);
  dtrace->add_option("--stages", stages);
  dtrace->add_option("--seed", seed)->required();
  dtrace->add_option("--delta", delta);
  dtrace->add_option("--out", out_path);

  auto* approx = app.add_subcommand("oneshot-approx",
                                    "finitistic approximation experiment table");
  approx->add_option("--eps", eps_value);
  approx->add_option("--nmax", nmax);
  approx->add_option("--samples", samples);
  approx->add_option("--seed", seed)->required();
  approx->add_option("--p", prob);
  approx->add_option("--out", out_path);

  auto* oneshot = app.add_subcommand("oneshot-minmax",
                                     "classical value and finitistic bracket");
  oneshot->add_option("--game", game_path)->required();
  oneshot->add_option("--player", player)->required();
  oneshot->add_option("--restarts", restarts);
  oneshot->add_option("--seed", seed)->required();
  oneshot->add_option("--out", out_path);

  auto* mrun = app.add_subcommand("mrun-validate", "check the legality of a run");
  mrun->add_option("--in", in_path)->required();
  mrun->add_option("--w", w)->required();
  mrun->add_option("--player", player);
  mrun->add_option("--out", out_path);

  auto* simulate = app.add_subcommand("simulate",
                                      "sample plays under a certificate profile");
  simulate->add_option("--spec", spec_path)->required();
  simulate->add_option("--cert", cert_path)->required();
  simulate->add_option("--horizon", horizon);
  simulate->add_option("--samples", samples);
  simulate->add_option("--seed", seed)->required();
  simulate->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (minmax->parsed()) return run_minmax(spec_path, player, tol, out_path);
    if (punish->parsed()) return run_punish(spec_path, player, out_path);
    if (bestresponse->parsed())
      return run_bestresponse(spec_path, cert_path, player, out_path);
    if (equilibrium->parsed())
      return run_equilibrium(spec_path, eps_text, seed, tol, cycle_bound, threads,
                             out_path);
    if (audit->parsed()) return run_audit(spec_path, cert_path, tol, threads, out_path);
    if (dtrace->parsed()) return run_dtrace(example, w, stages, seed, delta, out_path);
    if (approx->parsed())
      return run_oneshot_approx(eps_value, nmax, samples, seed, prob, out_path);
    if (oneshot->parsed())
      return run_oneshot_minmax(game_path, player, restarts, seed, out_path);
    if (mrun->parsed())
      return run_mrun_validate(in_path, w, player < 0 ? 0 : player, out_path);
    if (simulate->parsed())
      return run_simulate(spec_path, cert_path, horizon, samples, seed, out_path);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return kInputError;
}
