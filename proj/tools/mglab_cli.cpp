// Command-line front end: game solving, the four learners, complexity
// calculators, input generators, config-driven sweeps and artifact audits.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "mglab/harness.hpp"

namespace fs = std::filesystem;
using namespace mglab;

namespace {

// Relative output paths land under MGLAB_OUT when it is set.
fs::path resolve_out(const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("MGLAB_OUT")) return fs::path(root) / p;
  return p;
}

Json opponent_spec_from_string(const std::string& spec) {
  if (spec == "best-response" || spec == "self-nash" || spec == "fixed-uniform")
    return Json(spec);
  if (spec.rfind("fixed:", 0) == 0) {
    const std::string rest = spec.substr(6);
    const auto colon = rest.find(':');
    Json j{{"kind", "fixed"}, {"policies", rest.substr(0, colon)}};
    if (colon != std::string::npos) j["index"] = std::stoi(rest.substr(colon + 1));
    return j;
  }
  if (spec.rfind("schedule:", 0) == 0)
    return Json{{"kind", "schedule"}, {"policies", spec.substr(9)}};
  throw ConfigError("unknown opponent spec '" + spec + "'");
}

void write_run(const RunArtifacts& art, const fs::path& out) {
  atomic_write_file(out / "trace.csv", art.trace_csv);
  atomic_write_file(out / "episodes.jsonl", art.episodes_jsonl);
  atomic_write_file(out / "summary.json", art.summary.dump(1) + "\n");
  std::cout << art.summary.dump(1) << "\n";
}

int run_algorithm(const std::string& algorithm, const Json& inputs, const Json& config,
                  std::uint64_t seed, const std::string& out) {
  Json doc = inputs;
  doc["algorithm"] = algorithm;
  doc["config"] = config;
  doc["seeds"] = Json::array({seed});
  doc["out"] = out;
  const ResolvedExperiment exp = resolve_experiment(ExperimentConfig::from_json(doc));
  const RunArtifacts art = run_single(exp, seed);
  write_run(art, resolve_out(out));
  return art.hard_failure ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale zero-sum Markov game learning lab"};
  app.require_subcommand(1);

  std::string game_file, family_file, policies_file, models_file, tests_file, values_file;
  std::string features_spec = "onehot", out_path = "out", opponent_spec = "best-response";
  std::string beta_spec = "auto", phi_spec = "auto", mode = "diag-exact", role = "p1";
  std::string variant = "decoupled", de_mode = "exact", config_file, kind = "random";
  std::uint64_t seed = 0;
  int episodes = 100, n1 = 500, n = 500, round_cap = 50, jobs = 1;
  int horizon = 2, states = 2, actions = 2, count = 4, decoys = 4, cap = 64;
  double c = 2.0, p = 0.05, epsilon = 0.1, kappa = 1.0, eps = 0.25, tol = 1e-9;
  double noise = 0.4, sparsity = 0.0, c_beta = 1.0, c_width = 1.0;
  bool with_policy_truths = false;

  auto* solve = app.add_subcommand("solve-ne", "solve a game exactly by NE value iteration");
  solve->add_option("--game", game_file, "game definition file")->required();
  solve->add_option("--tol", tol, "matrix-game solver tolerance");
  solve->add_option("--out", out_path, "solution output file (optional)");

  auto* onemg = app.add_subcommand("run-onemg", "decoupled elimination learner");
  onemg->add_option("--game", game_file)->required();
  onemg->add_option("--family", family_file)->required();
  onemg->add_option("--episodes", episodes);
  onemg->add_option("--beta", beta_spec, "numeric value or 'auto'");
  onemg->add_option("--c", c, "constant in the theory beta");
  onemg->add_option("--p", p, "failure probability in the theory beta");
  onemg->add_option("--opponent", opponent_spec,
                    "best-response | self-nash | fixed-uniform | fixed:<file>[:i] | "
                    "schedule:<file>");
  onemg->add_option("--seed", seed);
  onemg->add_option("--out", out_path)->required();

  auto* linear = app.add_subcommand("run-linear", "linear-features learner");
  linear->add_option("--game", game_file)->required();
  linear->add_option("--features", features_spec, "'onehot' or a feature file");
  linear->add_option("--mode", mode, "diag-exact | search");
  linear->add_option("--episodes", episodes);
  linear->add_option("--beta", beta_spec, "numeric value or 'auto'");
  linear->add_option("--c-beta", c_beta);
  linear->add_option("--c-width", c_width);
  linear->add_option("--opponent", opponent_spec);
  linear->add_option("--seed", seed);
  linear->add_option("--out", out_path)->required();

  auto* aome = app.add_subcommand("run-aome", "model-based coordinated learner");
  aome->add_option("--game", game_file)->required();
  aome->add_option("--models", models_file)->required();
  aome->add_option("--tests", tests_file)->required();
  aome->add_option("--epsilon", epsilon);
  aome->add_option("--kappa", kappa);
  aome->add_option("--phi", phi_spec, "numeric value or 'auto' (desk formula)");
  aome->add_option("--n1", n1);
  aome->add_option("--n", n);
  aome->add_option("--round-cap", round_cap);
  aome->add_option("--seed", seed);
  aome->add_option("--out", out_path)->required();

  auto* aove = app.add_subcommand("run-aove", "model-free coordinated learner");
  aove->add_option("--game", game_file)->required();
  aove->add_option("--policies", policies_file)->required();
  aove->add_option("--values", values_file)->required();
  aove->add_option("--episodes", episodes);
  aove->add_option("--beta", beta_spec, "numeric value or 'auto'");
  aove->add_option("--c", c);
  aove->add_option("--role", role, "p1 | p2 | both");
  aove->add_option("--seed", seed);
  aove->add_option("--out", out_path)->required();

  auto* eluder = app.add_subcommand("eluder-dim", "brute-force complexity measures");
  eluder->add_option("--game", game_file)->required();
  eluder->add_option("--family", family_file)->required();
  eluder->add_option("--policies", policies_file, "needed for the coordinated variant");
  eluder->add_option("--eps", eps);
  eluder->add_option("--variant", variant, "decoupled | coordinated");
  eluder->add_option("--mode", de_mode, "exact | greedy");
  eluder->add_option("--cap", cap, "exact-mode measure-family cap");
  eluder->add_option("--out", out_path, "report file (optional)");

  auto* generate = app.add_subcommand("generate", "emit games and input families");
  generate->require_subcommand(1);
  auto* gen_game = generate->add_subcommand("game");
  gen_game->add_option("--kind", kind, "random | matching-pennies-chain | turn-based");
  gen_game->add_option("--horizon", horizon);
  gen_game->add_option("--states", states);
  gen_game->add_option("--actions", actions);
  gen_game->add_option("--sparsity", sparsity);
  gen_game->add_option("--seed", seed);
  gen_game->add_option("--out", out_path)->required();
  auto* gen_family = generate->add_subcommand("family");
  bool decoys_only = false;
  gen_family->add_option("--game", game_file)->required();
  gen_family->add_option("--decoys", decoys);
  gen_family->add_option("--noise", noise);
  gen_family->add_option("--policies", policies_file,
                         "also insert each policy's best-response truth");
  gen_family->add_flag("--with-policy-truths", with_policy_truths);
  gen_family->add_flag("--decoys-only", decoys_only,
                       "random decoy-only family with no truths");
  gen_family->add_option("--seed", seed);
  gen_family->add_option("--out", out_path)->required();
  auto* gen_policies = generate->add_subcommand("policies");
  gen_policies->add_option("--game", game_file)->required();
  gen_policies->add_option("--count", count);
  gen_policies->add_option("--seed", seed);
  gen_policies->add_option("--out", out_path)->required();
  auto* gen_models = generate->add_subcommand("models");
  gen_models->add_option("--game", game_file)->required();
  gen_models->add_option("--decoys", decoys);
  gen_models->add_option("--noise", noise);
  gen_models->add_option("--seed", seed);
  gen_models->add_option("--out", out_path)->required();
  auto* gen_tests = generate->add_subcommand("tests");
  gen_tests->add_option("--game", game_file)->required();
  gen_tests->add_option("--out", out_path)->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "config-driven multi-seed experiment");
  sweep_cmd->add_option("--config", config_file)->required();
  sweep_cmd->add_option("--jobs", jobs, "parallel runs (default 1)");

  auto* audit_cmd = app.add_subcommand("audit", "recompute a sweep's artifacts and diff");
  std::string audit_dir;
  audit_cmd->add_option("--dir", audit_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      const MarkovGame game = load_game(game_file);
      const GameSolution sol = ne_value_iteration(game, tol);
      Json out{{"value", game_value(game, sol)}};
      std::cout << "V* = " << format_double(game_value(game, sol)) << "\n";
      if (solve->count("--out")) {
        Json q = Json::array(), v = Json::array(), pi = Json::array(), nu = Json::array();
        for (double x : sol.q_star) q.push_back(x);
        for (double x : sol.v_star) v.push_back(x);
        for (double x : sol.pi_star.probs) pi.push_back(x);
        for (double x : sol.nu_star.probs) nu.push_back(x);
        out["q_star"] = q;
        out["v_star"] = v;
        out["pi_star"] = pi;
        out["nu_star"] = nu;
        atomic_write_file(resolve_out(out_path), out.dump(1) + "\n");
      }
      return 0;
    }

    if (onemg->parsed()) {
      Json cfg{{"episodes", episodes}, {"c", c}, {"p", p},
               {"opponent", opponent_spec_from_string(opponent_spec)}};
      if (beta_spec != "auto") cfg["beta"] = std::stod(beta_spec);
      return run_algorithm("onemg", Json{{"game", {{"file", game_file}}},
                                         {"family", {{"file", family_file}}}},
                           cfg, seed, out_path);
    }

    if (linear->parsed()) {
      Json cfg{{"episodes", episodes}, {"mode", mode}, {"c_beta", c_beta},
               {"c_width", c_width}, {"opponent", opponent_spec_from_string(opponent_spec)}};
      if (beta_spec != "auto") cfg["beta"] = std::stod(beta_spec);
      Json inputs{{"game", {{"file", game_file}}}};
      inputs["features"] =
          features_spec == "onehot" ? Json("onehot") : Json{{"file", features_spec}};
      return run_algorithm("linear-onemg", inputs, cfg, seed, out_path);
    }

    if (aome->parsed()) {
      Json cfg{{"epsilon", epsilon}, {"kappa", kappa}, {"n1", n1}, {"n", n},
               {"round_cap", round_cap}};
      if (phi_spec != "auto") cfg["phi"] = std::stod(phi_spec);
      return run_algorithm("aome",
                           Json{{"game", {{"file", game_file}}},
                                {"models", {{"file", models_file}}},
                                {"tests", {{"file", tests_file}}}},
                           cfg, seed, out_path);
    }

    if (aove->parsed()) {
      Json cfg{{"episodes", episodes}, {"c", c}, {"role", role}};
      if (beta_spec != "auto") cfg["beta"] = std::stod(beta_spec);
      const Json inputs{{"game", {{"file", game_file}}},
                        {"policies", {{"file", policies_file}}},
                        {"family", {{"file", values_file}}}};
      if (role == "both") {
        // Two role-swapped runs plus the combined duality gap per episode.
        const MarkovGame game = load_game(game_file);
        const PolicyFamily pf = policy_family_from_json(parse_json_file(policies_file));
        const FiniteValueFamily vf = value_family_from_json(parse_json_file(values_file));
        AoveConfig acfg = detail::aove_config_from_json(cfg);
        acfg.role = AoveConfig::Role::both;
        acfg.seed = seed;
        const AoveBothResult both = run_aove_both(game, pf, vf, acfg);
        const fs::path out = resolve_out(out_path);
        atomic_write_file(out / "p1" / "trace.csv", detail::aove_trace_csv(both.p1));
        atomic_write_file(out / "p2" / "trace.csv", detail::aove_trace_csv(both.p2));
        CsvWriter csv({"k", "p1_regret_increment", "p2_regret_increment", "optimal_gap",
                       "combined_gap"});
        for (std::size_t k = 0; k < both.combined_gap.size(); ++k)
          csv.add_row({std::to_string(k + 1),
                       format_double(both.p1.trace[k].regret_increment),
                       format_double(both.p2.trace[k].regret_increment),
                       format_double(both.optimal_gap), format_double(both.combined_gap[k])});
        atomic_write_file(out / "combined.csv", csv.str());
        std::cout << "optimal gap " << format_double(both.optimal_gap) << ", final combined "
                  << format_double(both.combined_gap.back()) << "\n";
        return 0;
      }
      return run_algorithm("aove", inputs, cfg, seed, out_path);
    }

    if (eluder->parsed()) {
      const MarkovGame game = load_game(game_file);
      const FiniteValueFamily family = value_family_from_json(parse_json_file(family_file));
      std::optional<PolicyFamily> policies;
      if (!policies_file.empty())
        policies = policy_family_from_json(parse_json_file(policies_file));
      const EluderResult res = minimax_eluder_dimension(
          game, family, eps, de_mode == "greedy" ? DeMode::greedy : DeMode::exact,
          variant == "coordinated" ? EluderVariant::coordinated : EluderVariant::decoupled,
          policies ? &*policies : nullptr, static_cast<std::size_t>(cap));
      Json witness = Json::array();
      for (int idx : res.witness.sequence) witness.push_back(idx);
      const Json report{{"dimension", res.dimension},
                        {"level", res.level},
                        {"eps", eps},
                        {"eps_prime", res.witness.eps_prime},
                        {"variant", variant},
                        {"mode", de_mode},
                        {"witness", witness}};
      std::cout << report.dump(1) << "\n";
      if (eluder->count("--out"))
        atomic_write_file(resolve_out(out_path), report.dump(1) + "\n");
      return 0;
    }

    if (generate->parsed()) {
      const fs::path out = resolve_out(out_path);
      if (gen_game->parsed()) {
        const MarkovGame g = generate_game({kind, horizon, states, actions, sparsity}, seed);
        atomic_write_file(out, game_to_json(g).dump(1) + "\n");
      } else if (gen_family->parsed()) {
        const MarkovGame g = load_game(game_file);
        FiniteValueFamily fam;
        if (decoys_only) {
          fam = generate_decoy_family(g, decoys, g.value_bound(), seed);
        } else {
          std::optional<PolicyFamily> pf;
          if (!policies_file.empty())
            pf = policy_family_from_json(parse_json_file(policies_file));
          fam = generate_realizable_family(
              g, decoys, noise, seed,
              (with_policy_truths || !policies_file.empty()) && pf ? &*pf : nullptr);
        }
        atomic_write_file(out, value_family_to_json(fam).dump(1) + "\n");
      } else if (gen_policies->parsed()) {
        const MarkovGame g = load_game(game_file);
        atomic_write_file(
            out, policy_family_to_json(generate_policy_family(g, count, seed)).dump(1) + "\n");
      } else if (gen_models->parsed()) {
        const MarkovGame g = load_game(game_file);
        atomic_write_file(
            out,
            model_family_to_json(generate_model_family(g, decoys, noise, seed)).dump(1) + "\n");
      } else if (gen_tests->parsed()) {
        const MarkovGame g = load_game(game_file);
        atomic_write_file(out, test_family_to_json(generate_indicator_tests(g)).dump(1) + "\n");
      }
      std::cout << "wrote " << out.string() << "\n";
      return 0;
    }

    if (sweep_cmd->parsed()) {
      Json doc = parse_json_file(config_file);
      doc["out"] = resolve_out(doc.at("out").get<std::string>()).string();
      const ResolvedExperiment exp = resolve_experiment(ExperimentConfig::from_json(doc),
                                                        fs::path(config_file).parent_path());
      const SweepSummary summary = sweep(exp, jobs);
      std::cout << "mean final cumulative regret " << format_double(summary.mean)
                << ", retention " << format_double(summary.retention_fraction)
                << ", ratio_pass " << (summary.sublinearity.ratio_pass ? "yes" : "no")
                << ", alpha " << format_double(summary.sublinearity.alpha) << "\n";
      return summary.any_hard_failure || summary.failed_runs > 0 ? 1 : 0;
    }

    if (audit_cmd->parsed()) {
      const AuditOutcome outcome = audit_sweep(audit_dir);
      if (outcome.ok) {
        std::cout << "audit ok: all artifacts re-derived byte-identically\n";
        return 0;
      }
      for (const std::string& m : outcome.mismatches) std::cout << "MISMATCH " << m << "\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
