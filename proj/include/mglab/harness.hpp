#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mglab/aome.hpp"
#include "mglab/aove.hpp"
#include "mglab/complexity.hpp"
#include "mglab/generators.hpp"
#include "mglab/io.hpp"
#include "mglab/linear_onemg.hpp"
#include "mglab/onemg.hpp"
#include "mglab/svg.hpp"

namespace mglab {

// Growth-order diagnostics on a cumulative-regret trace: the ratio test
// Reg(K)/K <= 0.6 Reg(K/10)/(K/10) and the fitted exponent alpha from
// log-log least squares over checkpoints (cum regret floored before log).
struct Sublinearity {
  bool ratio_pass = false;
  double alpha = 0.0;
  double ratio = 0.0;
};

inline Sublinearity sublinearity_test(const std::vector<double>& cum_regret,
                                      int checkpoints = 10, double floor = 1e-6) {
  Sublinearity out;
  const std::size_t k_max = cum_regret.size();
  if (k_max < 10) throw InputError("sublinearity_test: need at least 10 episodes");
  if (checkpoints < 5) throw InputError("sublinearity_test: need at least 5 checkpoints");

  const double reg_k = cum_regret.back();
  const double reg_tenth = cum_regret[k_max / 10 - 1];
  if (reg_tenth <= floor) {
    // Degenerate near-zero regret: pass iff the full trace stayed near zero.
    out.ratio_pass = reg_k <= floor * 10;
    out.ratio = 0.0;
    out.alpha = 0.0;
    return out;
  }
  const double rate_full = reg_k / static_cast<double>(k_max);
  const double rate_tenth = reg_tenth / (static_cast<double>(k_max) / 10.0);
  out.ratio = rate_full / rate_tenth;
  out.ratio_pass = rate_full <= 0.6 * rate_tenth;

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  bool all_floored = true;
  for (int c = 1; c <= checkpoints; ++c) {
    const std::size_t k = k_max * c / checkpoints;
    const double y = std::max(cum_regret[k - 1], floor);
    if (cum_regret[k - 1] > floor) all_floored = false;
    const double lx = std::log(static_cast<double>(k));
    const double ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (all_floored) {
    out.alpha = 0.0;
    return out;
  }
  out.alpha = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

// Experiment configuration, schema-validated; unknown keys rejected.
struct ExperimentConfig {
  std::string algorithm;  // onemg | linear-onemg | aome | aove
  Json source;            // full config document (inputs + algorithm block)
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir;

  static ExperimentConfig from_json(const Json& j) {
    reject_unknown_keys(j,
                        {"algorithm", "game", "family", "policies", "models", "tests",
                         "features", "config", "seeds", "out"},
                        "experiment");
    ExperimentConfig c;
    c.algorithm = j.at("algorithm").get<std::string>();
    if (c.algorithm != "onemg" && c.algorithm != "linear-onemg" && c.algorithm != "aome" &&
        c.algorithm != "aove")
      throw ConfigError("experiment: unknown algorithm '" + c.algorithm + "'");
    for (const Json& s : j.at("seeds")) c.seeds.push_back(s.get<std::uint64_t>());
    if (c.seeds.empty()) throw ConfigError("experiment: needs at least one seed");
    c.out_dir = j.at("out").get<std::string>();
    c.source = j;
    return c;
  }
};

namespace detail {

inline GameGeneratorSpec game_generator_from_json(const Json& j) {
  reject_unknown_keys(j, {"kind", "horizon", "states", "actions", "sparsity", "seed"},
                      "game generator");
  GameGeneratorSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  if (j.contains("horizon")) spec.horizon = j.at("horizon").get<int>();
  if (j.contains("states")) spec.num_states = j.at("states").get<int>();
  if (j.contains("actions")) spec.num_actions = j.at("actions").get<int>();
  if (j.contains("sparsity")) spec.sparsity = j.at("sparsity").get<double>();
  return spec;
}

inline MarkovGame resolve_game(const Json& j, const std::filesystem::path& base) {
  reject_unknown_keys(j, {"file", "generator"}, "game source");
  if (j.contains("file") == j.contains("generator"))
    throw ConfigError("game source: provide exactly one of 'file' or 'generator'");
  if (j.contains("file")) return load_game(base / j.at("file").get<std::string>());
  const Json& gen = j.at("generator");
  return generate_game(game_generator_from_json(gen),
                       gen.contains("seed") ? gen.at("seed").get<std::uint64_t>() : 0);
}

inline Opponent opponent_from_json(const Json& j, const MarkovGame& game,
                                   const std::filesystem::path& base) {
  if (j.is_string()) {
    const std::string kind = j.get<std::string>();
    if (kind == "best-response") return Opponent::best_response();
    if (kind == "self-nash") return Opponent::self_nash();
    if (kind == "fixed-uniform")
      return Opponent::fixed(
          StochasticPolicy::uniform(game.horizon, game.num_states, game.num_actions2));
    throw ConfigError("opponent: unknown kind '" + kind + "'");
  }
  reject_unknown_keys(j, {"kind", "policies", "index"}, "opponent");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed") {
    const PolicyFamily fam =
        policy_family_from_json(parse_json_file(base / j.at("policies").get<std::string>()));
    return Opponent::fixed(fam.members.at(j.contains("index") ? j.at("index").get<int>() : 0));
  }
  if (kind == "schedule") {
    const PolicyFamily fam =
        policy_family_from_json(parse_json_file(base / j.at("policies").get<std::string>()));
    return Opponent::adversarial(fam.members);
  }
  throw ConfigError("opponent: unknown kind '" + kind + "'");
}

}  // namespace detail

// Everything a single seeded run leaves behind.
struct RunArtifacts {
  std::string trace_csv;
  std::string episodes_jsonl;
  Json summary;
  std::vector<double> cum_regret;
  double final_cum_regret = 0.0;
  bool retention_ok = true;   // algorithm-specific full-retention flag
  int theory_events = 0;      // fallbacks, aborts, audit failures
  bool hard_failure = false;
};

namespace detail {

inline std::string episode_jsonl_line(int k, int chosen, const EpisodeRecord& ep,
                                      const StochasticPolicy& opponent) {
  Json steps = Json::array();
  for (const EpisodeStep& s : ep.steps)
    steps.push_back(Json::array({s.h, s.x, s.a, s.b, s.r, s.x_next}));
  Json policy = Json::array();
  for (double p : opponent.probs) policy.push_back(p);
  return Json{{"k", k}, {"chosen", chosen}, {"steps", steps}, {"opponent", policy}}.dump();
}

inline RunArtifacts run_onemg_seed(const MarkovGame& game, const FiniteValueFamily& family,
                                   OnemgConfig cfg, const Opponent& opponent,
                                   std::uint64_t seed) {
  cfg.seed = seed;
  const OnemgResult res = run_onemg(game, family, cfg, opponent);
  RunArtifacts art;
  CsvWriter csv({"k", "regret_increment", "cum_regret", "vspace_size", "optimism_gap",
                 "fallback_flag"});
  std::string jsonl;
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    const OnemgTraceRow& row = res.trace[i];
    csv.add_row({std::to_string(row.k), format_double(row.regret_increment),
                 format_double(row.cum_regret), std::to_string(row.vspace_size),
                 format_double(row.optimism_gap), row.fallback ? "1" : "0"});
    art.cum_regret.push_back(row.cum_regret);
    if (res.family_tagged && !row.qstar_present) art.retention_ok = false;
    jsonl += episode_jsonl_line(row.k, row.chosen, res.episodes[i].episode,
                                res.episodes[i].opponent_policy);
    jsonl += '\n';
  }
  art.trace_csv = csv.str();
  art.episodes_jsonl = jsonl;
  art.final_cum_regret = res.final_cum_regret();
  art.theory_events = res.fallback_events;
  art.summary = Json{{"seed", seed},
                     {"episodes", cfg.episodes},
                     {"beta", res.beta},
                     {"v_star", res.v_star},
                     {"final_cum_regret", art.final_cum_regret},
                     {"fallback_events", res.fallback_events},
                     {"qstar_retained", art.retention_ok}};
  return art;
}

inline RunArtifacts run_linear_seed(const MarkovGame& game, const FeatureMap& features,
                                    LinearOnemgConfig cfg, const Opponent& opponent,
                                    std::uint64_t seed) {
  cfg.seed = seed;
  const LinearOnemgResult res = run_linear(game, features, cfg, opponent);
  // Truth feasibility is only defined for one-hot features.
  const bool feasibility_checked = features.is_one_hot();
  RunArtifacts art;
  CsvWriter csv({"k", "regret_increment", "cum_regret", "planned_value", "theta_star_feasible",
                 "feasibility_norm"});
  std::string jsonl;
  bool feasible_throughout = true;
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    const LinearTraceRow& row = res.trace[i];
    csv.add_row({std::to_string(row.k), format_double(row.regret_increment),
                 format_double(row.cum_regret), format_double(row.planned_value),
                 row.theta_star_feasible ? "1" : "0", format_double(row.feasibility_norm)});
    art.cum_regret.push_back(row.cum_regret);
    if (!row.theta_star_feasible) feasible_throughout = false;
    jsonl += episode_jsonl_line(row.k, 0, res.episodes[i].episode,
                                res.episodes[i].opponent_policy);
    jsonl += '\n';
  }
  art.retention_ok = !feasibility_checked || feasible_throughout;
  art.trace_csv = csv.str();
  art.episodes_jsonl = jsonl;
  art.final_cum_regret = res.final_cum_regret();
  art.summary = Json{{"seed", seed},
                     {"episodes", cfg.episodes},
                     {"beta", res.beta},
                     {"width", res.width},
                     {"v_star", res.v_star},
                     {"final_cum_regret", art.final_cum_regret},
                     {"feasibility_checked", feasibility_checked},
                     {"theta_star_feasible_throughout",
                      feasibility_checked ? Json(feasible_throughout) : Json(nullptr)}};
  return art;
}

inline RunArtifacts run_aome_seed(const MarkovGame& game, const ModelFamily& models,
                                  const TestFunctionFamily& tests, AomeConfig cfg,
                                  std::uint64_t seed) {
  cfg.seed = seed;
  const AomeResult res = run_aome(game, models, tests, cfg);
  RunArtifacts art;
  CsvWriter csv({"round", "m1", "m2", "v_hat", "v_hat_se", "terminated", "level",
                 "inconclusive", "eliminated", "survivors", "mstar_present"});
  bool mstar_always = true;
  std::string jsonl;
  for (const AomeRoundLog& row : res.rounds) {
    csv.add_row({std::to_string(row.round), std::to_string(row.m1), std::to_string(row.m2),
                 format_double(row.v_hat), format_double(row.v_hat_se),
                 row.terminated ? "1" : "0", std::to_string(row.level),
                 row.inconclusive ? "1" : "0", std::to_string(row.eliminated),
                 std::to_string(row.survivors), row.mstar_present ? "1" : "0"});
    if (!row.mstar_present) mstar_always = false;
    jsonl += Json{{"round", row.round},
                  {"m1", row.m1},
                  {"m2", row.m2},
                  {"v_hat", row.v_hat},
                  {"terminated", row.terminated},
                  {"survivors", row.survivors}}
                 .dump();
    jsonl += '\n';
  }
  if (res.mstar_index >= 0 && (res.aborted_empty || (res.terminated && !res.final_survivors.contains(res.mstar_index))))
    mstar_always = false;
  art.retention_ok = mstar_always;
  art.theory_events = res.aborted_empty ? 1 : 0;
  art.hard_failure = res.aborted_empty;
  art.trace_csv = csv.str();
  art.episodes_jsonl = jsonl;
  art.final_cum_regret = 0.0;

  Json summary{{"seed", seed},
               {"terminated", res.terminated},
               {"termination_round", res.termination_round},
               {"rounds", res.rounds.size()},
               {"trajectories", res.trajectories},
               {"aborted_empty", res.aborted_empty},
               {"v_hat", res.v_hat},
               {"v_hat_se", res.v_hat_se},
               {"mstar_always_present", mstar_always}};
  if (res.terminated) {
    // Exact certification of the output pair against the true game.
    const GameSolution sol = ne_value_iteration(game);
    const double exploited =
        best_response_value_iteration(game, res.pi_out, FixedSide::player1).second;
    summary["exact_gap"] = game_value(game, sol) - exploited;
    summary["certified"] =
        game_value(game, sol) - exploited <= cfg.epsilon + 3.0 * res.v_hat_se;
    if (!summary["certified"].get<bool>()) art.hard_failure = true;
  }
  art.summary = summary;
  return art;
}

inline std::string aove_trace_csv(const AoveResult& res) {
  CsvWriter csv({"k", "pi_index", "regret_increment", "cum_regret",
                 "regret_increment_unrestricted", "cum_regret_unrestricted", "pair_count",
                 "upper_bound_slack", "duality_gap", "fallback_flag", "truths_present"});
  for (const AoveTraceRow& row : res.trace)
    csv.add_row({std::to_string(row.k), std::to_string(row.pi_index),
                 format_double(row.regret_increment), format_double(row.cum_regret),
                 format_double(row.regret_increment_unrestricted),
                 format_double(row.cum_regret_unrestricted), std::to_string(row.pair_count),
                 format_double(row.upper_bound_slack), format_double(row.duality_gap),
                 row.fallback ? "1" : "0", row.truths_present ? "1" : "0"});
  return csv.str();
}

inline RunArtifacts run_aove_seed(const MarkovGame& game, const PolicyFamily& policies,
                                  const FiniteValueFamily& values, AoveConfig cfg,
                                  std::uint64_t seed) {
  cfg.seed = seed;
  const AoveResult res = run_aove(game, policies, values, cfg);
  RunArtifacts art;
  std::string jsonl;
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    const AoveTraceRow& row = res.trace[i];
    art.cum_regret.push_back(row.cum_regret);
    if (res.family_tagged && !row.truths_present) art.retention_ok = false;
    jsonl += episode_jsonl_line(row.k, row.f_index, res.episodes[i].episode,
                                res.episodes[i].opponent_policy);
    jsonl += '\n';
  }
  art.trace_csv = aove_trace_csv(res);
  art.episodes_jsonl = jsonl;
  art.final_cum_regret = res.final_cum_regret();
  art.theory_events = res.fallback_events;
  art.summary = Json{{"seed", seed},
                     {"episodes", cfg.episodes},
                     {"beta", res.beta},
                     {"v_star_restricted", res.v_star_restricted},
                     {"v_star_unrestricted", res.v_star_unrestricted},
                     {"final_cum_regret", art.final_cum_regret},
                     {"fallback_events", res.fallback_events},
                     {"truths_retained", art.retention_ok}};
  return art;
}

}  // namespace detail

// Fully-resolved inputs of one experiment; written into the sweep directory
// so audits can rebuild every artifact from it alone.
struct ResolvedExperiment {
  std::string algorithm;
  MarkovGame game;
  std::optional<FiniteValueFamily> values;
  std::optional<PolicyFamily> policies;
  std::optional<ModelFamily> models;
  std::optional<TestFunctionFamily> tests;
  std::optional<FeatureMap> features;
  Json algo_config;
  Json opponent_spec;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out_dir;
};

inline ResolvedExperiment resolve_experiment(const ExperimentConfig& config,
                                             const std::filesystem::path& base = ".") {
  ResolvedExperiment exp;
  exp.algorithm = config.algorithm;
  exp.seeds = config.seeds;
  exp.out_dir = config.out_dir;
  const Json& j = config.source;
  exp.game = detail::resolve_game(j.at("game"), base);
  exp.algo_config = j.contains("config") ? j.at("config") : Json::object();
  if (j.contains("family")) {
    const Json& fj = j.at("family");
    reject_unknown_keys(fj, {"file", "generator"}, "family source");
    if (fj.contains("file"))
      exp.values = value_family_from_json(parse_json_file(base / fj.at("file").get<std::string>()));
  }
  if (j.contains("policies")) {
    const Json& pj = j.at("policies");
    reject_unknown_keys(pj, {"file", "generator"}, "policies source");
    if (pj.contains("file"))
      exp.policies =
          policy_family_from_json(parse_json_file(base / pj.at("file").get<std::string>()));
    else {
      const Json& gen = pj.at("generator");
      reject_unknown_keys(gen, {"count", "seed"}, "policy generator");
      exp.policies = generate_policy_family(exp.game, gen.at("count").get<int>(),
                                            gen.at("seed").get<std::uint64_t>());
    }
  }
  if (j.contains("family")) {
    const Json& fj = j.at("family");
    if (fj.contains("generator")) {
      const Json& gen = fj.at("generator");
      reject_unknown_keys(gen, {"decoys", "noise", "seed", "with_policy_truths"},
                          "family generator");
      const bool with_truths =
          gen.contains("with_policy_truths") && gen.at("with_policy_truths").get<bool>();
      exp.values = generate_realizable_family(
          exp.game, gen.at("decoys").get<int>(), gen.at("noise").get<double>(),
          gen.at("seed").get<std::uint64_t>(),
          with_truths && exp.policies ? &*exp.policies : nullptr);
    }
  }
  if (j.contains("models")) {
    const Json& mj = j.at("models");
    reject_unknown_keys(mj, {"file", "generator"}, "models source");
    if (mj.contains("file"))
      exp.models =
          model_family_from_json(parse_json_file(base / mj.at("file").get<std::string>()));
    else {
      const Json& gen = mj.at("generator");
      reject_unknown_keys(gen, {"decoys", "noise", "seed"}, "model generator");
      exp.models = generate_model_family(exp.game, gen.at("decoys").get<int>(),
                                         gen.at("noise").get<double>(),
                                         gen.at("seed").get<std::uint64_t>());
    }
  }
  if (j.contains("tests")) {
    const Json& tj = j.at("tests");
    reject_unknown_keys(tj, {"file", "generator"}, "tests source");
    if (tj.contains("file"))
      exp.tests =
          test_family_from_json(parse_json_file(base / tj.at("file").get<std::string>()));
    else
      exp.tests = generate_indicator_tests(exp.game);
  }
  if (j.contains("features")) {
    const Json& fj = j.at("features");
    if (fj.is_string() && fj.get<std::string>() == "onehot")
      exp.features = FeatureMap::one_hot(exp.game);
    else {
      reject_unknown_keys(fj, {"file"}, "features source");
      exp.features =
          feature_map_from_json(parse_json_file(base / fj.at("file").get<std::string>()));
    }
  }
  if (exp.algo_config.contains("opponent")) exp.opponent_spec = exp.algo_config.at("opponent");
  return exp;
}

namespace detail {

inline OnemgConfig onemg_config_from_json(const Json& j) {
  reject_unknown_keys(j, {"episodes", "beta", "c", "p", "opponent"}, "onemg config");
  OnemgConfig cfg;
  if (j.contains("episodes")) cfg.episodes = j.at("episodes").get<int>();
  if (j.contains("beta") && !j.at("beta").is_string()) cfg.beta = j.at("beta").get<double>();
  if (j.contains("c")) cfg.c = j.at("c").get<double>();
  if (j.contains("p")) cfg.p = j.at("p").get<double>();
  return cfg;
}

inline LinearOnemgConfig linear_config_from_json(const Json& j) {
  reject_unknown_keys(j, {"episodes", "beta", "c_beta", "c_width", "p", "mode", "n_restarts",
                          "opponent"},
                      "linear onemg config");
  LinearOnemgConfig cfg;
  if (j.contains("episodes")) cfg.episodes = j.at("episodes").get<int>();
  if (j.contains("beta") && !j.at("beta").is_string()) cfg.beta = j.at("beta").get<double>();
  if (j.contains("c_beta")) cfg.c_beta = j.at("c_beta").get<double>();
  if (j.contains("c_width")) cfg.c_width = j.at("c_width").get<double>();
  if (j.contains("p")) cfg.p = j.at("p").get<double>();
  if (j.contains("n_restarts")) cfg.n_restarts = j.at("n_restarts").get<int>();
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "diag-exact") cfg.mode = PlanMode::diag_exact;
    else if (mode == "search") cfg.mode = PlanMode::search;
    else throw ConfigError("linear onemg: unknown mode '" + mode + "'");
  }
  return cfg;
}

inline AomeConfig aome_config_from_json(const Json& j) {
  reject_unknown_keys(j, {"epsilon", "p", "kappa", "phi", "n1", "n", "round_cap",
                          "witness_rank", "successor_level_next"},
                      "aome config");
  AomeConfig cfg;
  if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
  if (j.contains("p")) cfg.p = j.at("p").get<double>();
  if (j.contains("kappa")) cfg.kappa = j.at("kappa").get<double>();
  if (j.contains("phi") && !j.at("phi").is_string()) cfg.phi = j.at("phi").get<double>();
  if (j.contains("n1")) cfg.n1 = j.at("n1").get<int>();
  if (j.contains("n")) cfg.n = j.at("n").get<int>();
  if (j.contains("round_cap")) cfg.round_cap = j.at("round_cap").get<int>();
  if (j.contains("witness_rank")) cfg.witness_rank = j.at("witness_rank").get<double>();
  if (j.contains("successor_level_next"))
    cfg.successor_level_next = j.at("successor_level_next").get<bool>();
  return cfg;
}

inline AoveConfig aove_config_from_json(const Json& j) {
  reject_unknown_keys(j, {"episodes", "beta", "c", "p", "role"}, "aove config");
  AoveConfig cfg;
  if (j.contains("episodes")) cfg.episodes = j.at("episodes").get<int>();
  if (j.contains("beta") && !j.at("beta").is_string()) cfg.beta = j.at("beta").get<double>();
  if (j.contains("c")) cfg.c = j.at("c").get<double>();
  if (j.contains("p")) cfg.p = j.at("p").get<double>();
  if (j.contains("role")) {
    const std::string role = j.at("role").get<std::string>();
    if (role == "p1") cfg.role = AoveConfig::Role::p1;
    else if (role == "p2") cfg.role = AoveConfig::Role::p2;
    else if (role == "both") cfg.role = AoveConfig::Role::both;
    else throw ConfigError("aove: unknown role '" + role + "'");
  }
  return cfg;
}

inline RunArtifacts run_one_seed(const ResolvedExperiment& exp, std::uint64_t seed) {
  if (exp.algorithm == "onemg") {
    if (!exp.values) throw ConfigError("onemg: needs a value family");
    const Opponent opp = exp.opponent_spec.is_null()
                             ? Opponent::best_response()
                             : opponent_from_json(exp.opponent_spec, exp.game, ".");
    return run_onemg_seed(exp.game, *exp.values, onemg_config_from_json(exp.algo_config), opp,
                          seed);
  }
  if (exp.algorithm == "linear-onemg") {
    if (!exp.features) throw ConfigError("linear-onemg: needs features");
    const Opponent opp = exp.opponent_spec.is_null()
                             ? Opponent::best_response()
                             : opponent_from_json(exp.opponent_spec, exp.game, ".");
    return run_linear_seed(exp.game, *exp.features, linear_config_from_json(exp.algo_config),
                           opp, seed);
  }
  if (exp.algorithm == "aome") {
    if (!exp.models || !exp.tests) throw ConfigError("aome: needs models and tests");
    return run_aome_seed(exp.game, *exp.models, *exp.tests,
                         aome_config_from_json(exp.algo_config), seed);
  }
  if (exp.algorithm == "aove") {
    if (!exp.values || !exp.policies) throw ConfigError("aove: needs values and policies");
    return run_aove_seed(exp.game, *exp.policies, *exp.values,
                         aove_config_from_json(exp.algo_config), seed);
  }
  throw ConfigError("unknown algorithm '" + exp.algorithm + "'");
}

}  // namespace detail

// One seeded run with artifacts, as the sweep would execute it.
inline RunArtifacts run_single(const ResolvedExperiment& exp, std::uint64_t seed) {
  return detail::run_one_seed(exp, seed);
}

struct SweepSummary {
  std::vector<double> final_cum_regret;  // per seed
  double mean = 0.0;
  double median = 0.0;
  double iqr = 0.0;
  double retention_fraction = 0.0;  // seeds fully retained / total
  int theory_events = 0;
  int failed_runs = 0;
  Sublinearity sublinearity;  // on the mean cumulative-regret trace
  bool any_hard_failure = false;
};

// Runs every seed (optionally in parallel), writes per-run artifacts, a
// summary CSV + JSON record, and a static SVG of the regret curves. Output
// is byte-identical across reruns and across serial/parallel execution.
inline SweepSummary sweep(const ResolvedExperiment& exp, int jobs = 1) {
  namespace fs = std::filesystem;
  const fs::path root = exp.out_dir;
  fs::create_directories(root);

  // Persist resolved inputs so the audit can rebuild rows from files alone.
  atomic_write_file(root / "inputs" / "game.json", game_to_json(exp.game).dump(1) + "\n");
  if (exp.values)
    atomic_write_file(root / "inputs" / "values.json",
                      value_family_to_json(*exp.values).dump(1) + "\n");
  if (exp.policies)
    atomic_write_file(root / "inputs" / "policies.json",
                      policy_family_to_json(*exp.policies).dump(1) + "\n");
  if (exp.models)
    atomic_write_file(root / "inputs" / "models.json",
                      model_family_to_json(*exp.models).dump(1) + "\n");
  if (exp.tests)
    atomic_write_file(root / "inputs" / "tests.json",
                      test_family_to_json(*exp.tests).dump(1) + "\n");
  if (exp.features)
    atomic_write_file(root / "inputs" / "features.json",
                      feature_map_to_json(*exp.features).dump(1) + "\n");

  Json manifest{{"algorithm", exp.algorithm},
                {"config", exp.algo_config},
                {"opponent", exp.opponent_spec},
                {"seeds", exp.seeds}};
  atomic_write_file(root / "manifest.json", manifest.dump(1) + "\n");

  std::vector<RunArtifacts> runs(exp.seeds.size());
  std::vector<std::string> errors(exp.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= exp.seeds.size()) return;
      try {
        runs[i] = detail::run_one_seed(exp, exp.seeds[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SweepSummary summary;
  CsvWriter seed_csv({"seed", "final_cum_regret", "retention_ok", "theory_events", "error"});
  std::vector<std::vector<double>> traces;
  for (std::size_t i = 0; i < exp.seeds.size(); ++i) {
    const fs::path run_dir = root / ("seed-" + std::to_string(exp.seeds[i]));
    if (!errors[i].empty()) {
      ++summary.failed_runs;
      summary.any_hard_failure = true;
      seed_csv.add_row({std::to_string(exp.seeds[i]), "", "", "", errors[i]});
      atomic_write_file(run_dir / "error.txt", errors[i] + "\n");
      continue;
    }
    const RunArtifacts& art = runs[i];
    atomic_write_file(run_dir / "trace.csv", art.trace_csv);
    atomic_write_file(run_dir / "episodes.jsonl", art.episodes_jsonl);
    atomic_write_file(run_dir / "summary.json", art.summary.dump(1) + "\n");
    summary.final_cum_regret.push_back(art.final_cum_regret);
    summary.theory_events += art.theory_events;
    if (art.hard_failure) summary.any_hard_failure = true;
    if (!art.cum_regret.empty()) traces.push_back(art.cum_regret);
    seed_csv.add_row({std::to_string(exp.seeds[i]), format_double(art.final_cum_regret),
                      art.retention_ok ? "1" : "0", std::to_string(art.theory_events), ""});
  }
  atomic_write_file(root / "summary.csv", seed_csv.str());

  const std::size_t n = summary.final_cum_regret.size();
  if (n > 0) {
    std::vector<double> sorted = summary.final_cum_regret;
    std::sort(sorted.begin(), sorted.end());
    for (double v : sorted) summary.mean += v;
    summary.mean /= static_cast<double>(n);
    summary.median = sorted[n / 2];
    summary.iqr = sorted[(3 * n) / 4] - sorted[n / 4];
    std::size_t retained = 0;
    for (std::size_t i = 0; i < exp.seeds.size(); ++i)
      if (errors[i].empty() && runs[i].retention_ok) ++retained;
    summary.retention_fraction = static_cast<double>(retained) / static_cast<double>(n);
  }

  if (!traces.empty()) {
    std::vector<double> mean_trace(traces[0].size(), 0.0);
    for (const auto& t : traces)
      for (std::size_t k = 0; k < mean_trace.size() && k < t.size(); ++k)
        mean_trace[k] += t[k];
    for (double& v : mean_trace) v /= static_cast<double>(traces.size());
    if (mean_trace.size() >= 10) summary.sublinearity = sublinearity_test(mean_trace);
    atomic_write_file(root / "regret.svg",
                      regret_svg(traces, mean_trace, exp.algorithm + " cumulative regret"));
  }

  Json record{{"algorithm", exp.algorithm},
              {"seeds", exp.seeds.size()},
              {"failed_runs", summary.failed_runs},
              {"mean_final_cum_regret", summary.mean},
              {"median_final_cum_regret", summary.median},
              {"iqr_final_cum_regret", summary.iqr},
              {"retention_fraction", summary.retention_fraction},
              {"theory_events", summary.theory_events},
              {"ratio_pass", summary.sublinearity.ratio_pass},
              {"alpha", summary.sublinearity.alpha},
              {"any_hard_failure", summary.any_hard_failure}};
  atomic_write_file(root / "summary.json", record.dump(1) + "\n");
  return summary;
}

// Rebuilds every per-seed artifact from the persisted inputs and compares
// byte-for-byte against what the sweep wrote.
struct AuditOutcome {
  bool ok = true;
  std::vector<std::string> mismatches;
};

inline AuditOutcome audit_sweep(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  AuditOutcome outcome;
  const Json manifest = parse_json_file(root / "manifest.json");
  ResolvedExperiment exp;
  exp.algorithm = manifest.at("algorithm").get<std::string>();
  exp.algo_config = manifest.at("config");
  exp.opponent_spec = manifest.at("opponent");
  exp.game = load_game(root / "inputs" / "game.json");
  if (fs::exists(root / "inputs" / "values.json"))
    exp.values = value_family_from_json(parse_json_file(root / "inputs" / "values.json"));
  if (fs::exists(root / "inputs" / "policies.json"))
    exp.policies = policy_family_from_json(parse_json_file(root / "inputs" / "policies.json"));
  if (fs::exists(root / "inputs" / "models.json"))
    exp.models = model_family_from_json(parse_json_file(root / "inputs" / "models.json"));
  if (fs::exists(root / "inputs" / "tests.json"))
    exp.tests = test_family_from_json(parse_json_file(root / "inputs" / "tests.json"));
  if (fs::exists(root / "inputs" / "features.json"))
    exp.features = feature_map_from_json(parse_json_file(root / "inputs" / "features.json"));
  for (const Json& s : manifest.at("seeds")) exp.seeds.push_back(s.get<std::uint64_t>());

  for (std::uint64_t seed : exp.seeds) {
    const fs::path run_dir = root / ("seed-" + std::to_string(seed));
    if (!fs::exists(run_dir / "trace.csv")) continue;
    const RunArtifacts art = detail::run_one_seed(exp, seed);
    if (art.trace_csv != read_file(run_dir / "trace.csv")) {
      outcome.ok = false;
      outcome.mismatches.push_back(run_dir.string() + "/trace.csv");
    }
    if (art.episodes_jsonl != read_file(run_dir / "episodes.jsonl")) {
      outcome.ok = false;
      outcome.mismatches.push_back(run_dir.string() + "/episodes.jsonl");
    }
  }
  return outcome;
}

}  // namespace mglab
