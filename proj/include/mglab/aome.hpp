#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mglab/game_solvers.hpp"
#include "mglab/hypothesis.hpp"
#include "mglab/markov_game.hpp"
#include "mglab/rng.hpp"

namespace mglab {

// Theory-scale constants and the desk-scale shortcuts actually used in
// small experiments.
inline double aome_theory_phi(double kappa, double eps, int horizon, double witness_rank) {
  return kappa * eps / (100.0 * horizon * std::sqrt(witness_rank));
}
inline double aome_desk_phi(double kappa, double eps, int horizon) {
  return kappa * eps / (10.0 * horizon);
}
inline int aome_theory_n1(double c, int horizon, int rounds, double p, double eps) {
  return static_cast<int>(std::ceil(c * horizon * horizon * std::log(horizon * rounds / p) /
                                    (eps * eps)));
}
inline int aome_theory_n(double c, int horizon, double witness_rank, int num_actions,
                         int rounds, std::size_t models, std::size_t tests, double p,
                         double kappa, double eps) {
  return static_cast<int>(std::ceil(c * horizon * horizon * witness_rank * num_actions *
                                    std::log(rounds * models * tests / p) /
                                    (kappa * eps * kappa * eps)));
}

struct AomeConfig {
  double epsilon = 0.1;
  double p = 0.05;
  double kappa = 1.0;
  std::optional<double> phi;  // elimination threshold; desk formula when unset
  int n1 = 500;
  int n = 500;
  int round_cap = 50;
  double witness_rank = 1.0;  // user-supplied surrogate W
  std::uint64_t seed = 0;
  // Eq. (4)'s successor value: level h+1 at x_{h+1} (default) or the printed
  // level-h reading.
  bool successor_level_next = true;

  double resolve_phi(int horizon) const {
    if (phi.has_value()) {
      if (*phi <= 0.0) throw ConfigError("aome: phi must be positive");
      return *phi;
    }
    return aome_desk_phi(kappa, epsilon, horizon);
  }

  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("aome: epsilon must be in (0,1]");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("aome: kappa must be in (0,1]");
    if (n1 < 1 || n < 1) throw ConfigError("aome: rollout counts must be >= 1");
    if (round_cap < 1) throw ConfigError("aome: round cap must be >= 1");
  }
};

struct ModelVersionSpace {
  std::vector<int> surviving;
  bool contains(int idx) const {
    return std::find(surviving.begin(), surviving.end(), idx) != surviving.end();
  }
  std::size_t size() const { return surviving.size(); }
};

// Mean return and its standard error over n1 rollouts; also hands back the
// episodes so later stages reuse the same data.
struct ValueEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::vector<EpisodeRecord> rollouts;
};

inline ValueEstimate estimate_value(const MarkovGame& game, const StochasticPolicy& pi,
                                    const StochasticPolicy& nu, int n1, RngStream stream) {
  if (n1 < 1) throw InputError("estimate_value: n1 must be >= 1");
  ValueEstimate est;
  est.rollouts.reserve(n1);
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n1; ++i) {
    auto child = stream.child(i);
    est.rollouts.push_back(sample_episode(game, pi, nu, child));
    const double ret = est.rollouts.back().total_return();
    sum += ret;
    sum_sq += ret * ret;
  }
  est.mean = sum / n1;
  est.se = std::sqrt(std::max(0.0, sum_sq / n1 - est.mean * est.mean) / n1);
  return est;
}

// Line-8 check: both chosen models' predicted values sit within eps/2 of the
// rollout estimate.
inline bool termination_test(double v_hat, double q_m1, double q_m2, double eps) {
  return std::max(std::abs(v_hat - q_m1), std::abs(v_hat - q_m2)) <= eps / 2.0;
}

// Empirical Bellman error of model M at level h over a batch of rollouts
// executed in the true game:
//   mean_i [ Q_{M,h}(x_h, a_h, b_h) - (r_h + V_{M,h+1}(x_{h+1})) ]
// where Q_M / V_M are the values of executing the behavior pair inside M.
inline double empirical_bellman_error(const std::vector<EpisodeRecord>& rollouts,
                                      const PairValues& model_values, int h,
                                      bool successor_level_next = true) {
  if (rollouts.empty()) return 0.0;
  const int horizon = static_cast<int>(rollouts[0].steps.size());
  double sum = 0.0;
  for (const EpisodeRecord& ep : rollouts) {
    const EpisodeStep& s = ep.steps[h];
    double successor = 0.0;
    if (successor_level_next) {
      if (h + 1 < horizon) successor = model_values.v_at(h + 1, s.x_next);
    } else {
      successor = model_values.v_at(h, s.x_next);
    }
    sum += model_values.q_at(h, s.x, s.a, s.b) - (s.r + successor);
  }
  return sum / static_cast<double>(rollouts.size());
}

// Smallest level whose empirical Bellman error (for either chosen model)
// clears eps/(4H). When no level clears it the round is inconclusive and the
// argmax level is used instead.
struct ViolationLevel {
  int level = 0;
  bool inconclusive = false;
  double max_abs_error = 0.0;
};

inline ViolationLevel locate_violation(const std::vector<double>& lhat_m1,
                                       const std::vector<double>& lhat_m2, double eps,
                                       int horizon) {
  const double threshold = eps / (4.0 * horizon);
  ViolationLevel out;
  double best = -1.0;
  for (int h = 0; h < horizon; ++h) {
    const double m = std::max(std::abs(lhat_m1[h]), std::abs(lhat_m2[h]));
    if (m > best) {
      best = m;
      out.level = h;
    }
  }
  out.max_abs_error = best;
  for (int h = 0; h < horizon; ++h) {
    const double m = std::max(std::abs(lhat_m1[h]), std::abs(lhat_m2[h]));
    if (m >= threshold) {
      out.level = h;
      out.inconclusive = false;
      return out;
    }
  }
  out.inconclusive = true;
  return out;
}

// Model-side expectation of a test function, exact because models are
// tabular with deterministic rewards: sum_x' P^M(x'|x,a,b) g(x,a,b,r^M,x').
inline double model_expectation(const MarkovGame& model, const TestFunction& g, int h, int x,
                                int a, int b) {
  const double r = model.r(h, x, a, b);
  const auto dist = model.next_state_dist(h, x, a, b);
  double sum = 0.0;
  for (int x2 = 0; x2 < model.num_states; ++x2)
    if (dist[x2] != 0.0) sum += dist[x2] * g.eval(x, a, b, r, x2);
  return sum;
}

// Empirical witnessed misfit at a level: sup over the finite test family of
// the mean gap between model-predicted and observed test values.
inline double empirical_model_misfit(const std::vector<EpisodeRecord>& batch, int h,
                                     const MarkovGame& model, const TestFunctionFamily& tests) {
  if (tests.members.empty()) throw InputError("empirical_model_misfit: empty test family");
  double sup = -std::numeric_limits<double>::infinity();
  for (const TestFunction& g : tests.members) {
    double sum = 0.0;
    for (const EpisodeRecord& ep : batch) {
      const EpisodeStep& s = ep.steps[h];
      sum += model_expectation(model, g, h, s.x, s.a, s.b) - g.eval(s.x, s.a, s.b, s.r, s.x_next);
    }
    sup = std::max(sup, sum / static_cast<double>(batch.size()));
  }
  return sup;
}

// The behavior pair induced by two models: P1 plays M1's NE policy, P2 plays
// the best response to it inside M2.
inline std::pair<StochasticPolicy, StochasticPolicy> induced_behavior_pair(
    const MarkovGame& m1, const GameSolution& m1_solution, const MarkovGame& m2) {
  StochasticPolicy pi = m1_solution.pi_star;
  StochasticPolicy nu = best_response_value_iteration(m2, pi, FixedSide::player1).first;
  return {std::move(pi), std::move(nu)};
}

// Exact witnessed misfit: outer expectation over the true-game roll-in of
// (pi^{M1}, nu_{pi}^{M2}) at level h, inner expectations exact on both
// sides. The sup over tests of a signed quantity; reported as-is.
inline double exact_witness_misfit(const MarkovGame& true_game, const MarkovGame& m1,
                                   const GameSolution& m1_solution, const MarkovGame& m2,
                                   const MarkovGame& model, int h,
                                   const TestFunctionFamily& tests) {
  const auto [pi, nu] = induced_behavior_pair(m1, m1_solution, m2);
  const Occupancy occ = occupancy_measures(true_game, pi, nu);
  double sup = -std::numeric_limits<double>::infinity();
  for (const TestFunction& g : tests.members) {
    double total = 0.0;
    for (int x = 0; x < true_game.num_states; ++x)
      for (int a = 0; a < true_game.num_actions1; ++a)
        for (int b = 0; b < true_game.num_actions2; ++b) {
          const double w = occ.cell[true_game.cell(h, x, a, b)];
          if (w == 0.0) continue;
          total += w * (model_expectation(model, g, h, x, a, b) -
                        model_expectation(true_game, g, h, x, a, b));
        }
    sup = std::max(sup, total);
  }
  return sup;
}

// Exact generalized Bellman error: the witnessed-misfit expression
// instantiated with g = r + V_M(x', behavior pair), i.e. the exact mean of
// Q_M minus its true-model one-step backup along the roll-in.
inline double exact_bellman_error(const MarkovGame& true_game, const MarkovGame& m1,
                                  const GameSolution& m1_solution, const MarkovGame& m2,
                                  const MarkovGame& model, int h) {
  const auto [pi, nu] = induced_behavior_pair(m1, m1_solution, m2);
  const Occupancy occ = occupancy_measures(true_game, pi, nu);
  const PairValues mv = policy_pair_values(model, pi, nu);
  double total = 0.0;
  for (int x = 0; x < true_game.num_states; ++x)
    for (int a = 0; a < true_game.num_actions1; ++a)
      for (int b = 0; b < true_game.num_actions2; ++b) {
        const double w = occ.cell[true_game.cell(h, x, a, b)];
        if (w == 0.0) continue;
        double backup = true_game.r(h, x, a, b);
        if (h + 1 < true_game.horizon) {
          const auto dist = true_game.next_state_dist(h, x, a, b);
          for (int x2 = 0; x2 < true_game.num_states; ++x2)
            backup += dist[x2] * mv.v_at(h + 1, x2);
        }
        total += w * (mv.q_at(h, x, a, b) - backup);
      }
  return total;
}

// |Q_M(x1, pi, nu) - V^{pi,nu}(x1) - sum_h L(M1, M2, M, h)|; exactly zero on
// tabular instances, the module's strongest oracle.
inline double simulation_lemma_check(const MarkovGame& true_game, const MarkovGame& m1,
                                     const GameSolution& m1_solution, const MarkovGame& m2,
                                     const MarkovGame& model) {
  const auto [pi, nu] = induced_behavior_pair(m1, m1_solution, m2);
  const double in_model = evaluate_policy_pair(model, pi, nu);
  const double in_truth = evaluate_policy_pair(true_game, pi, nu);
  double sum = 0.0;
  for (int h = 0; h < true_game.horizon; ++h)
    sum += exact_bellman_error(true_game, m1, m1_solution, m2, model, h);
  return std::abs(in_model - in_truth - sum);
}

// Assumption checker: exact witnessed misfit dominates the exact Bellman
// error for every model triple and level. A report, not an assertion.
struct WitnessDominationReport {
  struct Violation {
    int m1, m2, m, h;
    double misfit, bellman_error;
  };
  std::vector<Violation> violations;
  bool holds() const { return violations.empty(); }
};

inline WitnessDominationReport check_witness_domination(const MarkovGame& true_game,
                                                        const ModelFamily& models,
                                                        const TestFunctionFamily& tests,
                                                        double tol = 1e-9) {
  WitnessDominationReport report;
  std::vector<GameSolution> solutions;
  solutions.reserve(models.size());
  for (const MarkovGame& m : models.members) solutions.push_back(ne_value_iteration(m));
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = 0; j < models.size(); ++j)
      for (std::size_t m = 0; m < models.size(); ++m)
        for (int h = 0; h < true_game.horizon; ++h) {
          const double misfit = exact_witness_misfit(true_game, models.members[i], solutions[i],
                                                     models.members[j], models.members[m], h,
                                                     tests);
          const double bellman = exact_bellman_error(true_game, models.members[i], solutions[i],
                                                     models.members[j], models.members[m], h);
          if (misfit < bellman - tol)
            report.violations.push_back({static_cast<int>(i), static_cast<int>(j),
                                         static_cast<int>(m), h, misfit, bellman});
        }
  return report;
}

struct AomeRoundLog {
  int round = 0;
  int m1 = 0;
  int m2 = 0;
  double v_hat = 0.0;
  double v_hat_se = 0.0;
  bool terminated = false;
  int level = -1;
  bool inconclusive = false;
  double max_bellman_error = 0.0;
  int eliminated = 0;
  int survivors = 0;
  bool mstar_present = false;
};

struct AomeResult {
  std::vector<AomeRoundLog> rounds;
  bool terminated = false;
  bool aborted_empty = false;
  int termination_round = -1;
  StochasticPolicy pi_out;
  StochasticPolicy nu_out;
  double v_hat = 0.0;
  double v_hat_se = 0.0;
  ModelVersionSpace final_survivors;
  int mstar_index = -1;
  long trajectories = 0;
};

// Alternate optimistic model elimination: optimistic NE-value model for P1,
// pessimistic best-response model for P2, rollout termination test, misfit
// elimination at the located level.
class AomeRunner {
 public:
  AomeRunner(const MarkovGame& game, ModelFamily models, TestFunctionFamily tests,
             AomeConfig config)
      : game_(game), models_(std::move(models)), tests_(std::move(tests)),
        config_(std::move(config)) {
    config_.validate();
    game_.validate();
    models_.validate();
    tests_.validate(game_.reward_min, game_.reward_max);
    const MarkovGame& proto = models_.members[0];
    if (proto.horizon != game_.horizon || proto.num_states != game_.num_states ||
        proto.num_actions1 != game_.num_actions1 || proto.num_actions2 != game_.num_actions2)
      throw InputError("aome: model family and game shapes disagree");
    for (std::size_t i = 0; i < models_.size(); ++i) {
      solutions_.push_back(ne_value_iteration(models_.members[i]));
      if (mstar_ < 0 && models_.members[i] == game_) mstar_ = static_cast<int>(i);
    }
  }

  // NE solution of a candidate model (cached).
  const GameSolution& model_nash(int idx) const { return solutions_[idx]; }
  int mstar_index() const { return mstar_; }

  // Lines 4-5 over the surviving set: optimistic model by NE value at x1,
  // then pessimistic model by best-response value against pi; ties to the
  // lowest index. Returns (m1, pi, m2, nu).
  struct Selection {
    int m1 = 0;
    int m2 = 0;
    StochasticPolicy pi;
    StochasticPolicy nu;
  };

  Selection alternate_optimism(const ModelVersionSpace& vspace) const {
    if (vspace.surviving.empty()) throw InputError("alternate_optimism: empty version space");
    Selection sel;
    double best = -std::numeric_limits<double>::infinity();
    for (int idx : vspace.surviving) {
      const double v = solutions_[idx].v(0, game_.initial_state);
      if (v > best) {
        best = v;
        sel.m1 = idx;
      }
    }
    sel.pi = solutions_[sel.m1].pi_star;
    double worst = std::numeric_limits<double>::infinity();
    for (int idx : vspace.surviving) {
      const double v =
          best_response_value_iteration(models_.members[idx], sel.pi, FixedSide::player1).second;
      if (v < worst) {
        worst = v;
        sel.m2 = idx;
      }
    }
    sel.nu =
        best_response_value_iteration(models_.members[sel.m2], sel.pi, FixedSide::player1).first;
    return sel;
  }

  AomeResult run() {
    const int horizon = game_.horizon;
    const double phi = config_.resolve_phi(horizon);

    AomeResult result;
    result.mstar_index = mstar_;
    ModelVersionSpace vspace;
    for (std::size_t i = 0; i < models_.size(); ++i)
      vspace.surviving.push_back(static_cast<int>(i));

    auto rng = RngStream::root(config_.seed, "aome");
    for (int round = 1; round <= config_.round_cap; ++round) {
      const Selection sel = alternate_optimism(vspace);

      const ValueEstimate est =
          estimate_value(game_, sel.pi, sel.nu, config_.n1, rng.child(round).child(0));
      const std::vector<EpisodeRecord>& rollouts = est.rollouts;
      result.trajectories += config_.n1;
      const double v_hat = est.mean;
      const double v_hat_se = est.se;

      AomeRoundLog log;
      log.round = round;
      log.m1 = sel.m1;
      log.m2 = sel.m2;
      log.v_hat = v_hat;
      log.v_hat_se = v_hat_se;
      log.mstar_present = mstar_ >= 0 && vspace.contains(mstar_);

      const double q1 = evaluate_policy_pair(models_.members[sel.m1], sel.pi, sel.nu);
      const double q2 = evaluate_policy_pair(models_.members[sel.m2], sel.pi, sel.nu);
      if (termination_test(v_hat, q1, q2, config_.epsilon)) {
        log.terminated = true;
        log.survivors = static_cast<int>(vspace.size());
        result.rounds.push_back(log);
        result.terminated = true;
        result.termination_round = round;
        result.pi_out = sel.pi;
        result.nu_out = sel.nu;
        result.v_hat = v_hat;
        result.v_hat_se = v_hat_se;
        result.final_survivors = vspace;
        return result;
      }

      // Localize the violated level from the same value rollouts.
      std::vector<double> lhat_m1(horizon), lhat_m2(horizon);
      const PairValues pv1 = policy_pair_values(models_.members[sel.m1], sel.pi, sel.nu);
      const PairValues pv2 = policy_pair_values(models_.members[sel.m2], sel.pi, sel.nu);
      for (int h = 0; h < horizon; ++h) {
        lhat_m1[h] = empirical_bellman_error(rollouts, pv1, h, config_.successor_level_next);
        lhat_m2[h] = empirical_bellman_error(rollouts, pv2, h, config_.successor_level_next);
      }
      const ViolationLevel viol = locate_violation(lhat_m1, lhat_m2, config_.epsilon, horizon);
      log.level = viol.level;
      log.inconclusive = viol.inconclusive;
      log.max_bellman_error = viol.max_abs_error;

      auto data_stream = rng.child(round).child(1);
      std::vector<EpisodeRecord> batch;
      batch.reserve(config_.n);
      for (int i = 0; i < config_.n; ++i) {
        auto stream = data_stream.child(i);
        batch.push_back(sample_episode(game_, sel.pi, sel.nu, stream));
      }
      result.trajectories += config_.n;

      ModelVersionSpace next;
      for (int idx : vspace.surviving)
        if (empirical_model_misfit(batch, viol.level, models_.members[idx], tests_) <= phi)
          next.surviving.push_back(idx);
      log.eliminated = static_cast<int>(vspace.size() - next.size());
      log.survivors = static_cast<int>(next.size());
      result.rounds.push_back(log);

      if (next.surviving.empty()) {
        result.aborted_empty = true;
        result.final_survivors = next;
        return result;
      }
      vspace = next;
    }
    result.final_survivors = vspace;
    return result;
  }

  const MarkovGame& game() const { return game_; }
  const ModelFamily& models() const { return models_; }

 private:
  MarkovGame game_;
  ModelFamily models_;
  TestFunctionFamily tests_;
  AomeConfig config_;
  std::vector<GameSolution> solutions_;
  int mstar_ = -1;
};

inline AomeResult run_aome(const MarkovGame& game, const ModelFamily& models,
                           const TestFunctionFamily& tests, const AomeConfig& config) {
  AomeRunner runner(game, models, tests, config);
  return runner.run();
}

}  // namespace mglab
