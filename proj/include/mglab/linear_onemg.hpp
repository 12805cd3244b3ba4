#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mglab/game_solvers.hpp"
#include "mglab/hypothesis.hpp"
#include "mglab/onemg.hpp"

namespace mglab {

// Theory schedule: beta = C sqrt(d) log(HK/p).
inline double linear_theory_beta(int dim, int horizon, int episodes, double c, double p) {
  return c * std::sqrt(static_cast<double>(dim)) * std::log(horizon * episodes / p);
}

enum class PlanMode { diag_exact, search };

struct LinearOnemgConfig {
  int episodes = 100;
  std::optional<double> beta;
  double c_beta = 1.0;   // scales beta when derived from theory
  double c_width = 1.0;  // scales the parameter confidence width C * H * beta
  double p = 0.05;
  std::uint64_t seed = 0;
  PlanMode mode = PlanMode::diag_exact;
  int n_restarts = 16;

  double resolve_beta(int dim, int horizon) const {
    if (beta.has_value()) {
      if (*beta < 0.0) throw ConfigError("linear onemg: beta must be nonnegative");
      return *beta;
    }
    return linear_theory_beta(dim, horizon, std::max(episodes, 1), c_beta, p);
  }

  void validate() const {
    if (episodes < 0) throw ConfigError("linear onemg: episodes must be >= 0");
    if (n_restarts < 1) throw ConfigError("linear onemg: n_restarts must be >= 1");
  }
};

// Per-step regression state: Lambda_h = I + sum phi phi', the reward
// accumulator, and the transition-indexed feature sums needed to rebuild the
// regression target when the planned successor values change.
struct LinearLearnerState {
  int dim = 0;
  int horizon = 0;
  int num_states = 0;
  std::vector<Eigen::MatrixXd> gram;           // per h, d x d
  std::vector<Eigen::VectorXd> reward_sum;     // per h, sum phi * r
  std::vector<Eigen::MatrixXd> successor_sum;  // per h, d x S: sum phi * e_{x'}'
  std::vector<std::vector<Eigen::VectorXd>> realized_features;  // per h, per episode

  LinearLearnerState(int d, int h, int s)
      : dim(d), horizon(h), num_states(s), gram(h, Eigen::MatrixXd::Identity(d, d)),
        reward_sum(h, Eigen::VectorXd::Zero(d)),
        successor_sum(h, Eigen::MatrixXd::Zero(d, s)), realized_features(h) {}

  void absorb(const EpisodeRecord& ep, const FeatureMap& features) {
    for (const EpisodeStep& s : ep.steps) {
      const auto raw = features.at(s.h, s.x, s.a, s.b);
      Eigen::VectorXd phi(dim);
      for (int j = 0; j < dim; ++j) phi[j] = raw[j];
      gram[s.h].noalias() += phi * phi.transpose();
      reward_sum[s.h] += phi * s.r;
      successor_sum[s.h].col(s.x_next) += phi;
      realized_features[s.h].push_back(std::move(phi));
    }
  }
};

// Closed-form ridge solution w = Lambda^{-1} sum phi [r + V_next(x')], via
// an SPD factorization.
inline Eigen::VectorXd ridge_update(const LinearLearnerState& state, int h,
                                    const Eigen::VectorXd& v_next) {
  const Eigen::VectorXd target = state.reward_sum[h] + state.successor_sum[h] * v_next;
  const Eigen::LLT<Eigen::MatrixXd> llt(state.gram[h]);
  if (llt.info() != Eigen::Success)
    throw SolverError("ridge_update: Gram matrix is not positive definite", 0);
  return llt.solve(target);
}

struct OptimisticPlan {
  std::vector<Eigen::VectorXd> w;      // per h
  std::vector<Eigen::VectorXd> theta;  // per h
  StochasticPolicy pi;
  StochasticPolicy nu;
  std::vector<double> v;  // (h, x) planned values after clamping
  double objective = 0.0;  // V_1 at the initial state

  double v_at(int h, int x, int num_states) const {
    return v[static_cast<std::size_t>(h) * num_states + x];
  }
};

namespace detail {

// Backward induction for a fixed theta sequence: clamp Q to the per-level
// value range, solve the per-state matrix game, propagate the planned V.
inline void backward_plan(const MarkovGame& game, const FeatureMap& features,
                          OptimisticPlan& plan, double tol = 1e-9) {
  const int horizon = game.horizon;
  plan.pi = StochasticPolicy(horizon, game.num_states, game.num_actions1);
  plan.nu = StochasticPolicy(horizon, game.num_states, game.num_actions2);
  plan.v.assign(static_cast<std::size_t>(horizon) * game.num_states, 0.0);
  const double rmax = std::max(std::abs(game.reward_min), std::abs(game.reward_max));
  for (int h = horizon - 1; h >= 0; --h) {
    const double bound = (horizon - h) * rmax;
    for (int x = 0; x < game.num_states; ++x) {
      Mat payoff(game.num_actions1, game.num_actions2);
      for (int a = 0; a < game.num_actions1; ++a)
        for (int b = 0; b < game.num_actions2; ++b) {
          const auto phi = features.at(h, x, a, b);
          double q = 0.0;
          for (int j = 0; j < features.dim; ++j) q += phi[j] * plan.theta[h][j];
          payoff(a, b) = std::clamp(q, -bound, bound);
        }
      const MatrixGameSolution mg = solve_matrix_game(payoff, tol);
      plan.pi.set_row(h, x, mg.row_policy);
      plan.nu.set_row(h, x, mg.col_policy);
      plan.v[static_cast<std::size_t>(h) * game.num_states + x] = mg.value;
    }
  }
  plan.objective = plan.v[game.initial_state];
}

}  // namespace detail

// Optimistic planning subject to the per-step regression and confidence
// constraints.
//
// diag-exact: requires a diagonal Gram (one-hot features). Each coordinate
// of theta_h is pushed to its upper per-coordinate confidence bound
// w_j + width / sqrt(Lambda_jj); the matrix-game value is monotone in
// pointwise payoff increases, so backward induction on these upper bounds
// maximizes the planned value over the per-coordinate box (which contains
// the ellipsoid, hence optimism whenever the truth is ellipsoid-feasible).
//
// search: general features. Coordinate ascent over theta within the
// ellipsoids, seeded at theta = w plus random boundary restarts; a heuristic
// lower bound on the joint optimum, deterministic given the seed.
inline OptimisticPlan plan_optimistic(const MarkovGame& game, const FeatureMap& features,
                                      const LinearLearnerState& state, double width,
                                      PlanMode mode, int n_restarts = 16,
                                      std::uint64_t seed = 0) {
  const int horizon = game.horizon;
  const int d = features.dim;

  if (mode == PlanMode::diag_exact) {
    for (int h = 0; h < horizon; ++h)
      if (!state.gram[h].isDiagonal(1e-12))
        throw InputError("plan_optimistic: diag-exact mode needs a diagonal Gram matrix");
    OptimisticPlan plan;
    plan.w.assign(horizon, Eigen::VectorXd::Zero(d));
    plan.theta.assign(horizon, Eigen::VectorXd::Zero(d));
    plan.v.assign(static_cast<std::size_t>(horizon) * game.num_states, 0.0);
    plan.pi = StochasticPolicy(horizon, game.num_states, game.num_actions1);
    plan.nu = StochasticPolicy(horizon, game.num_states, game.num_actions2);
    const double rmax = std::max(std::abs(game.reward_min), std::abs(game.reward_max));
    Eigen::VectorXd v_next = Eigen::VectorXd::Zero(game.num_states);
    for (int h = horizon - 1; h >= 0; --h) {
      plan.w[h] = ridge_update(state, h, v_next);
      for (int j = 0; j < d; ++j)
        plan.theta[h][j] = plan.w[h][j] + width / std::sqrt(state.gram[h](j, j));
      const double bound = (horizon - h) * rmax;
      for (int x = 0; x < game.num_states; ++x) {
        Mat payoff(game.num_actions1, game.num_actions2);
        for (int a = 0; a < game.num_actions1; ++a)
          for (int b = 0; b < game.num_actions2; ++b) {
            const auto phi = features.at(h, x, a, b);
            double q = 0.0;
            for (int j = 0; j < d; ++j) q += phi[j] * plan.theta[h][j];
            payoff(a, b) = std::clamp(q, -bound, bound);
          }
        const MatrixGameSolution mg = solve_matrix_game(payoff);
        plan.pi.set_row(h, x, mg.row_policy);
        plan.nu.set_row(h, x, mg.col_policy);
        plan.v[static_cast<std::size_t>(h) * game.num_states + x] = mg.value;
      }
      for (int x = 0; x < game.num_states; ++x)
        v_next[x] = plan.v[static_cast<std::size_t>(h) * game.num_states + x];
    }
    plan.objective = plan.v[game.initial_state];
    return plan;
  }

  // search mode: evaluate a candidate theta-offset profile by rebuilding the
  // constraint-consistent plan backward (w depends on the planned V above).
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
  llts.reserve(horizon);
  for (int h = 0; h < horizon; ++h) llts.emplace_back(state.gram[h]);

  auto build = [&](const std::vector<Eigen::VectorXd>& offsets) {
    OptimisticPlan plan;
    plan.w.assign(horizon, Eigen::VectorXd::Zero(d));
    plan.theta.assign(horizon, Eigen::VectorXd::Zero(d));
    plan.v.assign(static_cast<std::size_t>(horizon) * game.num_states, 0.0);
    plan.pi = StochasticPolicy(horizon, game.num_states, game.num_actions1);
    plan.nu = StochasticPolicy(horizon, game.num_states, game.num_actions2);
    const double rmax = std::max(std::abs(game.reward_min), std::abs(game.reward_max));
    Eigen::VectorXd v_next = Eigen::VectorXd::Zero(game.num_states);
    for (int h = horizon - 1; h >= 0; --h) {
      plan.w[h] = llts[h].solve(state.reward_sum[h] + state.successor_sum[h] * v_next);
      // Scale the offset so ||theta - w||_Lambda <= width exactly.
      Eigen::VectorXd offset = offsets[h];
      const double norm = std::sqrt(offset.dot(state.gram[h] * offset));
      if (norm > 1e-14) offset *= width / norm;
      else offset.setZero();
      plan.theta[h] = plan.w[h] + offset;
      const double bound = (horizon - h) * rmax;
      for (int x = 0; x < game.num_states; ++x) {
        Mat payoff(game.num_actions1, game.num_actions2);
        for (int a = 0; a < game.num_actions1; ++a)
          for (int b = 0; b < game.num_actions2; ++b) {
            const auto phi = features.at(h, x, a, b);
            double q = 0.0;
            for (int j = 0; j < d; ++j) q += phi[j] * plan.theta[h][j];
            payoff(a, b) = std::clamp(q, -bound, bound);
          }
        const MatrixGameSolution mg = solve_matrix_game(payoff);
        plan.pi.set_row(h, x, mg.row_policy);
        plan.nu.set_row(h, x, mg.col_policy);
        plan.v[static_cast<std::size_t>(h) * game.num_states + x] = mg.value;
      }
      for (int x = 0; x < game.num_states; ++x)
        v_next[x] = plan.v[static_cast<std::size_t>(h) * game.num_states + x];
    }
    plan.objective = plan.v[game.initial_state];
    return plan;
  };

  auto rng = RngStream::root(seed, "linear-plan-search");
  std::vector<Eigen::VectorXd> zero(horizon, Eigen::VectorXd::Zero(d));
  OptimisticPlan best = build(zero);  // theta = w is always feasible
  for (int restart = 0; restart < n_restarts; ++restart) {
    auto stream = rng.child(restart);
    std::vector<Eigen::VectorXd> offsets(horizon, Eigen::VectorXd::Zero(d));
    for (int h = 0; h < horizon; ++h)
      for (int j = 0; j < d; ++j)
        offsets[h][j] = restart == 0 ? 1.0 : stream.next_uniform(-1.0, 1.0);
    OptimisticPlan cand = build(offsets);
    // One coordinate-ascent sweep around the restart point.
    for (int h = 0; h < horizon; ++h)
      for (int j = 0; j < d; ++j)
        for (double delta : {0.5, -0.5}) {
          std::vector<Eigen::VectorXd> tweaked = offsets;
          tweaked[h][j] += delta;
          OptimisticPlan alt = build(tweaked);
          if (alt.objective > cand.objective + 1e-12) {
            cand = alt;
            offsets = tweaked;
          }
        }
    if (cand.objective > best.objective + 1e-12) best = std::move(cand);
  }
  return best;
}

// All three quantities of the elliptic potential inequality
//   log det(Lambda_T)/det(Lambda_0) <= sum_i phi_i' Lambda_{i-1}^{-1} phi_i
//                                   <= 2 log det(Lambda_T)/det(Lambda_0)
// for Lambda_0 = I. Throws when a feature norm exceeds 1 or an inequality
// fails beyond tol.
struct EllipticPotential {
  double log_det_ratio = 0.0;
  double potential_sum = 0.0;
  double doubled_log_det = 0.0;
};

inline EllipticPotential elliptic_potential_check(const std::vector<Eigen::VectorXd>& phis,
                                                  double tol = 1e-9) {
  if (phis.empty()) return {0.0, 0.0, 0.0};
  const int d = static_cast<int>(phis[0].size());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(d, d);
  double mid = 0.0;
  for (const Eigen::VectorXd& phi : phis) {
    if (phi.norm() > 1.0 + 1e-12)
      throw InputError("elliptic_potential_check: feature norm exceeds 1");
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    mid += phi.dot(llt.solve(phi));
    gram.noalias() += phi * phi.transpose();
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  double log_det = 0.0;
  for (int j = 0; j < d; ++j) log_det += 2.0 * std::log(llt.matrixL()(j, j));
  EllipticPotential out{log_det, mid, 2.0 * log_det};
  if (!(out.log_det_ratio <= out.potential_sum + tol &&
        out.potential_sum <= out.doubled_log_det + tol))
    throw AuditError("elliptic potential inequality violated: " +
                     std::to_string(out.log_det_ratio) + " <= " +
                     std::to_string(out.potential_sum) + " <= " +
                     std::to_string(out.doubled_log_det));
  return out;
}

// Feasibility of the exact solution under the current data: with one-hot
// features theta*_h is Q*_h itself, w*_h is the ridge solution against the
// true successor values, and the constraint asks ||theta* - w*||_Lambda to
// fit in the width.
struct FeasibilityReport {
  bool feasible = false;
  double worst_norm = 0.0;
  double width = 0.0;
};

inline FeasibilityReport theta_star_feasibility(const MarkovGame& game,
                                                const FeatureMap& features,
                                                const LinearLearnerState& state,
                                                const GameSolution& sol, double width,
                                                double tol = 1e-8) {
  if (!features.is_one_hot())
    throw InputError("theta_star_feasibility: defined for one-hot features only");
  FeasibilityReport rep;
  rep.width = width;
  for (int h = 0; h < game.horizon; ++h) {
    Eigen::VectorXd v_next = Eigen::VectorXd::Zero(game.num_states);
    if (h + 1 < game.horizon)
      for (int x = 0; x < game.num_states; ++x) v_next[x] = sol.v(h + 1, x);
    const Eigen::VectorXd w = ridge_update(state, h, v_next);
    Eigen::VectorXd theta_star(features.dim);
    for (int x = 0; x < game.num_states; ++x)
      for (int a = 0; a < game.num_actions1; ++a)
        for (int b = 0; b < game.num_actions2; ++b) {
          const auto phi = features.at(h, x, a, b);
          for (int j = 0; j < features.dim; ++j)
            if (phi[j] == 1.0) theta_star[j] = sol.q(h, x, a, b);
        }
    const Eigen::VectorXd diff = theta_star - w;
    rep.worst_norm = std::max(rep.worst_norm, std::sqrt(diff.dot(state.gram[h] * diff)));
  }
  rep.feasible = rep.worst_norm <= width + tol;
  return rep;
}

struct LinearTraceRow {
  int k = 0;
  double regret_increment = 0.0;
  double cum_regret = 0.0;
  double planned_value = 0.0;
  bool theta_star_feasible = false;
  double feasibility_norm = 0.0;
};

struct LinearOnemgResult {
  std::vector<LinearTraceRow> trace;
  std::vector<OnemgEpisodeLog> episodes;
  LinearLearnerState state{1, 1, 1};
  double v_star = 0.0;
  double beta = 0.0;
  double width = 0.0;

  double final_cum_regret() const { return trace.empty() ? 0.0 : trace.back().cum_regret; }
};

inline LinearOnemgResult run_linear(const MarkovGame& game, const FeatureMap& features,
                                    const LinearOnemgConfig& config, const Opponent& opponent) {
  config.validate();
  game.validate();
  features.validate();
  if (features.horizon != game.horizon || features.num_states != game.num_states ||
      features.num_actions1 != game.num_actions1 ||
      features.num_actions2 != game.num_actions2)
    throw InputError("run_linear: feature map shape disagrees with the game");

  const GameSolution sol = ne_value_iteration(game);
  const double v_star = game_value(game, sol);
  const double beta = config.resolve_beta(features.dim, game.horizon);
  const double width = config.c_width * game.horizon * beta;
  const bool one_hot = features.is_one_hot();

  LinearOnemgResult result;
  result.v_star = v_star;
  result.beta = beta;
  result.width = width;
  result.state = LinearLearnerState(features.dim, game.horizon, game.num_states);

  auto rng = RngStream::root(config.seed, "linear-onemg");
  double cum = 0.0;
  for (int k = 1; k <= config.episodes; ++k) {
    const OptimisticPlan plan =
        plan_optimistic(game, features, result.state, width, config.mode, config.n_restarts,
                        rng.child(0).child(k).key());
    const StochasticPolicy nu_k =
        opponent_policy_for_episode(opponent, game, &sol, k, plan.pi);
    const double value = evaluate_policy_pair(game, plan.pi, nu_k);
    cum += v_star - value;

    auto stream = rng.child(static_cast<std::uint64_t>(k));
    EpisodeRecord ep = sample_episode(game, plan.pi, nu_k, stream);
    result.state.absorb(ep, features);

    LinearTraceRow row;
    row.k = k;
    row.regret_increment = v_star - value;
    row.cum_regret = cum;
    row.planned_value = plan.objective;
    if (one_hot) {
      const FeasibilityReport rep =
          theta_star_feasibility(game, features, result.state, sol, width);
      row.theta_star_feasible = rep.feasible;
      row.feasibility_norm = rep.worst_norm;
    }
    result.trace.push_back(row);
    result.episodes.push_back({std::move(ep), nu_k});
  }
  return result;
}

}  // namespace mglab
