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
#include "mglab/onemg.hpp"
#include "mglab/rng.hpp"

namespace mglab {

// The same hypothesis seen from P2's seat: actions transposed, sign flipped.
inline ValueHypothesis swap_hypothesis(const ValueHypothesis& f) {
  ValueHypothesis s(f.horizon, f.num_states, f.num_actions2, f.num_actions1);
  for (int h = 0; h < f.horizon; ++h)
    for (int x = 0; x < f.num_states; ++x)
      for (int a = 0; a < f.num_actions1; ++a)
        for (int b = 0; b < f.num_actions2; ++b) s.at(h, x, b, a) = -f.at(h, x, a, b);
  return s;
}

inline FiniteValueFamily swap_value_family(const FiniteValueFamily& fam) {
  FiniteValueFamily s;
  s.truth_tags = fam.truth_tags;
  s.members.reserve(fam.size());
  for (const ValueHypothesis& f : fam.members) s.members.push_back(swap_hypothesis(f));
  return s;
}

// Squared loss with the policy-restricted successor value
//   sum_tau [xi_h(x,a,b) - r - zeta_{h+1}(x', pi, nu_pi^zeta)]^2,
// nu_pi^zeta being the per-state best response to pi inside zeta restricted
// to the policy family.
inline double pair_loss(const ReplayBuffer& buffer, int h, const ValueHypothesis& xi,
                        const ValueHypothesis& zeta, const StochasticPolicy& pi,
                        const PolicyFamily& policies) {
  const bool last = h + 1 >= xi.horizon;
  std::vector<double> successor;
  if (!last) {
    successor.resize(xi.num_states);
    for (int x = 0; x < xi.num_states; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (const StochasticPolicy& member : policies.members)
        best = std::min(best, zeta.expected(h + 1, x, pi.row(h + 1, x), member.row(h + 1, x)));
      successor[x] = best;
    }
  }
  double sum = 0.0;
  for (const Transition& t : buffer.levels[h]) {
    const double diff = xi.at(h, t.x, t.a, t.b) - (t.r + (last ? 0.0 : successor[t.x_next]));
    sum += diff * diff;
  }
  return sum;
}

struct AoveConfig {
  enum class Role { p1, p2, both };
  int episodes = 100;
  std::optional<double> beta;
  double c = 2.0;
  double p = 0.05;
  std::uint64_t seed = 0;
  Role role = Role::p1;

  double resolve_beta(std::size_t value_members, std::size_t policy_members, int horizon) const {
    if (beta.has_value()) {
      if (*beta < 0.0) throw ConfigError("aove: beta must be nonnegative");
      return *beta;
    }
    return c * std::log(static_cast<double>(value_members) *
                        static_cast<double>(policy_members) * horizon * episodes / p);
  }

  void validate() const {
    if (episodes < 1) throw ConfigError("aove: episodes must be >= 1");
  }
};

struct AoveTraceRow {
  int k = 0;
  int pi_index = 0;
  int f_index = 0;
  int g_index = 0;
  double regret_increment = 0.0;    // restricted best responses
  double cum_regret = 0.0;
  double regret_increment_unrestricted = 0.0;
  double cum_regret_unrestricted = 0.0;
  int pair_count = 0;
  double upper_bound_slack = 0.0;  // f_1 - g_1 at the initial state
  double duality_gap = 0.0;        // of the executed pair, restricted
  bool fallback = false;
  bool truths_present = false;
};

struct AoveResult {
  std::vector<AoveTraceRow> trace;
  std::vector<OnemgEpisodeLog> episodes;  // opponent_policy holds nu^k
  std::vector<std::pair<int, int>> final_pairs;
  double v_star_restricted = 0.0;    // max_pi min_nu over the policy family
  double v_star_unrestricted = 0.0;  // max_pi of exact best-response values
  double beta = 0.0;
  int fallback_events = 0;
  bool family_tagged = false;

  double final_cum_regret() const { return trace.empty() ? 0.0 : trace.back().cum_regret; }
};

// Fraction of episodes in which every tagged truth pair survived. Empty when
// the family carries no tags.
inline std::optional<double> truth_pair_retention_audit(const AoveResult& result) {
  if (!result.family_tagged) return std::nullopt;
  if (result.trace.empty()) return 1.0;
  std::size_t good = 0;
  for (const AoveTraceRow& row : result.trace)
    if (row.truths_present) ++good;
  return static_cast<double>(good) / static_cast<double>(result.trace.size());
}

// Coordinated model-free learner over (policy, value) pairs with alternate
// optimism at the initial state.
class AoveRunner {
 public:
  AoveRunner(const MarkovGame& game, const PolicyFamily& policies,
             const FiniteValueFamily& values, AoveConfig config)
      : game_(game), policies_(policies), values_(values), config_(std::move(config)) {
    config_.validate();
    game_.validate();
    policies_.validate();
    values_.validate();
    const auto& vp = values_.members[0];
    const auto& pp = policies_.members[0];
    if (vp.horizon != game_.horizon || vp.num_states != game_.num_states ||
        vp.num_actions1 != game_.num_actions1 || vp.num_actions2 != game_.num_actions2 ||
        pp.horizon != game_.horizon || pp.num_states != game_.num_states ||
        pp.num_actions != game_.num_actions1)
      throw InputError("aove: family shapes disagree with the game");
    if (game_.num_actions1 != game_.num_actions2)
      throw InputError("aove: the shared policy class needs matching action counts");
    precompute();
  }

  AoveResult run() {
    const int horizon = game_.horizon;
    const std::size_t nf = values_.size();
    const std::size_t np = policies_.size();
    const double beta = config_.resolve_beta(nf, np, horizon);

    AoveResult result;
    result.beta = beta;
    result.family_tagged = values_.tagged();
    result.v_star_restricted = v_star_restricted_;
    result.v_star_unrestricted = v_star_unrestricted_;

    // Running sums indexed (g, f, pi, h); g is a level component, f the
    // successor tuple, pi the restriction policy.
    std::vector<double> sums(nf * nf * np * horizon, 0.0);
    auto sum_at = [&](std::size_t g, std::size_t f, std::size_t pi, int h) -> double& {
      return sums[((g * nf + f) * np + pi) * horizon + h];
    };

    std::vector<std::pair<int, int>> alive;  // (pi, f), pi-major lexicographic
    for (std::size_t pi = 0; pi < np; ++pi)
      for (std::size_t f = 0; f < nf; ++f)
        alive.emplace_back(static_cast<int>(pi), static_cast<int>(f));

    auto rng = RngStream::root(config_.seed, "aove");
    double cum = 0.0, cum_u = 0.0;
    for (int k = 1; k <= config_.episodes; ++k) {
      const bool truths_present = values_.tagged() && all_truths_alive(alive);

      // Line 5: optimistic pair, ties lexicographic in (pi, f).
      int pi_k = alive[0].first, f_k = alive[0].second;
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& [pi, f] : alive) {
        const double v = init_value_[pi * nf + f];
        if (v > best) {
          best = v;
          pi_k = pi;
          f_k = f;
        }
      }
      // Line 6: pessimistic hypothesis sharing pi_k; (pi_k, f_k) survives, so
      // a candidate always exists.
      int g_k = f_k;
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& [pi, f] : alive) {
        if (pi != pi_k) continue;
        const double v = init_value_[pi * nf + f];
        if (v < worst) {
          worst = v;
          g_k = f;
        }
      }

      const StochasticPolicy& pi_policy = policies_.members[pi_k];
      const StochasticPolicy nu_k = restricted_best_response(g_k, pi_k);

      const double inc = v_star_restricted_ - restricted_br_value_[pi_k];
      const double inc_u = v_star_unrestricted_ - unrestricted_br_value_[pi_k];
      cum += inc;
      cum_u += inc_u;

      double exploit_nu = -std::numeric_limits<double>::infinity();
      for (const StochasticPolicy& member : policies_.members)
        exploit_nu = std::max(exploit_nu, evaluate_policy_pair(game_, member, nu_k));

      auto stream = rng.child(static_cast<std::uint64_t>(k));
      EpisodeRecord ep = sample_episode(game_, pi_policy, nu_k, stream);
      for (const EpisodeStep& s : ep.steps) {
        const bool last = s.h + 1 >= horizon;
        for (std::size_t f = 0; f < nf; ++f)
          for (std::size_t pi = 0; pi < np; ++pi) {
            const double target =
                s.r + (last ? 0.0 : successor_value_[((f * np + pi) * horizon + s.h + 1) *
                                                         game_.num_states +
                                                     s.x_next]);
            for (std::size_t g = 0; g < nf; ++g) {
              const double diff = values_.members[g].at(s.h, s.x, s.a, s.b) - target;
              sum_at(g, f, pi, s.h) += diff * diff;
            }
          }
      }

      // Line 12: rebuild the surviving set against the full product.
      std::vector<std::pair<int, int>> next;
      double best_excess = std::numeric_limits<double>::infinity();
      std::pair<int, int> best_pair{0, 0};
      for (std::size_t pi = 0; pi < np; ++pi)
        for (std::size_t f = 0; f < nf; ++f) {
          bool ok = true;
          double excess = 0.0;
          for (int h = 0; h < horizon; ++h) {
            double lo = std::numeric_limits<double>::infinity();
            for (std::size_t g = 0; g < nf; ++g) lo = std::min(lo, sum_at(g, f, pi, h));
            const double self = sum_at(f, f, pi, h);
            excess += self - lo;
            if (self > lo + beta) ok = false;
          }
          if (ok) next.emplace_back(static_cast<int>(pi), static_cast<int>(f));
          if (excess < best_excess) {
            best_excess = excess;
            best_pair = {static_cast<int>(pi), static_cast<int>(f)};
          }
        }
      bool fallback = false;
      if (next.empty()) {
        next.push_back(best_pair);
        fallback = true;
        ++result.fallback_events;
      }
      alive = std::move(next);

      AoveTraceRow row;
      row.k = k;
      row.pi_index = pi_k;
      row.f_index = f_k;
      row.g_index = g_k;
      row.regret_increment = inc;
      row.cum_regret = cum;
      row.regret_increment_unrestricted = inc_u;
      row.cum_regret_unrestricted = cum_u;
      row.pair_count = static_cast<int>(alive.size());
      row.upper_bound_slack = init_value_[pi_k * nf + f_k] - init_value_[pi_k * nf + g_k];
      row.duality_gap = exploit_nu - restricted_br_value_[pi_k];
      row.fallback = fallback;
      row.truths_present = truths_present;
      result.trace.push_back(row);
      result.episodes.push_back({std::move(ep), nu_k});
    }
    result.final_pairs = alive;
    return result;
  }

  // nu_pi^f: per (h, x) the family member minimizing the expected value of f
  // under (pi, .), ties to the lowest member index.
  StochasticPolicy restricted_best_response(int f_idx, int pi_idx) const {
    const std::size_t np = policies_.size();
    StochasticPolicy nu(game_.horizon, game_.num_states, game_.num_actions2);
    for (int h = 0; h < game_.horizon; ++h)
      for (int x = 0; x < game_.num_states; ++x) {
        const int member = br_member_[((static_cast<std::size_t>(f_idx) * np + pi_idx) *
                                           game_.horizon + h) * game_.num_states + x];
        nu.set_row(h, x, policies_.members[member].row(h, x));
      }
    return nu;
  }

  double initial_pair_value(int pi_idx, int f_idx) const {
    return init_value_[static_cast<std::size_t>(pi_idx) * values_.size() + f_idx];
  }
  double restricted_br_value(int pi_idx) const { return restricted_br_value_[pi_idx]; }
  double v_star_restricted() const { return v_star_restricted_; }

 private:
  void precompute() {
    const int horizon = game_.horizon;
    const std::size_t nf = values_.size();
    const std::size_t np = policies_.size();

    successor_value_.assign(nf * np * horizon * game_.num_states, 0.0);
    br_member_.assign(nf * np * horizon * game_.num_states, 0);
    for (std::size_t f = 0; f < nf; ++f)
      for (std::size_t pi = 0; pi < np; ++pi)
        for (int h = 0; h < horizon; ++h)
          for (int x = 0; x < game_.num_states; ++x) {
            double best = std::numeric_limits<double>::infinity();
            int best_m = 0;
            for (std::size_t m = 0; m < np; ++m) {
              const double v = values_.members[f].expected(
                  h, x, policies_.members[pi].row(h, x), policies_.members[m].row(h, x));
              if (v < best) {
                best = v;
                best_m = static_cast<int>(m);
              }
            }
            const std::size_t idx =
                ((f * np + pi) * horizon + h) * game_.num_states + x;
            successor_value_[idx] = best;
            br_member_[idx] = best_m;
          }

    init_value_.assign(np * nf, 0.0);
    for (std::size_t pi = 0; pi < np; ++pi)
      for (std::size_t f = 0; f < nf; ++f)
        init_value_[pi * nf + f] =
            successor_value_[((f * np + pi) * horizon + 0) * game_.num_states +
                             game_.initial_state];

    restricted_br_value_.assign(np, 0.0);
    unrestricted_br_value_.assign(np, 0.0);
    v_star_restricted_ = -std::numeric_limits<double>::infinity();
    v_star_unrestricted_ = -std::numeric_limits<double>::infinity();
    for (std::size_t pi = 0; pi < np; ++pi) {
      double lo = std::numeric_limits<double>::infinity();
      for (std::size_t nu = 0; nu < np; ++nu)
        lo = std::min(lo,
                      evaluate_policy_pair(game_, policies_.members[pi], policies_.members[nu]));
      restricted_br_value_[pi] = lo;
      unrestricted_br_value_[pi] =
          best_response_value_iteration(game_, policies_.members[pi], FixedSide::player1).second;
      v_star_restricted_ = std::max(v_star_restricted_, lo);
      v_star_unrestricted_ = std::max(v_star_unrestricted_, unrestricted_br_value_[pi]);
    }

    if (values_.tagged()) {
      for (std::size_t f = 0; f < nf; ++f)
        if (values_.truth_tags[f].has_value()) {
          const int tag = *values_.truth_tags[f];
          if (tag >= 0 && tag < static_cast<int>(np))
            truth_pairs_.emplace_back(tag, static_cast<int>(f));
        }
    }
  }

  bool all_truths_alive(const std::vector<std::pair<int, int>>& alive) const {
    for (const auto& t : truth_pairs_)
      if (std::find(alive.begin(), alive.end(), t) == alive.end()) return false;
    return true;
  }

  MarkovGame game_;
  PolicyFamily policies_;
  FiniteValueFamily values_;
  AoveConfig config_;
  std::vector<double> successor_value_;  // (f, pi, h, x)
  std::vector<int> br_member_;           // (f, pi, h, x)
  std::vector<double> init_value_;       // (pi, f) at the initial state
  std::vector<double> restricted_br_value_;
  std::vector<double> unrestricted_br_value_;
  std::vector<std::pair<int, int>> truth_pairs_;
  double v_star_restricted_ = 0.0;
  double v_star_unrestricted_ = 0.0;
};

struct AoveBothResult {
  AoveResult p1;
  AoveResult p2;                   // in swapped-game coordinates
  double optimal_gap = 0.0;        // fixed middle term of the decomposition
  std::vector<double> combined_gap;  // per episode: p1 + optimal + p2
};

inline AoveResult run_aove_p1(const MarkovGame& game, const PolicyFamily& policies,
                              const FiniteValueFamily& values, const AoveConfig& config) {
  AoveRunner runner(game, policies, values, config);
  return runner.run();
}

// Learning P2 is learning P1 of the swapped game; families are transformed
// the same way so traces line up exactly.
inline AoveResult run_aove_p2(const MarkovGame& game, const PolicyFamily& policies,
                              const FiniteValueFamily& values, const AoveConfig& config) {
  AoveRunner runner(swap_players(game), policies, swap_value_family(values), config);
  return runner.run();
}

inline AoveBothResult run_aove_both(const MarkovGame& game, const PolicyFamily& policies,
                                    const FiniteValueFamily& values, const AoveConfig& config) {
  AoveBothResult both;
  both.p1 = run_aove_p1(game, policies, values, config);
  both.p2 = run_aove_p2(game, policies, values, config);
  // Middle term of the duality-gap decomposition by exhaustive enumeration:
  // min-max minus max-min over the policy family.
  const std::size_t np = policies.size();
  std::vector<std::vector<double>> v(np, std::vector<double>(np));
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < np; ++j)
      v[i][j] = evaluate_policy_pair(game, policies.members[i], policies.members[j]);
  double maxmin = -std::numeric_limits<double>::infinity();
  double minmax = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < np; ++i) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < np; ++j) lo = std::min(lo, v[i][j]);
    maxmin = std::max(maxmin, lo);
  }
  for (std::size_t j = 0; j < np; ++j) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < np; ++i) hi = std::max(hi, v[i][j]);
    minmax = std::min(minmax, hi);
  }
  both.optimal_gap = minmax - maxmin;
  for (std::size_t k = 0; k < both.p1.trace.size(); ++k)
    both.combined_gap.push_back(both.p1.trace[k].regret_increment + both.optimal_gap +
                                both.p2.trace[k].regret_increment);
  return both;
}

inline AoveResult run_aove(const MarkovGame& game, const PolicyFamily& policies,
                           const FiniteValueFamily& values, const AoveConfig& config) {
  if (config.role == AoveConfig::Role::both)
    throw ConfigError("aove: the 'both' role returns two traces; call run_aove_both");
  if (config.role == AoveConfig::Role::p2) return run_aove_p2(game, policies, values, config);
  return run_aove_p1(game, policies, values, config);
}

}  // namespace mglab
