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

struct Transition {
  int x = 0;
  int a = 0;
  int b = 0;
  double r = 0.0;
  int x_next = 0;
};

// Per-step transition store; level h holds one tuple per completed episode.
struct ReplayBuffer {
  std::vector<std::vector<Transition>> levels;

  explicit ReplayBuffer(int horizon = 0) : levels(horizon) {}

  void append(const EpisodeRecord& ep) {
    for (const EpisodeStep& s : ep.steps)
      levels[s.h].push_back({s.x, s.a, s.b, s.r, s.x_next});
  }

  std::size_t episodes() const { return levels.empty() ? 0 : levels[0].size(); }
};

// Sum over stored level-h transitions of
//   [xi_h(x,a,b) - r - zeta_{h+1}(x', pi_zeta, nu_zeta)]^2
// where the successor term is the matrix-game value of zeta at x' (zero at
// the last level). `xi` contributes its level-h table, `zeta` its saddle
// values; both must share the buffer's shape.
inline double squared_bellman_loss(const ReplayBuffer& buffer, int h, const ValueHypothesis& xi,
                                   const ValueHypothesis& zeta, double tol = 1e-9) {
  const bool last = h + 1 >= xi.horizon;
  std::vector<double> successor;
  if (!last) {
    successor.resize(xi.num_states);
    for (int x = 0; x < xi.num_states; ++x)
      successor[x] = hypothesis_ne_value(zeta, x, h + 1, tol);
  }
  double sum = 0.0;
  for (const Transition& t : buffer.levels[h]) {
    const double target = t.r + (last ? 0.0 : successor[t.x_next]);
    const double diff = xi.at(h, t.x, t.a, t.b) - target;
    sum += diff * diff;
  }
  return sum;
}

// Surviving member indices of a finite family.
struct VersionSpace {
  std::vector<int> surviving;

  bool contains(int idx) const {
    return std::find(surviving.begin(), surviving.end(), idx) != surviving.end();
  }
  std::size_t size() const { return surviving.size(); }
};

// Keeps exactly the tuples whose level-h loss is within beta of the best
// level-h component over the whole family, for every h. An empty result
// falls back to the single member with the smallest total excess and is
// reported through `fallback`.
inline VersionSpace update_version_space(const FiniteValueFamily& family,
                                         const ReplayBuffer& buffers, double beta,
                                         bool* fallback = nullptr) {
  if (beta < 0.0) throw InputError("update_version_space: beta must be nonnegative");
  const int horizon = family.members[0].horizon;
  const std::size_t n = family.size();
  // loss[g][f] at each level: component g against successor tuple f.
  VersionSpace vs;
  std::vector<double> excess(n, 0.0);
  std::vector<bool> ok(n, true);
  for (int h = 0; h < horizon; ++h) {
    std::vector<double> self(n, 0.0), best(n, std::numeric_limits<double>::infinity());
    for (std::size_t f = 0; f < n; ++f) {
      for (std::size_t g = 0; g < n; ++g) {
        const double loss = squared_bellman_loss(buffers, h, family.members[g],
                                                 family.members[f]);
        if (g == f) self[f] = loss;
        best[f] = std::min(best[f], loss);
      }
    }
    for (std::size_t f = 0; f < n; ++f) {
      excess[f] += self[f] - best[f];
      if (self[f] > best[f] + beta) ok[f] = false;
    }
  }
  for (std::size_t f = 0; f < n; ++f)
    if (ok[f]) vs.surviving.push_back(static_cast<int>(f));
  if (fallback != nullptr) *fallback = false;
  if (vs.surviving.empty()) {
    const auto it = std::min_element(excess.begin(), excess.end());
    vs.surviving.push_back(static_cast<int>(it - excess.begin()));
    if (fallback != nullptr) *fallback = true;
  }
  return vs;
}

// Theory schedule: beta = C log(N(F, 1/K) H K / p).
inline double onemg_theory_beta(double covering_number, int horizon, int episodes, double c,
                                double p) {
  return c * std::log(covering_number * horizon * episodes / p);
}

struct OnemgConfig {
  int episodes = 100;
  // Explicit beta wins when set; otherwise the theory formula with (c, p).
  std::optional<double> beta;
  double c = 2.0;
  double p = 0.05;
  std::uint64_t seed = 0;

  double resolve_beta(std::size_t family_size, int horizon) const {
    if (beta.has_value()) {
      if (*beta < 0.0) throw ConfigError("onemg: beta must be nonnegative");
      return *beta;
    }
    return onemg_theory_beta(static_cast<double>(family_size), horizon, episodes, c, p);
  }

  void validate() const {
    if (episodes < 1) throw ConfigError("onemg: episodes must be >= 1");
  }
};

// The opponent only ever reveals actions, never its policy; these are the
// harness-side generators of what it plays each episode.
struct Opponent {
  enum class Kind { best_response_exact, fixed, adversarial_schedule, self_nash };
  Kind kind = Kind::best_response_exact;
  StochasticPolicy fixed_policy;
  std::vector<StochasticPolicy> schedule;

  static Opponent best_response() { return {Kind::best_response_exact, {}, {}}; }
  static Opponent fixed(StochasticPolicy p) { return {Kind::fixed, std::move(p), {}}; }
  static Opponent adversarial(std::vector<StochasticPolicy> s) {
    return {Kind::adversarial_schedule, {}, std::move(s)};
  }
  static Opponent self_nash() { return {Kind::self_nash, {}, {}}; }
};

// What the opponent actually plays in episode k. `solution` supplies nu-star
// for the self-play kind and may be null otherwise.
inline StochasticPolicy opponent_policy_for_episode(const Opponent& opp, const MarkovGame& game,
                                                    const GameSolution* solution, int k,
                                                    const StochasticPolicy& pi_k) {
  switch (opp.kind) {
    case Opponent::Kind::best_response_exact:
      return best_response_value_iteration(game, pi_k, FixedSide::player1).first;
    case Opponent::Kind::fixed:
      return opp.fixed_policy;
    case Opponent::Kind::adversarial_schedule:
      if (opp.schedule.empty())
        throw ConfigError("opponent: adversarial schedule is exhausted (empty)");
      return opp.schedule[(k - 1) % opp.schedule.size()];
    case Opponent::Kind::self_nash:
      if (solution == nullptr)
        throw ConfigError("opponent: self-nash needs the solved game");
      return solution->nu_star;
  }
  throw ConfigError("opponent: unknown kind");
}

struct OnemgTraceRow {
  int k = 0;
  int chosen = 0;
  double regret_increment = 0.0;
  double cum_regret = 0.0;
  int vspace_size = 0;
  double optimism_gap = 0.0;
  bool fallback = false;
  bool qstar_present = false;
};

struct OnemgEpisodeLog {
  EpisodeRecord episode;
  StochasticPolicy opponent_policy;
};

struct OnemgResult {
  std::vector<OnemgTraceRow> trace;
  std::vector<OnemgEpisodeLog> episodes;
  VersionSpace final_vspace;
  double v_star = 0.0;
  double beta = 0.0;
  int fallback_events = 0;
  bool family_tagged = false;

  double final_cum_regret() const { return trace.empty() ? 0.0 : trace.back().cum_regret; }
};

namespace detail {

// Episode-incremental loss accounting. Terms are added in buffer order, so
// the running sums are bit-identical to a fresh recomputation.
struct LossTable {
  std::size_t n = 0;
  int horizon = 0;
  std::vector<double> sums;  // (g, f, h)

  LossTable(std::size_t n_members, int h) : n(n_members), horizon(h),
      sums(n_members * n_members * h, 0.0) {}

  double& at(std::size_t g, std::size_t f, int h) {
    return sums[(g * n + f) * horizon + h];
  }
  double at(std::size_t g, std::size_t f, int h) const {
    return sums[(g * n + f) * horizon + h];
  }
};

}  // namespace detail

// Algorithm loop: optimistic selection at the initial state, play against
// the opponent, append, re-eliminate against the full family.
class OnemgRunner {
 public:
  OnemgRunner(const MarkovGame& game, const FiniteValueFamily& family, OnemgConfig config)
      : game_(game), family_(family), config_(std::move(config)) {
    config_.validate();
    game_.validate();
    family_.validate();
    const auto& proto = family_.members[0];
    if (proto.horizon != game_.horizon || proto.num_states != game_.num_states ||
        proto.num_actions1 != game_.num_actions1 || proto.num_actions2 != game_.num_actions2)
      throw InputError("onemg: family and game shapes disagree");
    solution_ = ne_value_iteration(game_);
    v_star_ = game_value(game_, solution_);
    for (const ValueHypothesis& f : family_.members) saddles_.push_back(solve_hypothesis(f));
  }

  OnemgResult run(const Opponent& opponent) {
    const int horizon = game_.horizon;
    const std::size_t n = family_.size();
    const double beta = config_.resolve_beta(n, horizon);

    OnemgResult result;
    result.v_star = v_star_;
    result.beta = beta;
    result.family_tagged = family_.tagged();
    int qstar_index = -1;
    if (family_.tagged())
      for (std::size_t i = 0; i < n; ++i)
        if (family_.truth_tags[i] == -1) qstar_index = static_cast<int>(i);

    ReplayBuffer buffer(horizon);
    detail::LossTable losses(n, horizon);
    VersionSpace vspace;
    for (std::size_t i = 0; i < n; ++i) vspace.surviving.push_back(static_cast<int>(i));

    auto rng = RngStream::root(config_.seed, "onemg");
    double cum_regret = 0.0;
    for (int k = 1; k <= config_.episodes; ++k) {
      const bool qstar_present = qstar_index >= 0 && vspace.contains(qstar_index);
      const int chosen = select_optimistic(vspace);
      const StochasticPolicy& pi_k = saddles_[chosen].max_min;
      const StochasticPolicy nu_k = opponent_policy(opponent, k, pi_k);

      const double value = evaluate_policy_pair(game_, pi_k, nu_k);
      const double increment = v_star_ - value;
      cum_regret += increment;

      auto stream = rng.child(static_cast<std::uint64_t>(k));
      EpisodeRecord ep = sample_episode(game_, pi_k, nu_k, stream);
      buffer.append(ep);
      accumulate_losses(losses, ep);

      bool fallback = false;
      vspace = eliminate(losses, beta, buffer.episodes(), &fallback);
      if (fallback) ++result.fallback_events;

      result.trace.push_back({k, chosen, increment, cum_regret,
                              static_cast<int>(vspace.size()),
                              saddles_[chosen].value(0, game_.initial_state) - v_star_, fallback,
                              qstar_present});
      result.episodes.push_back({std::move(ep), nu_k});
    }
    result.final_vspace = vspace;
    return result;
  }

  // Argmax of the saddle value at the initial state, ties to lowest index.
  int select_optimistic(const VersionSpace& vspace) const {
    if (vspace.surviving.empty()) throw InputError("select_optimistic: empty version space");
    int best = vspace.surviving[0];
    double best_v = -std::numeric_limits<double>::infinity();
    for (int idx : vspace.surviving) {
      const double v = saddles_[idx].value(0, game_.initial_state);
      if (v > best_v) {
        best_v = v;
        best = idx;
      }
    }
    return best;
  }

  const GameSolution& solution() const { return solution_; }
  const HypothesisSaddle& saddle(int idx) const { return saddles_[idx]; }
  double v_star() const { return v_star_; }
  const MarkovGame& game() const { return game_; }
  const FiniteValueFamily& family() const { return family_; }

 private:
  StochasticPolicy opponent_policy(const Opponent& opp, int k, const StochasticPolicy& pi_k) {
    return opponent_policy_for_episode(opp, game_, &solution_, k, pi_k);
  }

  void accumulate_losses(detail::LossTable& losses, const EpisodeRecord& ep) const {
    const std::size_t n = family_.size();
    for (const EpisodeStep& s : ep.steps) {
      const bool last = s.h + 1 >= game_.horizon;
      for (std::size_t f = 0; f < n; ++f) {
        const double target = s.r + (last ? 0.0 : saddles_[f].value(s.h + 1, s.x_next));
        for (std::size_t g = 0; g < n; ++g) {
          const double diff = family_.members[g].at(s.h, s.x, s.a, s.b) - target;
          losses.at(g, f, s.h) += diff * diff;
        }
      }
    }
  }

  VersionSpace eliminate(const detail::LossTable& losses, double beta, std::size_t episodes,
                         bool* fallback) const {
    const std::size_t n = family_.size();
    VersionSpace vs;
    std::vector<double> excess(n, 0.0);
    std::vector<bool> ok(n, true);
    for (int h = 0; h < game_.horizon; ++h)
      for (std::size_t f = 0; f < n; ++f) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < n; ++g) best = std::min(best, losses.at(g, f, h));
        const double self = losses.at(f, f, h);
        excess[f] += self - best;
        if (self > best + beta) ok[f] = false;
      }
    for (std::size_t f = 0; f < n; ++f)
      if (ok[f]) vs.surviving.push_back(static_cast<int>(f));
    *fallback = false;
    if (vs.surviving.empty()) {
      const auto it = std::min_element(excess.begin(), excess.end());
      vs.surviving.push_back(static_cast<int>(it - excess.begin()));
      *fallback = true;
    }
    return vs;
  }

  MarkovGame game_;
  FiniteValueFamily family_;
  OnemgConfig config_;
  GameSolution solution_;
  double v_star_ = 0.0;
  std::vector<HypothesisSaddle> saddles_;
};

inline OnemgResult run_onemg(const MarkovGame& game, const FiniteValueFamily& family,
                             const OnemgConfig& config, const Opponent& opponent) {
  OnemgRunner runner(game, family, config);
  return runner.run(opponent);
}

// One step of the recursive regret decomposition, evaluated at a realized
// transition with every expectation computed exactly from the true model.
// Harness-side diagnostic; none of this is visible to the learner.
struct AuditStep {
  int h = 0;
  double delta = 0.0;       // optimistic minus realized-pair value at x_h
  double delta_next = 0.0;  // same at x_{h+1} (zero past the horizon)
  // Martingale increment delta_next - E[delta_next | x,a,b]. Signed so that
  // delta <= delta_next - zeta + gamma - gamma_hat + epsilon holds exactly.
  double zeta = 0.0;
  double gamma = 0.0;       // action-sampling gap in f
  double gamma_hat = 0.0;   // action-sampling gap in Q^{pi,nu}
  double epsilon = 0.0;     // Bellman residual of f at the realized cell
  double slack = 0.0;       // rhs - lhs of the step inequality
  bool ok = false;
};

inline std::vector<AuditStep> decomposition_audit(const MarkovGame& game,
                                                  const ValueHypothesis& f,
                                                  const StochasticPolicy& pi,
                                                  const EpisodeRecord& episode,
                                                  const StochasticPolicy& nu_realized,
                                                  double tol = 1e-9) {
  const int horizon = game.horizon;
  const StochasticPolicy nu_hat = induced_best_response(f, pi);
  const PairValues pv = policy_pair_values(game, pi, nu_realized);

  // V^k table: f evaluated under (pi, nu_hat) per state.
  std::vector<double> vk(static_cast<std::size_t>(horizon) * game.num_states, 0.0);
  for (int h = 0; h < horizon; ++h)
    for (int x = 0; x < game.num_states; ++x)
      vk[static_cast<std::size_t>(h) * game.num_states + x] =
          f.expected(h, x, pi.row(h, x), nu_hat.row(h, x));

  auto delta_at = [&](int h, int x) {
    if (h >= horizon) return 0.0;
    return vk[static_cast<std::size_t>(h) * game.num_states + x] - pv.v_at(h, x);
  };

  std::vector<AuditStep> steps;
  for (const EpisodeStep& s : episode.steps) {
    AuditStep rec;
    rec.h = s.h;
    rec.delta = delta_at(s.h, s.x);
    rec.delta_next = s.h + 1 < horizon ? delta_at(s.h + 1, s.x_next) : 0.0;

    double expected_delta_next = 0.0;
    double expected_f_next = 0.0;
    if (s.h + 1 < horizon) {
      const auto dist = game.next_state_dist(s.h, s.x, s.a, s.b);
      for (int x2 = 0; x2 < game.num_states; ++x2) {
        expected_delta_next += dist[x2] * delta_at(s.h + 1, x2);
        expected_f_next +=
            dist[x2] * f.expected(s.h + 1, x2, pi.row(s.h + 1, x2), nu_hat.row(s.h + 1, x2));
      }
    }
    rec.zeta = rec.delta_next - expected_delta_next;

    double f_pi_b = 0.0;
    for (int a = 0; a < game.num_actions1; ++a) f_pi_b += pi.at(s.h, s.x, a) * f.at(s.h, s.x, a, s.b);
    rec.gamma = f_pi_b - f.at(s.h, s.x, s.a, s.b);

    double q_pair = 0.0;
    for (int a = 0; a < game.num_actions1; ++a)
      for (int b = 0; b < game.num_actions2; ++b)
        q_pair += pi.at(s.h, s.x, a) * nu_realized.at(s.h, s.x, b) * pv.q_at(s.h, s.x, a, b);
    rec.gamma_hat = q_pair - pv.q_at(s.h, s.x, s.a, s.b);

    rec.epsilon = f.at(s.h, s.x, s.a, s.b) - s.r - expected_f_next;

    const double rhs = rec.delta_next - rec.zeta + rec.gamma - rec.gamma_hat + rec.epsilon;
    rec.slack = rhs - rec.delta;
    rec.ok = rec.slack >= -tol;
    steps.push_back(rec);
  }
  return steps;
}

inline void assert_decomposition_audit(const MarkovGame& game, const ValueHypothesis& f,
                                       const StochasticPolicy& pi, const EpisodeRecord& episode,
                                       const StochasticPolicy& nu_realized, double tol = 1e-9) {
  for (const AuditStep& s : decomposition_audit(game, f, pi, episode, nu_realized, tol))
    if (!s.ok)
      throw AuditError("decomposition audit failed at h=" + std::to_string(s.h) + ": delta=" +
                       std::to_string(s.delta) + " delta_next=" + std::to_string(s.delta_next) +
                       " zeta=" + std::to_string(s.zeta) + " gamma=" + std::to_string(s.gamma) +
                       " gamma_hat=" + std::to_string(s.gamma_hat) + " epsilon=" +
                       std::to_string(s.epsilon) + " slack=" + std::to_string(s.slack));
}

}  // namespace mglab
