#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mglab/errors.hpp"
#include "mglab/matrix_game.hpp"

namespace mglab {

inline constexpr double kRowSumTol = 1e-12;

// Per-step, per-state distribution over one player's actions.
struct StochasticPolicy {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> probs;  // (h, x, action), row-major

  StochasticPolicy() = default;
  StochasticPolicy(int h, int s, int a, double fill = 0.0)
      : horizon(h), num_states(s), num_actions(a),
        probs(static_cast<std::size_t>(h) * s * a, fill) {}

  static StochasticPolicy uniform(int h, int s, int a) {
    return StochasticPolicy(h, s, a, 1.0 / a);
  }

  static StochasticPolicy pure(int h, int s, int a, int action) {
    StochasticPolicy p(h, s, a);
    for (int hh = 0; hh < h; ++hh)
      for (int x = 0; x < s; ++x) p.at(hh, x, action) = 1.0;
    return p;
  }

  double& at(int h, int x, int a) {
    return probs[(static_cast<std::size_t>(h) * num_states + x) * num_actions + a];
  }
  double at(int h, int x, int a) const {
    return probs[(static_cast<std::size_t>(h) * num_states + x) * num_actions + a];
  }

  std::span<const double> row(int h, int x) const {
    return {probs.data() + (static_cast<std::size_t>(h) * num_states + x) * num_actions,
            static_cast<std::size_t>(num_actions)};
  }
  std::span<double> row(int h, int x) {
    return {probs.data() + (static_cast<std::size_t>(h) * num_states + x) * num_actions,
            static_cast<std::size_t>(num_actions)};
  }

  void set_row(int h, int x, std::span<const double> dist) {
    auto r = row(h, x);
    for (int a = 0; a < num_actions; ++a) r[a] = dist[a];
  }

  void validate(const std::string& label = "policy") const {
    for (int h = 0; h < horizon; ++h)
      for (int x = 0; x < num_states; ++x) {
        double sum = 0.0;
        for (int a = 0; a < num_actions; ++a) {
          const double p = at(h, x, a);
          if (!(p >= 0.0))
            throw InputError(label + ": negative probability at (h=" + std::to_string(h) +
                             ", x=" + std::to_string(x) + ", a=" + std::to_string(a) + ")");
          sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTol)
          throw InputError(label + ": row sums to " + std::to_string(sum) + " at (h=" +
                           std::to_string(h) + ", x=" + std::to_string(x) + ")");
      }
  }

  bool operator==(const StochasticPolicy&) const = default;
};

// Finite tabular two-player zero-sum episodic game. Rewards are
// deterministic per (h, x, a, b); both players see the same reward, P1
// maximizes and P2 minimizes. Immutable after construction by convention.
struct MarkovGame {
  int horizon = 0;
  int num_states = 0;
  int num_actions1 = 0;
  int num_actions2 = 0;
  int initial_state = 0;
  double reward_min = -1.0;
  double reward_max = 1.0;
  std::vector<double> reward;      // (h, x, a, b)
  std::vector<double> transition;  // (h, x, a, b, x')

  MarkovGame() = default;
  MarkovGame(int h, int s, int a1, int a2)
      : horizon(h), num_states(s), num_actions1(a1), num_actions2(a2),
        reward(static_cast<std::size_t>(h) * s * a1 * a2, 0.0),
        transition(static_cast<std::size_t>(h) * s * a1 * a2 * s, 0.0) {}

  std::size_t cell(int h, int x, int a, int b) const {
    return ((static_cast<std::size_t>(h) * num_states + x) * num_actions1 + a) * num_actions2 + b;
  }

  double& r(int h, int x, int a, int b) { return reward[cell(h, x, a, b)]; }
  double r(int h, int x, int a, int b) const { return reward[cell(h, x, a, b)]; }

  double& p(int h, int x, int a, int b, int x2) {
    return transition[cell(h, x, a, b) * num_states + x2];
  }
  double p(int h, int x, int a, int b, int x2) const {
    return transition[cell(h, x, a, b) * num_states + x2];
  }

  std::span<const double> next_state_dist(int h, int x, int a, int b) const {
    return {transition.data() + cell(h, x, a, b) * num_states,
            static_cast<std::size_t>(num_states)};
  }

  std::size_t num_cells() const {
    return static_cast<std::size_t>(horizon) * num_states * num_actions1 * num_actions2;
  }

  // Largest attainable |return|; the natural bound for value tables.
  double value_bound() const {
    return horizon * std::max(std::abs(reward_min), std::abs(reward_max));
  }

  void validate() const {
    if (horizon < 1 || num_states < 1 || num_actions1 < 1 || num_actions2 < 1)
      throw InputError("game: horizon, states and both action counts must be positive");
    if (initial_state < 0 || initial_state >= num_states)
      throw InputError("game: initial_state " + std::to_string(initial_state) + " out of range");
    if (reward.size() != num_cells() || transition.size() != num_cells() * num_states)
      throw InputError("game: reward/transition arrays have inconsistent shapes");
    for (int h = 0; h < horizon; ++h)
      for (int x = 0; x < num_states; ++x)
        for (int a = 0; a < num_actions1; ++a)
          for (int b = 0; b < num_actions2; ++b) {
            const double rv = r(h, x, a, b);
            if (!(rv >= reward_min && rv <= reward_max))
              throw InputError("game: reward " + std::to_string(rv) + " outside [" +
                               std::to_string(reward_min) + ", " + std::to_string(reward_max) +
                               "] at (h=" + std::to_string(h) + ", x=" + std::to_string(x) +
                               ", a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")");
            double sum = 0.0;
            for (int x2 = 0; x2 < num_states; ++x2) {
              const double pv = p(h, x, a, b, x2);
              if (pv < 0.0)
                throw InputError("game: negative transition probability at (h=" +
                                 std::to_string(h) + ", x=" + std::to_string(x) + ", a=" +
                                 std::to_string(a) + ", b=" + std::to_string(b) + ", x'=" +
                                 std::to_string(x2) + ")");
              sum += pv;
            }
            if (std::abs(sum - 1.0) > kRowSumTol)
              throw InputError("game: transition row sums to " + std::to_string(sum) +
                               " at (h=" + std::to_string(h) + ", x=" + std::to_string(x) +
                               ", a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")");
          }
  }

  Mat payoff(int h, int x) const {
    Mat m(num_actions1, num_actions2);
    for (int a = 0; a < num_actions1; ++a)
      for (int b = 0; b < num_actions2; ++b) m(a, b) = r(h, x, a, b);
    return m;
  }

  bool operator==(const MarkovGame&) const = default;
};

// One full trajectory; x of step h+1 equals x_next of step h.
struct EpisodeStep {
  int h = 0;
  int x = 0;
  int a = 0;
  int b = 0;
  double r = 0.0;
  int x_next = 0;
};

struct EpisodeRecord {
  std::vector<EpisodeStep> steps;

  double total_return() const {
    double s = 0.0;
    for (const auto& st : steps) s += st.r;
    return s;
  }

  void validate(const MarkovGame& game) const {
    if (static_cast<int>(steps.size()) != game.horizon)
      throw InputError("episode: has " + std::to_string(steps.size()) + " steps, horizon is " +
                       std::to_string(game.horizon));
    if (steps.front().x != game.initial_state)
      throw InputError("episode: starts at state " + std::to_string(steps.front().x) +
                       ", game starts at " + std::to_string(game.initial_state));
    for (std::size_t i = 0; i + 1 < steps.size(); ++i)
      if (steps[i].x_next != steps[i + 1].x)
        throw InputError("episode: state chain broken after step " + std::to_string(i));
  }
};

// The same game from P2's seat: actions swapped, rewards negated. Running a
// maximizing learner on the swapped game is exactly learning the minimizer.
inline MarkovGame swap_players(const MarkovGame& g) {
  MarkovGame s(g.horizon, g.num_states, g.num_actions2, g.num_actions1);
  s.initial_state = g.initial_state;
  s.reward_min = -g.reward_max;
  s.reward_max = -g.reward_min;
  for (int h = 0; h < g.horizon; ++h)
    for (int x = 0; x < g.num_states; ++x)
      for (int a = 0; a < g.num_actions1; ++a)
        for (int b = 0; b < g.num_actions2; ++b) {
          s.r(h, x, b, a) = -g.r(h, x, a, b);
          for (int x2 = 0; x2 < g.num_states; ++x2)
            s.p(h, x, b, a, x2) = g.p(h, x, a, b, x2);
        }
  return s;
}

}  // namespace mglab
