#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mglab/markov_game.hpp"
#include "mglab/matrix_game.hpp"
#include "mglab/rng.hpp"

namespace mglab {

enum class FixedSide { player1, player2 };

// Exact Nash solution of a tabular game: Q*, V*, and per-state NE policies.
struct GameSolution {
  std::vector<double> q_star;  // (h, x, a, b)
  std::vector<double> v_star;  // (h, x)
  StochasticPolicy pi_star;
  StochasticPolicy nu_star;
  int num_states = 0;
  int num_actions1 = 0;
  int num_actions2 = 0;

  double q(int h, int x, int a, int b) const {
    return q_star[((static_cast<std::size_t>(h) * num_states + x) * num_actions1 + a) *
                      num_actions2 + b];
  }
  double v(int h, int x) const { return v_star[static_cast<std::size_t>(h) * num_states + x]; }
};

// Backward induction with the minimax Bellman operator: q_h = r_h + P_h v_{h+1}
// and v_h(x) is the matrix-game value of q_h(x, ., .).
inline GameSolution ne_value_iteration(const MarkovGame& game, double tol = 1e-9) {
  GameSolution sol;
  sol.num_states = game.num_states;
  sol.num_actions1 = game.num_actions1;
  sol.num_actions2 = game.num_actions2;
  sol.q_star.assign(game.num_cells(), 0.0);
  sol.v_star.assign(static_cast<std::size_t>(game.horizon) * game.num_states, 0.0);
  sol.pi_star = StochasticPolicy(game.horizon, game.num_states, game.num_actions1);
  sol.nu_star = StochasticPolicy(game.horizon, game.num_states, game.num_actions2);

  std::vector<double> v_next(game.num_states, 0.0);
  for (int h = game.horizon - 1; h >= 0; --h) {
    for (int x = 0; x < game.num_states; ++x) {
      Mat payoff(game.num_actions1, game.num_actions2);
      for (int a = 0; a < game.num_actions1; ++a)
        for (int b = 0; b < game.num_actions2; ++b) {
          double q = game.r(h, x, a, b);
          const auto dist = game.next_state_dist(h, x, a, b);
          for (int x2 = 0; x2 < game.num_states; ++x2) q += dist[x2] * v_next[x2];
          payoff(a, b) = q;
          sol.q_star[game.cell(h, x, a, b)] = q;
        }
      MatrixGameSolution mg;
      try {
        mg = solve_matrix_game(payoff, tol);
      } catch (const SolverError& e) {
        throw SolverError("ne_value_iteration at (h=" + std::to_string(h) + ", x=" +
                              std::to_string(x) + "): " + e.what(),
                          e.iterations);
      }
      sol.v_star[static_cast<std::size_t>(h) * game.num_states + x] = mg.value;
      sol.pi_star.set_row(h, x, mg.row_policy);
      sol.nu_star.set_row(h, x, mg.col_policy);
    }
    for (int x = 0; x < game.num_states; ++x)
      v_next[x] = sol.v_star[static_cast<std::size_t>(h) * game.num_states + x];
  }
  return sol;
}

inline double game_value(const MarkovGame& game, const GameSolution& sol) {
  return sol.v(0, game.initial_state);
}

// Exact best response of the free player against a fixed opponent policy:
// single-agent backward induction on the induced MDP. Returns the responder's
// (deterministic) policy and the value V^{pi,nu}(x1) of the resulting pair,
// from P1's perspective in both cases.
inline std::pair<StochasticPolicy, double> best_response_value_iteration(
    const MarkovGame& game, const StochasticPolicy& fixed, FixedSide side) {
  const int fixed_actions = side == FixedSide::player1 ? game.num_actions1 : game.num_actions2;
  const int free_actions = side == FixedSide::player1 ? game.num_actions2 : game.num_actions1;
  if (fixed.horizon != game.horizon || fixed.num_states != game.num_states ||
      fixed.num_actions != fixed_actions)
    throw InputError("best_response_value_iteration: fixed policy shape mismatch");

  StochasticPolicy response(game.horizon, game.num_states, free_actions);
  std::vector<double> v_next(game.num_states, 0.0), v_here(game.num_states, 0.0);
  for (int h = game.horizon - 1; h >= 0; --h) {
    for (int x = 0; x < game.num_states; ++x) {
      int best = 0;
      double best_v = side == FixedSide::player1 ? std::numeric_limits<double>::infinity()
                                                 : -std::numeric_limits<double>::infinity();
      for (int free_a = 0; free_a < free_actions; ++free_a) {
        double q = 0.0;
        for (int fixed_a = 0; fixed_a < fixed_actions; ++fixed_a) {
          const double w = fixed.at(h, x, fixed_a);
          if (w == 0.0) continue;
          const int a = side == FixedSide::player1 ? fixed_a : free_a;
          const int b = side == FixedSide::player1 ? free_a : fixed_a;
          double one = game.r(h, x, a, b);
          const auto dist = game.next_state_dist(h, x, a, b);
          for (int x2 = 0; x2 < game.num_states; ++x2) one += dist[x2] * v_next[x2];
          q += w * one;
        }
        const bool better = side == FixedSide::player1 ? q < best_v : q > best_v;
        if (better) {
          best_v = q;
          best = free_a;
        }
      }
      response.at(h, x, best) = 1.0;
      v_here[x] = best_v;
    }
    v_next = v_here;
  }
  return {response, v_next[game.initial_state]};
}

// Exact V^{pi,nu}(x1) by forward state-distribution propagation.
inline double evaluate_policy_pair(const MarkovGame& game, const StochasticPolicy& pi,
                                   const StochasticPolicy& nu) {
  if (pi.horizon != game.horizon || pi.num_states != game.num_states ||
      pi.num_actions != game.num_actions1 || nu.horizon != game.horizon ||
      nu.num_states != game.num_states || nu.num_actions != game.num_actions2)
    throw InputError("evaluate_policy_pair: policy shape mismatch");
  std::vector<double> dist(game.num_states, 0.0), next(game.num_states, 0.0);
  dist[game.initial_state] = 1.0;
  double value = 0.0;
  for (int h = 0; h < game.horizon; ++h) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int x = 0; x < game.num_states; ++x) {
      const double dx = dist[x];
      if (dx == 0.0) continue;
      for (int a = 0; a < game.num_actions1; ++a) {
        const double pa = pi.at(h, x, a);
        if (pa == 0.0) continue;
        for (int b = 0; b < game.num_actions2; ++b) {
          const double w = dx * pa * nu.at(h, x, b);
          if (w == 0.0) continue;
          value += w * game.r(h, x, a, b);
          const auto t = game.next_state_dist(h, x, a, b);
          for (int x2 = 0; x2 < game.num_states; ++x2) next[x2] += w * t[x2];
        }
      }
    }
    dist.swap(next);
  }
  return value;
}

// Q^{pi,nu} and V^{pi,nu} tables for a fixed pair, by backward induction.
struct PairValues {
  std::vector<double> q;  // (h, x, a, b)
  std::vector<double> v;  // (h, x); v[horizon] row omitted (zero)
  int num_states = 0;
  int num_actions1 = 0;
  int num_actions2 = 0;

  double q_at(int h, int x, int a, int b) const {
    return q[((static_cast<std::size_t>(h) * num_states + x) * num_actions1 + a) * num_actions2 +
             b];
  }
  double v_at(int h, int x) const { return v[static_cast<std::size_t>(h) * num_states + x]; }
};

inline PairValues policy_pair_values(const MarkovGame& game, const StochasticPolicy& pi,
                                     const StochasticPolicy& nu) {
  PairValues pv;
  pv.num_states = game.num_states;
  pv.num_actions1 = game.num_actions1;
  pv.num_actions2 = game.num_actions2;
  pv.q.assign(game.num_cells(), 0.0);
  pv.v.assign(static_cast<std::size_t>(game.horizon) * game.num_states, 0.0);
  std::vector<double> v_next(game.num_states, 0.0);
  for (int h = game.horizon - 1; h >= 0; --h) {
    for (int x = 0; x < game.num_states; ++x) {
      double vx = 0.0;
      for (int a = 0; a < game.num_actions1; ++a)
        for (int b = 0; b < game.num_actions2; ++b) {
          double q = game.r(h, x, a, b);
          const auto dist = game.next_state_dist(h, x, a, b);
          for (int x2 = 0; x2 < game.num_states; ++x2) q += dist[x2] * v_next[x2];
          pv.q[game.cell(h, x, a, b)] = q;
          vx += pi.at(h, x, a) * nu.at(h, x, b) * q;
        }
      pv.v[static_cast<std::size_t>(h) * game.num_states + x] = vx;
    }
    for (int x = 0; x < game.num_states; ++x)
      v_next[x] = pv.v[static_cast<std::size_t>(h) * game.num_states + x];
  }
  return pv;
}

// Exact level occupancies d_h(x) and d_h(x,a,b) of a policy pair.
struct Occupancy {
  std::vector<double> state;  // (h, x)
  std::vector<double> cell;   // (h, x, a, b)
};

inline Occupancy occupancy_measures(const MarkovGame& game, const StochasticPolicy& pi,
                                    const StochasticPolicy& nu) {
  Occupancy occ;
  occ.state.assign(static_cast<std::size_t>(game.horizon) * game.num_states, 0.0);
  occ.cell.assign(game.num_cells(), 0.0);
  std::vector<double> dist(game.num_states, 0.0), next(game.num_states, 0.0);
  dist[game.initial_state] = 1.0;
  for (int h = 0; h < game.horizon; ++h) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int x = 0; x < game.num_states; ++x) {
      occ.state[static_cast<std::size_t>(h) * game.num_states + x] = dist[x];
      if (dist[x] == 0.0) continue;
      for (int a = 0; a < game.num_actions1; ++a)
        for (int b = 0; b < game.num_actions2; ++b) {
          const double w = dist[x] * pi.at(h, x, a) * nu.at(h, x, b);
          occ.cell[game.cell(h, x, a, b)] = w;
          if (w == 0.0) continue;
          const auto t = game.next_state_dist(h, x, a, b);
          for (int x2 = 0; x2 < game.num_states; ++x2) next[x2] += w * t[x2];
        }
    }
    dist.swap(next);
  }
  return occ;
}

// One trajectory under (pi, nu); deterministic given the stream.
inline EpisodeRecord sample_episode(const MarkovGame& game, const StochasticPolicy& pi,
                                    const StochasticPolicy& nu, RngStream& stream) {
  EpisodeRecord ep;
  ep.steps.reserve(game.horizon);
  int x = game.initial_state;
  for (int h = 0; h < game.horizon; ++h) {
    const int a = stream.next_categorical(pi.row(h, x));
    const int b = stream.next_categorical(nu.row(h, x));
    const int x2 = stream.next_categorical(game.next_state_dist(h, x, a, b));
    ep.steps.push_back({h, x, a, b, game.r(h, x, a, b), x2});
    x = x2;
  }
  return ep;
}

}  // namespace mglab
