#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mglab/game_solvers.hpp"
#include "mglab/hypothesis.hpp"
#include "mglab/markov_game.hpp"
#include "mglab/rng.hpp"

namespace mglab {

// Chain of matching-pennies stages: per-state pennies payoffs scaled by
// 1/(1+x), the winner of the stage pushes the state right, the loser left.
inline MarkovGame make_matching_pennies_chain(int horizon, int num_states) {
  MarkovGame g(horizon, num_states, 2, 2);
  for (int h = 0; h < horizon; ++h)
    for (int x = 0; x < num_states; ++x) {
      const double scale = 1.0 / (1.0 + x);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const double r = (a == b ? scale : -scale);
          g.r(h, x, a, b) = r;
          const int x2 = r > 0 ? std::min(x + 1, num_states - 1) : std::max(x - 1, 0);
          g.p(h, x, a, b, x2) = 1.0;
        }
    }
  g.validate();
  return g;
}

// Random dense game; `sparsity` in [0,1) zeroes that fraction of candidate
// next states before normalization (at least one survives).
inline MarkovGame make_random_game(int horizon, int num_states, int num_actions,
                                   std::uint64_t seed, double sparsity = 0.0,
                                   double noise_floor = 0.05) {
  auto rng = RngStream::root(seed, "generate-random-game");
  MarkovGame g(horizon, num_states, num_actions, num_actions);
  for (int h = 0; h < horizon; ++h)
    for (int x = 0; x < num_states; ++x)
      for (int a = 0; a < num_actions; ++a)
        for (int b = 0; b < num_actions; ++b) {
          g.r(h, x, a, b) = rng.next_uniform(-1.0, 1.0);
          std::vector<double> row(num_states, 0.0);
          double sum = 0.0;
          for (int x2 = 0; x2 < num_states; ++x2) {
            double w = noise_floor + rng.next_double();
            if (sparsity > 0.0 && rng.next_double() < sparsity) w = 0.0;
            row[x2] = w;
            sum += w;
          }
          if (sum == 0.0) {
            row[static_cast<int>(rng.next_u64() % num_states)] = 1.0;
            sum = 1.0;
          }
          for (int x2 = 0; x2 < num_states; ++x2) g.p(h, x, a, b, x2) = row[x2] / sum;
        }
  g.validate();
  return g;
}

// Turn-based game: on odd steps reward and transition ignore P2's action, on
// even steps they ignore P1's.
inline MarkovGame make_turn_based_game(int horizon, int num_states, int num_actions,
                                       std::uint64_t seed) {
  auto rng = RngStream::root(seed, "generate-turn-based-game");
  MarkovGame g(horizon, num_states, num_actions, num_actions);
  for (int h = 0; h < horizon; ++h) {
    const bool p1_turn = (h % 2 == 0);
    for (int x = 0; x < num_states; ++x) {
      const int mover_actions = num_actions;
      std::vector<double> r(mover_actions);
      std::vector<std::vector<double>> rows(mover_actions, std::vector<double>(num_states));
      for (int m = 0; m < mover_actions; ++m) {
        r[m] = rng.next_uniform(-1.0, 1.0);
        double sum = 0.0;
        for (int x2 = 0; x2 < num_states; ++x2) sum += (rows[m][x2] = 0.05 + rng.next_double());
        for (int x2 = 0; x2 < num_states; ++x2) rows[m][x2] /= sum;
      }
      for (int a = 0; a < num_actions; ++a)
        for (int b = 0; b < num_actions; ++b) {
          const int mover = p1_turn ? a : b;
          g.r(h, x, a, b) = r[mover];
          for (int x2 = 0; x2 < num_states; ++x2) g.p(h, x, a, b, x2) = rows[mover][x2];
        }
    }
  }
  g.validate();
  return g;
}

struct GameGeneratorSpec {
  std::string kind;  // matching-pennies-chain | random | turn-based
  int horizon = 1;
  int num_states = 1;
  int num_actions = 2;
  double sparsity = 0.0;
};

inline MarkovGame generate_game(const GameGeneratorSpec& spec, std::uint64_t seed) {
  if (spec.kind == "matching-pennies-chain")
    return make_matching_pennies_chain(spec.horizon, spec.num_states);
  if (spec.kind == "random")
    return make_random_game(spec.horizon, spec.num_states, spec.num_actions, seed, spec.sparsity);
  if (spec.kind == "turn-based")
    return make_turn_based_game(spec.horizon, spec.num_states, spec.num_actions, seed);
  throw ConfigError("unknown game generator '" + spec.kind + "'");
}

// Realizable family: the exact truths (Q*, and Q^{pi, br(pi)} for each
// supplied policy) plus clamped-noise decoys. Decoys are resampled until
// they sit at least noise/2 away from every truth in sup norm.
inline FiniteValueFamily generate_realizable_family(const MarkovGame& game, int n_decoys,
                                                    double noise, std::uint64_t seed,
                                                    const PolicyFamily* policies = nullptr,
                                                    bool restrict_br_to_family = true) {
  auto rng = RngStream::root(seed, "generate-realizable-family");
  const GameSolution sol = ne_value_iteration(game);
  FiniteValueFamily fam;

  fam.members.push_back(ValueHypothesis::from_q_star(game, sol));
  fam.truth_tags.push_back(-1);

  if (policies != nullptr) {
    for (std::size_t i = 0; i < policies->members.size(); ++i) {
      const StochasticPolicy& pi = policies->members[i];
      StochasticPolicy br(game.horizon, game.num_states, game.num_actions2);
      if (restrict_br_to_family) {
        // Best response restricted to the family itself, matching the
        // coordinated setting's overloaded definition.
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < policies->members.size(); ++j) {
          const double v = evaluate_policy_pair(game, pi, policies->members[j]);
          if (v < best) {
            best = v;
            best_j = j;
          }
        }
        br = policies->members[best_j];
      } else {
        br = best_response_value_iteration(game, pi, FixedSide::player1).first;
      }
      const PairValues pv = policy_pair_values(game, pi, br);
      ValueHypothesis f(game.horizon, game.num_states, game.num_actions1, game.num_actions2);
      f.table = pv.q;
      fam.members.push_back(std::move(f));
      fam.truth_tags.push_back(static_cast<int>(i));
    }
  }

  const std::size_t num_truths = fam.members.size();
  const double bound = game.value_bound();
  const int retry_cap = 200;
  for (int d = 0; d < n_decoys; ++d) {
    bool placed = false;
    for (int attempt = 0; attempt < retry_cap && !placed; ++attempt) {
      ValueHypothesis decoy = fam.members[d % num_truths];
      for (double& v : decoy.table)
        v = std::clamp(v + rng.next_uniform(-noise, noise), -bound, bound);
      bool separated = true;
      for (std::size_t t = 0; t < num_truths; ++t)
        if (decoy.sup_distance(fam.members[t]) < noise / 2.0) {
          separated = false;
          break;
        }
      if (separated) {
        fam.members.push_back(std::move(decoy));
        fam.truth_tags.push_back(std::nullopt);
        placed = true;
      }
    }
    if (!placed)
      throw ConfigError("generate_realizable_family: could not separate decoy " +
                        std::to_string(d) + " after " + std::to_string(retry_cap) + " attempts");
  }
  fam.validate();
  return fam;
}

// Decoy-only family (no truths): random tables in the game's value range,
// for negative tests of the realizability checkers.
inline FiniteValueFamily generate_decoy_family(const MarkovGame& game, int count, double scale,
                                               std::uint64_t seed) {
  if (count < 1) throw ConfigError("generate_decoy_family: count must be >= 1");
  auto rng = RngStream::root(seed, "generate-decoy-family");
  const double bound = game.value_bound();
  FiniteValueFamily fam;
  for (int i = 0; i < count; ++i) {
    ValueHypothesis f(game.horizon, game.num_states, game.num_actions1, game.num_actions2);
    for (double& v : f.table)
      v = std::clamp(rng.next_uniform(-scale, scale), -bound, bound);
    fam.members.push_back(std::move(f));
  }
  fam.validate();
  return fam;
}

// Random policy family for one player; optionally seeded with distinguished
// members (uniform first, then pure lowest-action) before random fills.
inline PolicyFamily generate_policy_family(const MarkovGame& game, int count, std::uint64_t seed,
                                           bool for_player1 = true) {
  const int actions = for_player1 ? game.num_actions1 : game.num_actions2;
  auto rng = RngStream::root(seed, "generate-policy-family");
  PolicyFamily fam;
  for (int i = 0; i < count; ++i) {
    if (i == 0) {
      fam.members.push_back(StochasticPolicy::uniform(game.horizon, game.num_states, actions));
      continue;
    }
    StochasticPolicy p(game.horizon, game.num_states, actions);
    for (int h = 0; h < game.horizon; ++h)
      for (int x = 0; x < game.num_states; ++x) {
        double sum = 0.0;
        auto row = p.row(h, x);
        for (int a = 0; a < actions; ++a) sum += (row[a] = 0.05 + rng.next_double());
        for (int a = 0; a < actions; ++a) row[a] /= sum;
      }
    fam.members.push_back(std::move(p));
  }
  fam.validate();
  return fam;
}

// Candidate model family: the true game first, then perturbed decoys whose
// rewards and transitions are jittered by `noise` and renormalized.
inline ModelFamily generate_model_family(const MarkovGame& game, int n_decoys, double noise,
                                         std::uint64_t seed) {
  auto rng = RngStream::root(seed, "generate-model-family");
  ModelFamily fam;
  fam.members.push_back(game);
  for (int d = 0; d < n_decoys; ++d) {
    MarkovGame m = game;
    for (int h = 0; h < game.horizon; ++h)
      for (int x = 0; x < game.num_states; ++x)
        for (int a = 0; a < game.num_actions1; ++a)
          for (int b = 0; b < game.num_actions2; ++b) {
            m.r(h, x, a, b) = std::clamp(m.r(h, x, a, b) + rng.next_uniform(-noise, noise),
                                         game.reward_min, game.reward_max);
            double sum = 0.0;
            for (int x2 = 0; x2 < game.num_states; ++x2) {
              double w = std::max(0.0, m.p(h, x, a, b, x2) + rng.next_uniform(-noise, noise));
              m.p(h, x, a, b, x2) = w;
              sum += w;
            }
            if (sum <= 0.0) {
              m.p(h, x, a, b, static_cast<int>(rng.next_u64() % game.num_states)) = 1.0;
              sum = 1.0;
            }
            for (int x2 = 0; x2 < game.num_states; ++x2) m.p(h, x, a, b, x2) /= sum;
          }
    m.validate();
    fam.members.push_back(std::move(m));
  }
  fam.validate();
  return fam;
}

// Standard witness battery: next-state indicators, the raw reward, and their
// negations. All bounded by 1, so the ||g|| <= 2 budget holds with room.
inline TestFunctionFamily generate_indicator_tests(const MarkovGame& shape) {
  TestFunctionFamily fam;
  const std::size_t table =
      static_cast<std::size_t>(shape.num_states) * shape.num_actions1 * shape.num_actions2 *
      shape.num_states;
  auto blank = [&] {
    TestFunction g;
    g.num_states = shape.num_states;
    g.num_actions1 = shape.num_actions1;
    g.num_actions2 = shape.num_actions2;
    g.base.assign(table, 0.0);
    g.r_slope.assign(table, 0.0);
    return g;
  };
  for (int target = 0; target < shape.num_states; ++target) {
    TestFunction g = blank();
    for (int x = 0; x < shape.num_states; ++x)
      for (int a = 0; a < shape.num_actions1; ++a)
        for (int b = 0; b < shape.num_actions2; ++b) g.base[g.idx(x, a, b, target)] = 1.0;
    TestFunction neg = g;
    for (double& v : neg.base) v = -v;
    fam.members.push_back(std::move(g));
    fam.members.push_back(std::move(neg));
  }
  TestFunction gr = blank();
  for (double& v : gr.r_slope) v = 1.0;
  TestFunction gr_neg = gr;
  for (double& v : gr_neg.r_slope) v = -1.0;
  fam.members.push_back(std::move(gr));
  fam.members.push_back(std::move(gr_neg));
  return fam;
}

}  // namespace mglab
