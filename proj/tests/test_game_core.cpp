#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mglab/game_solvers.hpp"
#include "mglab/generators.hpp"
#include "mglab/markov_game.hpp"

using namespace mglab;

namespace {

// H=1 single-state game from a payoff matrix.
MarkovGame one_shot(const Mat& payoff) {
  MarkovGame g(1, 1, payoff.rows(), payoff.cols());
  for (int a = 0; a < payoff.rows(); ++a)
    for (int b = 0; b < payoff.cols(); ++b) {
      g.r(0, 0, a, b) = payoff(a, b);
      g.p(0, 0, a, b, 0) = 1.0;
    }
  g.validate();
  return g;
}

MarkovGame pennies_game() { return one_shot(Mat::from_rows({{1, -1}, {-1, 1}})); }

}  // namespace

TEST_CASE("game validation reports the first violation with indices") {
  MarkovGame g(1, 2, 2, 2);
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) g.p(0, x, a, b, 0) = 1.0;
  g.validate();

  SECTION("bad transition row") {
    g.p(0, 1, 0, 1, 0) = 0.5;
    CHECK_THROWS_WITH(g.validate(),
                      Catch::Matchers::ContainsSubstring("(h=0, x=1, a=0, b=1)"));
  }
  SECTION("reward out of range") {
    g.r(0, 0, 1, 0) = 1.5;
    CHECK_THROWS_WITH(g.validate(), Catch::Matchers::ContainsSubstring("reward"));
  }
  SECTION("bad initial state") {
    g.initial_state = 5;
    CHECK_THROWS_AS(g.validate(), InputError);
  }
}

TEST_CASE("H=1 matching pennies solves to value zero") {
  const MarkovGame g = pennies_game();
  const GameSolution sol = ne_value_iteration(g);
  CHECK(game_value(g, sol) == Catch::Approx(0.0).margin(1e-12));
  CHECK(sol.pi_star.at(0, 0, 0) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("action-independent first step adds stage values") {
  // h=0 pays nothing and moves to the single state of a second stage whose
  // payoff matrix R has known value.
  MarkovGame g(2, 1, 2, 2);
  const Mat payoff = Mat::from_rows({{0.7, 0.1}, {0.2, 0.4}});
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      g.p(0, 0, a, b, 0) = 1.0;
      g.r(1, 0, a, b) = payoff(a, b);
      g.p(1, 0, a, b, 0) = 1.0;
    }
  g.validate();
  const double stage_value = solve_matrix_game(payoff).value;
  const GameSolution sol = ne_value_iteration(g);
  CHECK(game_value(g, sol) == Catch::Approx(stage_value).margin(1e-9));
}

TEST_CASE("backward induction satisfies the Bellman recursion exactly") {
  const MarkovGame g = make_random_game(3, 3, 2, 91);
  const GameSolution sol = ne_value_iteration(g);
  for (int h = 0; h < g.horizon; ++h)
    for (int x = 0; x < g.num_states; ++x) {
      // v equals the matrix-game value of q at (h, x).
      Mat payoff(g.num_actions1, g.num_actions2);
      for (int a = 0; a < g.num_actions1; ++a)
        for (int b = 0; b < g.num_actions2; ++b) payoff(a, b) = sol.q(h, x, a, b);
      CHECK(sol.v(h, x) == Catch::Approx(solve_matrix_game(payoff).value).margin(1e-9));
      // q equals reward plus expected successor value.
      for (int a = 0; a < g.num_actions1; ++a)
        for (int b = 0; b < g.num_actions2; ++b) {
          double expect = g.r(h, x, a, b);
          if (h + 1 < g.horizon)
            for (int x2 = 0; x2 < g.num_states; ++x2)
              expect += g.p(h, x, a, b, x2) * sol.v(h + 1, x2);
          CHECK(sol.q(h, x, a, b) == Catch::Approx(expect).margin(1e-9));
        }
    }
}

TEST_CASE("NE policies are unexploitable and satisfy the sandwich") {
  const MarkovGame g = make_random_game(2, 2, 2, 17);
  const GameSolution sol = ne_value_iteration(g);
  const double v_star = game_value(g, sol);

  const auto [nu_br, v_against_pi] =
      best_response_value_iteration(g, sol.pi_star, FixedSide::player1);
  const auto [pi_br, v_against_nu] =
      best_response_value_iteration(g, sol.nu_star, FixedSide::player2);
  CHECK(v_against_pi == Catch::Approx(v_star).margin(1e-6));
  CHECK(v_against_nu == Catch::Approx(v_star).margin(1e-6));

  auto rng = RngStream::root(5, "sandwich");
  for (int trial = 0; trial < 100; ++trial) {
    StochasticPolicy pi(g.horizon, g.num_states, g.num_actions1);
    StochasticPolicy nu(g.horizon, g.num_states, g.num_actions2);
    for (auto* p : {&pi, &nu})
      for (int h = 0; h < g.horizon; ++h)
        for (int x = 0; x < g.num_states; ++x) {
          auto row = p->row(h, x);
          double sum = 0.0;
          for (auto& v : row) sum += (v = 0.01 + rng.next_double());
          for (auto& v : row) v /= sum;
        }
    const double lower = best_response_value_iteration(g, pi, FixedSide::player1).second;
    const double upper = best_response_value_iteration(g, nu, FixedSide::player2).second;
    CHECK(lower <= v_star + 1e-6);
    CHECK(v_star <= upper + 1e-6);
  }
}

TEST_CASE("best responses in matching pennies") {
  const MarkovGame g = pennies_game();
  const GameSolution sol = ne_value_iteration(g);

  const auto [nu, value] = best_response_value_iteration(g, sol.pi_star, FixedSide::player1);
  CHECK(value == Catch::Approx(0.0).margin(1e-9));

  const StochasticPolicy heads = StochasticPolicy::pure(1, 1, 2, 0);
  const auto [nu2, value2] = best_response_value_iteration(g, heads, FixedSide::player1);
  CHECK(value2 == Catch::Approx(-1.0));
  CHECK(nu2.at(0, 0, 1) == 1.0);  // opponent answers tails
}

TEST_CASE("best response rejects mis-shaped policies") {
  const MarkovGame g = pennies_game();
  CHECK_THROWS_AS(
      best_response_value_iteration(g, StochasticPolicy::uniform(2, 1, 2), FixedSide::player1),
      InputError);
}

TEST_CASE("exact evaluation: uniform pennies and NE fixed points") {
  const MarkovGame g = pennies_game();
  const StochasticPolicy u1 = StochasticPolicy::uniform(1, 1, 2);
  CHECK(evaluate_policy_pair(g, u1, u1) == Catch::Approx(0.0).margin(1e-12));

  const MarkovGame rg = make_random_game(3, 2, 2, 23);
  const GameSolution sol = ne_value_iteration(rg);
  const auto [nu_br, value] = best_response_value_iteration(rg, sol.pi_star, FixedSide::player1);
  CHECK(evaluate_policy_pair(rg, sol.pi_star, nu_br) == Catch::Approx(value).margin(1e-9));
  CHECK(evaluate_policy_pair(rg, sol.pi_star, sol.nu_star) ==
        Catch::Approx(game_value(rg, sol)).margin(1e-9));
}

TEST_CASE("forward evaluation agrees with backward pair values") {
  const MarkovGame g = make_random_game(3, 3, 2, 37);
  const StochasticPolicy pi = StochasticPolicy::uniform(3, 3, 2);
  const StochasticPolicy nu = StochasticPolicy::pure(3, 3, 2, 1);
  const PairValues pv = policy_pair_values(g, pi, nu);
  CHECK(evaluate_policy_pair(g, pi, nu) ==
        Catch::Approx(pv.v_at(0, g.initial_state)).margin(1e-12));
}

TEST_CASE("sampled returns agree with exact evaluation within 3 standard errors") {
  const MarkovGame g = make_random_game(2, 2, 2, 29);
  const StochasticPolicy pi = StochasticPolicy::uniform(2, 2, 2);
  const StochasticPolicy nu = StochasticPolicy::uniform(2, 2, 2);
  const double exact = evaluate_policy_pair(g, pi, nu);

  auto rng = RngStream::root(101, "mc-eval");
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    auto stream = rng.child(i);
    const double ret = sample_episode(g, pi, nu, stream).total_return();
    sum += ret;
    sum_sq += ret * ret;
  }
  const double mean = sum / n;
  const double se = std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - exact) <= 3.0 * se + 1e-12);
}

TEST_CASE("episode sampling is deterministic and well-formed") {
  const MarkovGame g = make_random_game(4, 3, 2, 31);
  const StochasticPolicy pi = StochasticPolicy::uniform(4, 3, 2);
  const StochasticPolicy nu = StochasticPolicy::uniform(4, 3, 2);

  auto s1 = RngStream::root(9, "episode").child(0);
  auto s2 = RngStream::root(9, "episode").child(0);
  const EpisodeRecord e1 = sample_episode(g, pi, nu, s1);
  const EpisodeRecord e2 = sample_episode(g, pi, nu, s2);
  e1.validate(g);
  REQUIRE(e1.steps.size() == e2.steps.size());
  for (std::size_t i = 0; i < e1.steps.size(); ++i) {
    CHECK(e1.steps[i].x == e2.steps[i].x);
    CHECK(e1.steps[i].a == e2.steps[i].a);
    CHECK(e1.steps[i].b == e2.steps[i].b);
  }

  // Deterministic game and pure policies give the unique trajectory.
  const MarkovGame chain = make_matching_pennies_chain(3, 3);
  const StochasticPolicy heads = StochasticPolicy::pure(3, 3, 2, 0);
  auto s3 = RngStream::root(1, "det").child(0);
  const EpisodeRecord e3 = sample_episode(chain, heads, heads, s3);
  CHECK(e3.steps[0].x == 0);
  CHECK(e3.steps[1].x == 1);  // a == b pays +, winner pushes right
  CHECK(e3.steps[2].x == 2);
}

TEST_CASE("empirical transition frequencies match the kernel within 3 sigma") {
  const MarkovGame g = make_random_game(1, 3, 1, 41);
  const StochasticPolicy p1 = StochasticPolicy::uniform(1, 3, 1);
  auto rng = RngStream::root(77, "kernel-freq");
  const int n = 100000;
  std::vector<int> counts(g.num_states, 0);
  for (int i = 0; i < n; ++i) {
    auto stream = rng.child(i);
    ++counts[sample_episode(g, p1, p1, stream).steps[0].x_next];
  }
  for (int x2 = 0; x2 < g.num_states; ++x2) {
    const double p = g.p(0, g.initial_state, 0, 0, x2);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(counts[x2]) / n - p) <= 3.0 * se + 1e-9);
  }
}

TEST_CASE("swapped game negates the value") {
  const MarkovGame g = make_random_game(2, 2, 2, 53);
  const MarkovGame s = swap_players(g);
  s.validate();
  const double v = game_value(g, ne_value_iteration(g));
  const double vs = game_value(s, ne_value_iteration(s));
  CHECK(v == Catch::Approx(-vs).margin(1e-9));
}

TEST_CASE("turn-based generator makes the idle player's action irrelevant") {
  const MarkovGame g = make_turn_based_game(2, 2, 2, 59);
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a) {
      CHECK(g.r(0, x, a, 0) == g.r(0, x, a, 1));  // P2 idle at h=0
      CHECK(g.r(1, x, 0, a) == g.r(1, x, 1, a));  // P1 idle at h=1
    }
}
