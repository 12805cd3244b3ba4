#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "mglab/generators.hpp"
#include "mglab/linear_onemg.hpp"

using namespace mglab;

namespace {

MarkovGame small_game() { return make_random_game(3, 2, 2, 401); }

}  // namespace

TEST_CASE("ridge update closed forms") {
  LinearLearnerState state(4, 1, 2);

  SECTION("no data gives w = 0") {
    const Eigen::VectorXd w = ridge_update(state, 0, Eigen::VectorXd::Zero(2));
    CHECK(w.norm() == 0.0);
  }

  SECTION("one transition with phi = e1 and target 0.5 gives w = (0.25, 0, ...)") {
    MarkovGame g(1, 2, 2, 1);
    for (int x = 0; x < 2; ++x)
      for (int a = 0; a < 2; ++a) g.p(0, x, a, 0, 0) = 1.0;
    g.r(0, 0, 0, 0) = 0.5;
    FeatureMap fm(1, 2, 2, 1, 4);
    for (int x = 0; x < 2; ++x)
      for (int a = 0; a < 2; ++a) fm.at(0, x, a, 0)[x * 2 + a] = 1.0;
    EpisodeRecord ep;
    ep.steps.push_back({0, 0, 0, 0, 0.5, 0});
    state.absorb(ep, fm);
    const Eigen::VectorXd w = ridge_update(state, 0, Eigen::VectorXd::Zero(2));
    CHECK(w[0] == Catch::Approx(0.25));  // Lambda = diag(2,1,1,1)
    CHECK(w[1] == 0.0);
    CHECK(w[2] == 0.0);
    CHECK(w[3] == 0.0);
  }
}

TEST_CASE("one-hot ridge equals the scalar formula count*mean/(count+1)") {
  const MarkovGame g = small_game();
  const FeatureMap fm = FeatureMap::one_hot(g);
  LinearLearnerState state(fm.dim, g.horizon, g.num_states);
  const StochasticPolicy u = StochasticPolicy::uniform(g.horizon, g.num_states, 2);
  auto rng = RngStream::root(1, "ridge-onehot");
  std::vector<EpisodeRecord> eps;
  for (int i = 0; i < 40; ++i) {
    auto stream = rng.child(i);
    eps.push_back(sample_episode(g, u, u, stream));
    state.absorb(eps.back(), fm);
  }
  const int h = 1;
  Eigen::VectorXd v_next(g.num_states);
  for (int x = 0; x < g.num_states; ++x) v_next[x] = 0.3 * x;
  const Eigen::VectorXd w = ridge_update(state, h, v_next);
  for (int x = 0; x < g.num_states; ++x)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        int count = 0;
        double target_sum = 0.0;
        for (const auto& ep : eps) {
          const auto& s = ep.steps[h];
          if (s.x == x && s.a == a && s.b == b) {
            ++count;
            target_sum += s.r + v_next[s.x_next];
          }
        }
        const int j = (x * 2 + a) * 2 + b;
        CHECK(w[j] == Catch::Approx(target_sum / (count + 1)).margin(1e-12));
      }
}

TEST_CASE("empty-data diag-exact plan pushes theta to the width and clamps") {
  const MarkovGame g = small_game();
  const FeatureMap fm = FeatureMap::one_hot(g);
  LinearLearnerState state(fm.dim, g.horizon, g.num_states);
  const double width = 50.0;
  const OptimisticPlan plan = plan_optimistic(g, fm, state, width, PlanMode::diag_exact);
  for (int h = 0; h < g.horizon; ++h)
    for (int j = 0; j < fm.dim; ++j) CHECK(plan.theta[h][j] == Catch::Approx(width));
  // Every payoff clamps to the per-level bound, so V_1 is the full-horizon
  // optimistic constant.
  CHECK(plan.objective == Catch::Approx(g.horizon * 1.0));
}

TEST_CASE("diag-exact equals an independent per-entry-bonus value iteration") {
  const MarkovGame g = small_game();
  const FeatureMap fm = FeatureMap::one_hot(g);
  LinearLearnerState state(fm.dim, g.horizon, g.num_states);
  const StochasticPolicy u = StochasticPolicy::uniform(g.horizon, g.num_states, 2);
  auto rng = RngStream::root(2, "bonus-vi");
  std::vector<EpisodeRecord> eps;
  for (int i = 0; i < 60; ++i) {
    auto stream = rng.child(i);
    eps.push_back(sample_episode(g, u, u, stream));
    state.absorb(eps.back(), fm);
  }
  const double width = 4.0;
  const OptimisticPlan plan = plan_optimistic(g, fm, state, width, PlanMode::diag_exact);

  // Oracle: tabular bonus value iteration rebuilt from the raw episodes.
  std::vector<double> v_next(g.num_states, 0.0), v_here(g.num_states, 0.0);
  for (int h = g.horizon - 1; h >= 0; --h) {
    const double bound = (g.horizon - h) * 1.0;
    for (int x = 0; x < g.num_states; ++x) {
      Mat payoff(2, 2);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          int count = 0;
          double target_sum = 0.0;
          for (const auto& ep : eps) {
            const auto& s = ep.steps[h];
            if (s.x == x && s.a == a && s.b == b) {
              ++count;
              target_sum += s.r + v_next[s.x_next];
            }
          }
          const double q = target_sum / (count + 1) + width / std::sqrt(1.0 + count);
          payoff(a, b) = std::clamp(q, -bound, bound);
        }
      const MatrixGameSolution mg = solve_matrix_game(payoff);
      v_here[x] = mg.value;
    }
    v_next = v_here;
  }
  CHECK(plan.objective == Catch::Approx(v_next[g.initial_state]).margin(1e-9));
}

TEST_CASE("search mode dominates the theta = w plan") {
  const MarkovGame g = small_game();
  const FeatureMap fm = FeatureMap::one_hot(g);
  LinearLearnerState state(fm.dim, g.horizon, g.num_states);
  const StochasticPolicy u = StochasticPolicy::uniform(g.horizon, g.num_states, 2);
  auto rng = RngStream::root(3, "search-mode");
  for (int i = 0; i < 30; ++i) {
    auto stream = rng.child(i);
    state.absorb(sample_episode(g, u, u, stream), fm);
  }
  const OptimisticPlan at_w = plan_optimistic(g, fm, state, 0.0, PlanMode::search, 1, 7);
  const OptimisticPlan searched = plan_optimistic(g, fm, state, 2.0, PlanMode::search, 8, 7);
  CHECK(searched.objective >= at_w.objective - 1e-12);
}

TEST_CASE("diag-exact refuses non-diagonal Gram matrices") {
  const MarkovGame g = make_random_game(1, 1, 2, 409);
  FeatureMap fm(1, 1, 2, 2, 2);
  // Overlapping features make the Gram non-diagonal once data arrives.
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      fm.at(0, 0, a, b)[0] = 0.6;
      fm.at(0, 0, a, b)[1] = 0.6;
    }
  LinearLearnerState state(2, 1, 1);
  EpisodeRecord ep;
  ep.steps.push_back({0, 0, 0, 0, 0.0, 0});
  state.absorb(ep, fm);
  CHECK_THROWS_AS(plan_optimistic(g, fm, state, 1.0, PlanMode::diag_exact), InputError);
}

TEST_CASE("elliptic potential check") {
  SECTION("empty sequence gives zeros") {
    const EllipticPotential out = elliptic_potential_check({});
    CHECK(out.log_det_ratio == 0.0);
    CHECK(out.potential_sum == 0.0);
    CHECK(out.doubled_log_det == 0.0);
  }

  SECTION("single basis vector: log 2 <= 1 <= 2 log 2") {
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
    e1[0] = 1.0;
    const EllipticPotential out = elliptic_potential_check({e1});
    CHECK(out.log_det_ratio == Catch::Approx(std::log(2.0)));
    CHECK(out.potential_sum == Catch::Approx(1.0));
    CHECK(out.doubled_log_det == Catch::Approx(2.0 * std::log(2.0)));
  }

  SECTION("100 random unit vectors in dimension 4 satisfy both inequalities") {
    auto rng = RngStream::root(5, "elliptic");
    std::vector<Eigen::VectorXd> phis;
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd v(4);
      for (int j = 0; j < 4; ++j) v[j] = rng.next_uniform(-1.0, 1.0);
      v.normalize();
      phis.push_back(v);
    }
    CHECK_NOTHROW(elliptic_potential_check(phis));
  }

  SECTION("norm violations are rejected") {
    Eigen::VectorXd big = Eigen::VectorXd::Constant(2, 1.0);
    CHECK_THROWS_AS(elliptic_potential_check({big}), InputError);
  }
}

TEST_CASE("run_linear basics: K = 0, determinism, shape checks") {
  const MarkovGame g = small_game();
  const FeatureMap fm = FeatureMap::one_hot(g);
  LinearOnemgConfig cfg;
  cfg.episodes = 0;
  CHECK(run_linear(g, fm, cfg, Opponent::best_response()).trace.empty());

  cfg.episodes = 25;
  cfg.seed = 6;
  cfg.beta = 2.0;
  const LinearOnemgResult r1 = run_linear(g, fm, cfg, Opponent::best_response());
  const LinearOnemgResult r2 = run_linear(g, fm, cfg, Opponent::best_response());
  REQUIRE(r1.trace.size() == r2.trace.size());
  for (std::size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r1.trace[i].regret_increment == r2.trace[i].regret_increment);
    CHECK(r1.trace[i].planned_value == r2.trace[i].planned_value);
  }

  FeatureMap wrong(g.horizon, g.num_states + 1, 2, 2, 3);
  CHECK_THROWS_AS(run_linear(g, wrong, cfg, Opponent::best_response()), InputError);
}

TEST_CASE("optimism and feasibility along a short run") {
  const MarkovGame g = small_game();
  const FeatureMap fm = FeatureMap::one_hot(g);
  const GameSolution sol = ne_value_iteration(g);
  const double v_star = game_value(g, sol);

  LinearOnemgConfig cfg;
  cfg.episodes = 120;
  cfg.seed = 9;
  cfg.beta = 3.0;  // width 9 comfortably covers ||theta*||
  const LinearOnemgResult res = run_linear(g, fm, cfg, Opponent::best_response());

  // Feasibility after each episode, and optimism of the next plan while the
  // truth stays feasible. The first plan sees no data and is optimistic by
  // clamping.
  CHECK(res.trace.front().planned_value >= v_star - 1e-8);
  for (std::size_t i = 0; i + 1 < res.trace.size(); ++i) {
    CHECK(res.trace[i].theta_star_feasible);
    if (res.trace[i].theta_star_feasible)
      CHECK(res.trace[i + 1].planned_value >= v_star - 1e-8);
  }

  // Elliptic potential inequalities on the realized feature sequences.
  for (int h = 0; h < g.horizon; ++h)
    CHECK_NOTHROW(elliptic_potential_check(res.state.realized_features[h]));
}

TEST_CASE("theory beta formula") {
  CHECK(linear_theory_beta(12, 3, 2000, 1.0, 0.05) ==
        Catch::Approx(std::sqrt(12.0) * std::log(3.0 * 2000.0 / 0.05)));
}

TEST_CASE("search-mode learner runs on overlapping features") {
  // Two-block features: cells share coordinates, so the Gram is dense and
  // diag-exact does not apply.
  const MarkovGame g = make_random_game(2, 2, 2, 421);
  FeatureMap fm(2, 2, 2, 2, 3);
  auto rng = RngStream::root(5, "dense-features");
  for (int h = 0; h < 2; ++h)
    for (int x = 0; x < 2; ++x)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          auto row = fm.at(h, x, a, b);
          double n2 = 0.0;
          for (int j = 0; j < 3; ++j) {
            row[j] = rng.next_uniform(-1.0, 1.0);
            n2 += row[j] * row[j];
          }
          const double scale = 1.0 / std::max(1.0, std::sqrt(n2));
          for (int j = 0; j < 3; ++j) row[j] *= scale;
        }
  fm.validate();

  LinearOnemgConfig cfg;
  cfg.episodes = 25;
  cfg.beta = 1.0;
  cfg.mode = PlanMode::search;
  cfg.n_restarts = 4;
  cfg.seed = 11;
  const LinearOnemgResult r1 = run_linear(g, fm, cfg, Opponent::self_nash());
  const LinearOnemgResult r2 = run_linear(g, fm, cfg, Opponent::self_nash());
  REQUIRE(r1.trace.size() == 25);
  for (std::size_t i = 0; i < r1.trace.size(); ++i) {
    CHECK(r1.trace[i].planned_value == r2.trace[i].planned_value);
    CHECK(r1.trace[i].regret_increment == r2.trace[i].regret_increment);
  }
  // Elliptic potential holds on whatever the searcher played.
  for (int h = 0; h < g.horizon; ++h)
    CHECK_NOTHROW(elliptic_potential_check(r1.state.realized_features[h]));
}
