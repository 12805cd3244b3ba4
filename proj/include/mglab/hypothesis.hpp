#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mglab/game_solvers.hpp"
#include "mglab/markov_game.hpp"
#include "mglab/matrix_game.hpp"

namespace mglab {

// A candidate Q-function tuple f = (f_1, ..., f_H), tabular-explicit.
struct ValueHypothesis {
  int horizon = 0;
  int num_states = 0;
  int num_actions1 = 0;
  int num_actions2 = 0;
  std::vector<double> table;  // (h, x, a, b)

  ValueHypothesis() = default;
  ValueHypothesis(int h, int s, int a1, int a2, double fill = 0.0)
      : horizon(h), num_states(s), num_actions1(a1), num_actions2(a2),
        table(static_cast<std::size_t>(h) * s * a1 * a2, fill) {}

  static ValueHypothesis from_q_star(const MarkovGame& game, const GameSolution& sol) {
    ValueHypothesis f(game.horizon, game.num_states, game.num_actions1, game.num_actions2);
    f.table = sol.q_star;
    return f;
  }

  std::size_t cell(int h, int x, int a, int b) const {
    return ((static_cast<std::size_t>(h) * num_states + x) * num_actions1 + a) * num_actions2 + b;
  }
  double& at(int h, int x, int a, int b) { return table[cell(h, x, a, b)]; }
  double at(int h, int x, int a, int b) const { return table[cell(h, x, a, b)]; }

  Mat payoff(int h, int x) const {
    Mat m(num_actions1, num_actions2);
    for (int a = 0; a < num_actions1; ++a)
      for (int b = 0; b < num_actions2; ++b) m(a, b) = at(h, x, a, b);
    return m;
  }

  // E_{a~pi_h(x), b~nu_h(x)} f_h(x, a, b)
  double expected(int h, int x, std::span<const double> pi_row,
                  std::span<const double> nu_row) const {
    double v = 0.0;
    for (int a = 0; a < num_actions1; ++a) {
      if (pi_row[a] == 0.0) continue;
      double inner = 0.0;
      for (int b = 0; b < num_actions2; ++b) inner += at(h, x, a, b) * nu_row[b];
      v += pi_row[a] * inner;
    }
    return v;
  }

  double sup_distance(const ValueHypothesis& other) const {
    double d = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i)
      d = std::max(d, std::abs(table[i] - other.table[i]));
    return d;
  }

  bool operator==(const ValueHypothesis&) const = default;
};

// Per-state saddle point data of one hypothesis, computed once and reused.
struct HypothesisSaddle {
  StochasticPolicy max_min;    // pi_f
  StochasticPolicy min_max;    // nu_f
  std::vector<double> values;  // (h, x): matrix-game value of f_h(x, ., .)

  double value(int h, int x) const {
    return values[static_cast<std::size_t>(h) * max_min.num_states + x];
  }
};

// Per (h, x), the saddle point of f_h(x, ., .).
inline HypothesisSaddle solve_hypothesis(const ValueHypothesis& f, double tol = 1e-9) {
  HypothesisSaddle s;
  s.max_min = StochasticPolicy(f.horizon, f.num_states, f.num_actions1);
  s.min_max = StochasticPolicy(f.horizon, f.num_states, f.num_actions2);
  s.values.assign(static_cast<std::size_t>(f.horizon) * f.num_states, 0.0);
  for (int h = 0; h < f.horizon; ++h)
    for (int x = 0; x < f.num_states; ++x) {
      const MatrixGameSolution mg = solve_matrix_game(f.payoff(h, x), tol);
      s.max_min.set_row(h, x, mg.row_policy);
      s.min_max.set_row(h, x, mg.col_policy);
      s.values[static_cast<std::size_t>(h) * f.num_states + x] = mg.value;
    }
  return s;
}

inline std::pair<StochasticPolicy, StochasticPolicy> induced_max_min_policy(
    const ValueHypothesis& f, double tol = 1e-9) {
  HypothesisSaddle s = solve_hypothesis(f, tol);
  return {std::move(s.max_min), std::move(s.min_max)};
}

// Matrix-game value of f_h(x, ., .); equals f(x, pi_f, nu_f) at the saddle.
inline double hypothesis_ne_value(const ValueHypothesis& f, int x, int h = 0,
                                  double tol = 1e-9) {
  return solve_matrix_game(f.payoff(h, x), tol).value;
}

// Finite explicit family of complete tuples. truth_tags, when present, mark
// members equal to exact Q-functions (used by retention audits); tag -1 means
// Q*, tag i >= 0 means Q^{pi_i, br(pi_i)} for member i of a policy family.
struct FiniteValueFamily {
  std::vector<ValueHypothesis> members;
  std::vector<std::optional<int>> truth_tags;

  void validate() const {
    if (members.empty()) throw InputError("value family: must have at least one member");
    for (std::size_t i = 1; i < members.size(); ++i)
      if (members[i].horizon != members[0].horizon ||
          members[i].num_states != members[0].num_states ||
          members[i].num_actions1 != members[0].num_actions1 ||
          members[i].num_actions2 != members[0].num_actions2)
        throw InputError("value family: member " + std::to_string(i) + " has mismatched shape");
    if (!truth_tags.empty() && truth_tags.size() != members.size())
      throw InputError("value family: truth tags length mismatch");
  }

  bool tagged() const { return !truth_tags.empty(); }
  std::size_t size() const { return members.size(); }
};

// Expands per-step component lists into full tuples (the family file format
// allows either). Components are single-level tables (horizon 1, stored at
// level 0). Cardinality above the cap is refused, not truncated.
inline FiniteValueFamily expand_product_family(
    const std::vector<std::vector<ValueHypothesis>>& per_step,
    std::size_t cardinality_cap = 100000) {
  if (per_step.empty()) throw InputError("product family: no levels");
  const int horizon = static_cast<int>(per_step.size());
  std::size_t total = 1;
  for (const auto& level : per_step) {
    if (level.empty()) throw InputError("product family: empty level");
    total *= level.size();
    if (total > cardinality_cap)
      throw InputError("product family: cardinality exceeds cap " +
                       std::to_string(cardinality_cap));
  }
  const auto& proto = per_step[0][0];
  FiniteValueFamily fam;
  fam.members.reserve(total);
  std::vector<std::size_t> idx(per_step.size(), 0);
  for (std::size_t n = 0; n < total; ++n) {
    ValueHypothesis f(horizon, proto.num_states, proto.num_actions1, proto.num_actions2);
    for (int h = 0; h < horizon; ++h) {
      const ValueHypothesis& part = per_step[h][idx[h]];
      for (int x = 0; x < proto.num_states; ++x)
        for (int a = 0; a < proto.num_actions1; ++a)
          for (int b = 0; b < proto.num_actions2; ++b) f.at(h, x, a, b) = part.at(0, x, a, b);
    }
    fam.members.push_back(std::move(f));
    for (int h = horizon - 1; h >= 0; --h) {
      if (++idx[h] < per_step[h].size()) break;
      idx[h] = 0;
    }
  }
  return fam;
}

// Finite policy class for one player.
struct PolicyFamily {
  std::vector<StochasticPolicy> members;

  void validate() const {
    if (members.empty()) throw InputError("policy family: must be nonempty");
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i].horizon != members[0].horizon ||
          members[i].num_states != members[0].num_states ||
          members[i].num_actions != members[0].num_actions)
        throw InputError("policy family: member " + std::to_string(i) + " shape mismatch");
      members[i].validate("policy family member " + std::to_string(i));
    }
  }
  std::size_t size() const { return members.size(); }
};

// Best response to pi inside hypothesis f. Unrestricted: per (h, x) the pure
// argmin column of pi_h(x)' f_h(x, ., .). Restricted: per (h, x), the member
// distribution of the policy family minimizing the induced value; ties go to
// the lowest member index.
inline StochasticPolicy induced_best_response(const ValueHypothesis& f,
                                              const StochasticPolicy& pi,
                                              const PolicyFamily* restrict_to = nullptr) {
  if (pi.horizon != f.horizon || pi.num_states != f.num_states ||
      pi.num_actions != f.num_actions1)
    throw InputError("induced_best_response: policy shape mismatch");
  StochasticPolicy nu(f.horizon, f.num_states, f.num_actions2);
  if (restrict_to != nullptr && restrict_to->members.empty())
    throw InputError("induced_best_response: empty restriction family");
  for (int h = 0; h < f.horizon; ++h)
    for (int x = 0; x < f.num_states; ++x) {
      if (restrict_to == nullptr) {
        int best = 0;
        double best_v = std::numeric_limits<double>::infinity();
        for (int b = 0; b < f.num_actions2; ++b) {
          double v = 0.0;
          for (int a = 0; a < f.num_actions1; ++a) v += pi.at(h, x, a) * f.at(h, x, a, b);
          if (v < best_v) {
            best_v = v;
            best = b;
          }
        }
        nu.at(h, x, best) = 1.0;
      } else {
        int best = 0;
        double best_v = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < restrict_to->members.size(); ++m) {
          const double v = f.expected(h, x, pi.row(h, x), restrict_to->members[m].row(h, x));
          if (v < best_v) {
            best_v = v;
            best = static_cast<int>(m);
          }
        }
        nu.set_row(h, x, restrict_to->members[best].row(h, x));
      }
    }
  return nu;
}

// log covering number at scale eps: cardinality for finite families.
inline double covering_log(const FiniteValueFamily& family, double eps) {
  if (eps <= 0.0) throw InputError("covering_log: eps must be positive");
  return std::log(static_cast<double>(family.size()));
}

inline double covering_log(const PolicyFamily& family, double eps) {
  if (eps <= 0.0) throw InputError("covering_log: eps must be positive");
  return std::log(static_cast<double>(family.size()));
}

// Linear family bound d log(1 + 2R/eps); a reported constant feeding beta,
// not an exact cover.
inline double covering_log_linear(int dim, double radius, double eps) {
  if (eps <= 0.0) throw InputError("covering_log_linear: eps must be positive");
  return dim * std::log(1.0 + 2.0 * radius / eps);
}

// Pseudometric on policies: the largest value gap any family member can see,
// max_h max_{f,x,b} |f(x,pi,b) - f(x,pi',b)|.
inline double policy_distance(const StochasticPolicy& p1, const StochasticPolicy& p2,
                              const FiniteValueFamily& context) {
  double d = 0.0;
  for (const ValueHypothesis& f : context.members)
    for (int h = 0; h < f.horizon; ++h)
      for (int x = 0; x < f.num_states; ++x)
        for (int b = 0; b < f.num_actions2; ++b) {
          double v1 = 0.0, v2 = 0.0;
          for (int a = 0; a < f.num_actions1; ++a) {
            v1 += p1.at(h, x, a) * f.at(h, x, a, b);
            v2 += p2.at(h, x, a) * f.at(h, x, a, b);
          }
          d = std::max(d, std::abs(v1 - v2));
        }
  return d;
}

// Linear-in-feature family: f_h(x,a,b) = phi(h,x,a,b)' theta_h with
// ||phi|| <= 1 and ||theta_h|| <= param_bound (default sqrt(d)).
struct FeatureMap {
  int horizon = 0;
  int num_states = 0;
  int num_actions1 = 0;
  int num_actions2 = 0;
  int dim = 0;
  double param_bound = 0.0;
  std::vector<double> phi;  // (h, x, a, b, d)

  FeatureMap() = default;
  FeatureMap(int h, int s, int a1, int a2, int d)
      : horizon(h), num_states(s), num_actions1(a1), num_actions2(a2), dim(d),
        param_bound(std::sqrt(static_cast<double>(d))),
        phi(static_cast<std::size_t>(h) * s * a1 * a2 * d, 0.0) {}

  std::span<const double> at(int h, int x, int a, int b) const {
    const std::size_t cell =
        ((static_cast<std::size_t>(h) * num_states + x) * num_actions1 + a) * num_actions2 + b;
    return {phi.data() + cell * dim, static_cast<std::size_t>(dim)};
  }
  std::span<double> at(int h, int x, int a, int b) {
    const std::size_t cell =
        ((static_cast<std::size_t>(h) * num_states + x) * num_actions1 + a) * num_actions2 + b;
    return {phi.data() + cell * dim, static_cast<std::size_t>(dim)};
  }

  // One indicator coordinate per (x, a, b) cell, shared across levels.
  static FeatureMap one_hot(const MarkovGame& game) {
    const int d = game.num_states * game.num_actions1 * game.num_actions2;
    FeatureMap fm(game.horizon, game.num_states, game.num_actions1, game.num_actions2, d);
    for (int h = 0; h < game.horizon; ++h)
      for (int x = 0; x < game.num_states; ++x)
        for (int a = 0; a < game.num_actions1; ++a)
          for (int b = 0; b < game.num_actions2; ++b)
            fm.at(h, x, a, b)[(x * game.num_actions1 + a) * game.num_actions2 + b] = 1.0;
    return fm;
  }

  bool is_one_hot() const {
    for (int h = 0; h < horizon; ++h)
      for (int x = 0; x < num_states; ++x)
        for (int a = 0; a < num_actions1; ++a)
          for (int b = 0; b < num_actions2; ++b) {
            int nonzero = 0;
            for (double v : at(h, x, a, b))
              if (v != 0.0) {
                ++nonzero;
                if (v != 1.0) return false;
              }
            if (nonzero != 1) return false;
          }
    return true;
  }

  void validate() const {
    if (dim < 1) throw InputError("feature map: dimension must be positive");
    for (int h = 0; h < horizon; ++h)
      for (int x = 0; x < num_states; ++x)
        for (int a = 0; a < num_actions1; ++a)
          for (int b = 0; b < num_actions2; ++b) {
            double n2 = 0.0;
            for (double v : at(h, x, a, b)) n2 += v * v;
            if (n2 > 1.0 + 1e-9)
              throw InputError("feature map: ||phi|| = " + std::to_string(std::sqrt(n2)) +
                               " > 1 at (h=" + std::to_string(h) + ", x=" + std::to_string(x) +
                               ", a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")");
          }
  }
};

// Finite family of candidate models sharing the true game's shape.
struct ModelFamily {
  std::vector<MarkovGame> members;

  void validate() const {
    if (members.empty()) throw InputError("model family: must be nonempty");
    for (std::size_t i = 0; i < members.size(); ++i) {
      const MarkovGame& m = members[i];
      if (m.horizon != members[0].horizon || m.num_states != members[0].num_states ||
          m.num_actions1 != members[0].num_actions1 ||
          m.num_actions2 != members[0].num_actions2 ||
          m.initial_state != members[0].initial_state)
        throw InputError("model family: member " + std::to_string(i) + " shape mismatch");
      m.validate();
    }
  }
  std::size_t size() const { return members.size(); }
};

// Test function g(x, a, b, r, x'), affine in the reward argument:
// g = base(x,a,b,x') + r_slope(x,a,b,x') * r. Tabulating against a model's
// deterministic reward makes the model-side expectation an exact finite sum.
struct TestFunction {
  int num_states = 0;
  int num_actions1 = 0;
  int num_actions2 = 0;
  std::vector<double> base;     // (x, a, b, x')
  std::vector<double> r_slope;  // (x, a, b, x')

  std::size_t idx(int x, int a, int b, int x2) const {
    return ((static_cast<std::size_t>(x) * num_actions1 + a) * num_actions2 + b) * num_states +
           x2;
  }
  double eval(int x, int a, int b, double r, int x2) const {
    const std::size_t i = idx(x, a, b, x2);
    return base[i] + r_slope[i] * r;
  }
};

struct TestFunctionFamily {
  std::vector<TestFunction> members;

  // Boundedness ||g||_inf <= bound over the reward range.
  void validate(double reward_min, double reward_max, double bound = 2.0) const {
    const double rmax = std::max(std::abs(reward_min), std::abs(reward_max));
    for (std::size_t m = 0; m < members.size(); ++m) {
      const TestFunction& g = members[m];
      for (std::size_t i = 0; i < g.base.size(); ++i) {
        const double worst = std::abs(g.base[i]) + std::abs(g.r_slope[i]) * rmax;
        if (worst > bound + 1e-12)
          throw InputError("test family: member " + std::to_string(m) + " exceeds bound " +
                           std::to_string(bound) + " (worst " + std::to_string(worst) + ")");
      }
    }
  }
  std::size_t size() const { return members.size(); }
};

}  // namespace mglab
