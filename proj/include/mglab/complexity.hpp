#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mglab/game_solvers.hpp"
#include "mglab/hypothesis.hpp"
#include "mglab/markov_game.hpp"

namespace mglab {

// One Bellman residual u(x,a,b) at a fixed level, with provenance.
struct Residual {
  std::vector<double> table;  // flattened (x, a, b)
  int member = -1;            // index of the generating hypothesis
  int policy = -1;            // index of the generating policy, -1 decoupled
};

struct ResidualFamily {
  int num_states = 0;
  int num_actions1 = 0;
  int num_actions2 = 0;
  std::vector<Residual> members;

  std::size_t cells() const {
    return static_cast<std::size_t>(num_states) * num_actions1 * num_actions2;
  }
};

// Probability measure over (x, a, b) cells; Dirac measures are one-hot.
struct Measure {
  std::vector<double> weights;

  void validate() const {
    double sum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw InputError("measure: negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
      throw InputError("measure: weights sum to " + std::to_string(sum));
  }
};

struct MeasureFamily {
  std::vector<Measure> members;
  std::size_t size() const { return members.size(); }
};

inline double measure_mean(const Measure& mu, const Residual& u) {
  double v = 0.0;
  for (std::size_t i = 0; i < mu.weights.size(); ++i)
    if (mu.weights[i] != 0.0) v += mu.weights[i] * u.table[i];
  return v;
}

// Residuals f_h - T_h f_{h+1} under the minimax operator; coordinated mode
// replaces the successor saddle value with the policy-restricted minimum and
// emits one residual per (member, policy).
inline ResidualFamily bellman_residuals(const MarkovGame& game, const FiniteValueFamily& family,
                                        int h, const PolicyFamily* policies = nullptr) {
  ResidualFamily out;
  out.num_states = game.num_states;
  out.num_actions1 = game.num_actions1;
  out.num_actions2 = game.num_actions2;
  const bool last = h + 1 >= game.horizon;

  const std::size_t cells = out.cells();
  auto build = [&](const ValueHypothesis& f, const std::vector<double>& successor, int member,
                   int policy) {
    Residual u;
    u.member = member;
    u.policy = policy;
    u.table.assign(cells, 0.0);
    std::size_t i = 0;
    for (int x = 0; x < game.num_states; ++x)
      for (int a = 0; a < game.num_actions1; ++a)
        for (int b = 0; b < game.num_actions2; ++b, ++i) {
          double backup = game.r(h, x, a, b);
          if (!last) {
            const auto dist = game.next_state_dist(h, x, a, b);
            for (int x2 = 0; x2 < game.num_states; ++x2) backup += dist[x2] * successor[x2];
          }
          u.table[i] = f.at(h, x, a, b) - backup;
        }
    out.members.push_back(std::move(u));
  };

  for (std::size_t m = 0; m < family.size(); ++m) {
    const ValueHypothesis& f = family.members[m];
    if (policies == nullptr) {
      std::vector<double> successor(game.num_states, 0.0);
      if (!last)
        for (int x = 0; x < game.num_states; ++x)
          successor[x] = hypothesis_ne_value(f, x, h + 1);
      build(f, successor, static_cast<int>(m), -1);
    } else {
      for (std::size_t p = 0; p < policies->size(); ++p) {
        std::vector<double> successor(game.num_states, 0.0);
        if (!last)
          for (int x = 0; x < game.num_states; ++x) {
            double best = std::numeric_limits<double>::infinity();
            for (const StochasticPolicy& member : policies->members)
              best = std::min(best, f.expected(h + 1, x, policies->members[p].row(h + 1, x),
                                               member.row(h + 1, x)));
            successor[x] = best;
          }
        build(f, successor, static_cast<int>(m), static_cast<int>(p));
      }
    }
  }
  return out;
}

inline MeasureFamily dirac_measures(int num_states, int num_actions1, int num_actions2) {
  MeasureFamily fam;
  const std::size_t cells =
      static_cast<std::size_t>(num_states) * num_actions1 * num_actions2;
  for (std::size_t i = 0; i < cells; ++i) {
    Measure m;
    m.weights.assign(cells, 0.0);
    m.weights[i] = 1.0;
    fam.members.push_back(std::move(m));
  }
  return fam;
}

// Level-h occupancy measures of the pairs (pi_f, nu_{pi_f}^g) for f, g in
// the family, restricted reads per the coordinated setting; computed exactly
// in the true game.
inline MeasureFamily hypothesis_occupancy_measures(const MarkovGame& game,
                                                   const FiniteValueFamily& family,
                                                   const PolicyFamily& policies, int h) {
  // pi_f per state: argmax over members of the restricted min value.
  std::vector<StochasticPolicy> pi_f;
  pi_f.reserve(family.size());
  for (const ValueHypothesis& f : family.members) {
    StochasticPolicy pi(game.horizon, game.num_states, game.num_actions1);
    for (int hh = 0; hh < game.horizon; ++hh)
      for (int x = 0; x < game.num_states; ++x) {
        int best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < policies.size(); ++p) {
          double lo = std::numeric_limits<double>::infinity();
          for (const StochasticPolicy& member : policies.members)
            lo = std::min(lo, f.expected(hh, x, policies.members[p].row(hh, x),
                                         member.row(hh, x)));
          if (lo > best_v) {
            best_v = lo;
            best = static_cast<int>(p);
          }
        }
        pi.set_row(hh, x, policies.members[best].row(hh, x));
      }
    pi_f.push_back(std::move(pi));
  }

  MeasureFamily fam;
  const std::size_t cells =
      static_cast<std::size_t>(game.num_states) * game.num_actions1 * game.num_actions2;
  for (std::size_t fi = 0; fi < family.size(); ++fi)
    for (std::size_t gi = 0; gi < family.size(); ++gi) {
      const StochasticPolicy nu =
          induced_best_response(family.members[gi], pi_f[fi], &policies);
      const Occupancy occ = occupancy_measures(game, pi_f[fi], nu);
      Measure m;
      m.weights.assign(occ.cell.begin() + game.cell(h, 0, 0, 0),
                       occ.cell.begin() + game.cell(h, 0, 0, 0) + cells);
      fam.members.push_back(std::move(m));
    }
  return fam;
}

// Definition-level check: nu is eps-independent of the prefix when some
// residual has small prefix norm but large mean under nu. The prefix
// inequality is strict; at equality the two conditions would otherwise hold
// simultaneously and a lone atom could re-enter its own prefix.
inline bool is_eps_independent(const ResidualFamily& residuals, const Measure& nu,
                               const std::vector<Measure>& prefix, double eps_prime) {
  if (eps_prime <= 0.0) throw InputError("is_eps_independent: eps must be positive");
  for (const Residual& u : residuals.members) {
    double sq = 0.0;
    for (const Measure& mu : prefix) {
      const double e = measure_mean(mu, u);
      sq += e * e;
    }
    if (std::sqrt(sq) < eps_prime && std::abs(measure_mean(nu, u)) >= eps_prime) return true;
  }
  return false;
}

enum class DeMode { exact, greedy };

struct DeWitness {
  int dimension = 0;
  std::vector<int> sequence;  // measure indices in order
  double eps_prime = 0.0;
};

namespace detail {

// Longest forward-extendable sequence at a fixed eps'. Prefix sums depend
// only on the chosen multiset, so visited multisets are memoized; the
// capacity bound (each residual witnesses at most twice, once if its prefix
// sum is already positive) prunes hopeless branches.
class DeSearch {
 public:
  DeSearch(const ResidualFamily& residuals, const MeasureFamily& measures, double eps_prime,
           bool per_step_eps)
      : residuals_(residuals), measures_(measures), eps2_(eps_prime * eps_prime),
        eps_(eps_prime), per_step_eps_(per_step_eps) {
    means_.assign(measures_.size(), std::vector<double>(residuals_.members.size()));
    for (std::size_t m = 0; m < measures_.size(); ++m)
      for (std::size_t u = 0; u < residuals_.members.size(); ++u)
        means_[m][u] = measure_mean(measures_.members[m], residuals_.members[u]);
  }

  DeWitness run() {
    std::vector<double> sums(residuals_.members.size(), 0.0);
    std::vector<int> counts(measures_.size(), 0);
    best_.dimension = 0;
    best_.eps_prime = eps_;
    std::vector<int> sequence;
    dfs(sums, counts, sequence);
    return best_;
  }

  // First currently-independent measure, repeatedly: a valid witness whose
  // length never exceeds the exact dimension.
  DeWitness greedy() {
    std::vector<double> sums(residuals_.members.size(), 0.0);
    DeWitness w;
    w.eps_prime = eps_;
    while (true) {
      int pick = -1;
      for (std::size_t m = 0; m < measures_.size() && pick < 0; ++m)
        if (independent(sums, m)) pick = static_cast<int>(m);
      if (pick < 0) break;
      w.sequence.push_back(pick);
      for (std::size_t u = 0; u < residuals_.members.size(); ++u) {
        const double e = means_[pick][u];
        sums[u] += e * e;
      }
    }
    w.dimension = static_cast<int>(w.sequence.size());
    return w;
  }

 private:
  // Shared-eps' reading: strict prefix norm, witness magnitude >= eps'.
  // Per-step reading: some eps'_i in [eps, |mean|] exceeds the prefix norm.
  bool independent(const std::vector<double>& sums, std::size_t m) const {
    for (std::size_t u = 0; u < residuals_.members.size(); ++u) {
      const double mag = std::abs(means_[m][u]);
      if (per_step_eps_) {
        if (mag >= eps_ && mag * mag > sums[u]) return true;
      } else {
        if (sums[u] < eps2_ && mag >= eps_) return true;
      }
    }
    return false;
  }

  // A residual whose prefix sum reached eps'^2 can never witness again, so
  // live residuals bound the remaining depth.
  int capacity(const std::vector<double>& sums) const {
    int cap = 0;
    for (double s : sums)
      if (s < eps2_) ++cap;
    return cap;
  }

  void dfs(std::vector<double>& sums, std::vector<int>& counts, std::vector<int>& sequence) {
    if (static_cast<int>(sequence.size()) > best_.dimension) {
      best_.dimension = static_cast<int>(sequence.size());
      best_.sequence = sequence;
    }
    if (!per_step_eps_ &&
        static_cast<int>(sequence.size()) + capacity(sums) <= best_.dimension)
      return;
    // Prefix sums depend on the multiset of chosen measures, not the order;
    // revisiting a multiset cannot extend further.
    if (!visited_.insert(counts).second) return;
    for (std::size_t m = 0; m < measures_.size(); ++m) {
      if (!independent(sums, m)) continue;
      std::vector<double> saved = sums;
      for (std::size_t u = 0; u < residuals_.members.size(); ++u) {
        const double e = means_[m][u];
        sums[u] += e * e;
      }
      ++counts[m];
      sequence.push_back(static_cast<int>(m));
      dfs(sums, counts, sequence);
      sequence.pop_back();
      --counts[m];
      sums = std::move(saved);
    }
  }

  const ResidualFamily& residuals_;
  const MeasureFamily& measures_;
  double eps2_;
  double eps_;
  bool per_step_eps_;
  std::vector<std::vector<double>> means_;
  DeWitness best_;
  std::set<std::vector<int>> visited_;
};

}  // namespace detail

// Distributional Eluder dimension. The shared-eps' existential is resolved
// exactly by scanning eps' over the achievable witness magnitudes
// {|E_nu[u]|} (any valid sequence stays valid when eps' is raised to its
// smallest used witness magnitude, so the maximum is attained on this grid).
// `per_step_eps` switches to the per-element reading of the quantifier for
// comparison; it needs no grid.
inline DeWitness de_dimension(const ResidualFamily& residuals, const MeasureFamily& measures,
                              double eps, DeMode mode = DeMode::exact,
                              std::size_t exact_cap = 64, bool per_step_eps = false) {
  if (eps <= 0.0) throw InputError("de_dimension: eps must be positive");
  if (mode == DeMode::exact && measures.size() > exact_cap)
    throw InputError("de_dimension: exact mode refuses " + std::to_string(measures.size()) +
                     " measures (cap " + std::to_string(exact_cap) + ")");

  if (per_step_eps) {
    detail::DeSearch search(residuals, measures, eps, true);
    return mode == DeMode::exact ? search.run() : search.greedy();
  }

  std::vector<double> grid{eps};
  for (const Measure& nu : measures.members)
    for (const Residual& u : residuals.members) {
      const double mag = std::abs(measure_mean(nu, u));
      if (mag >= eps) grid.push_back(mag);
    }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  DeWitness best;
  best.eps_prime = eps;
  for (double eps_prime : grid) {
    detail::DeSearch search(residuals, measures, eps_prime, false);
    const DeWitness w = mode == DeMode::exact ? search.run() : search.greedy();
    if (w.dimension > best.dimension) best = w;
  }
  return best;
}

// Replays a witness sequence through the definition; true when every element
// is eps'-independent of its predecessors.
inline bool verify_witness(const ResidualFamily& residuals, const MeasureFamily& measures,
                           const DeWitness& witness) {
  std::vector<Measure> prefix;
  for (int idx : witness.sequence) {
    if (!is_eps_independent(residuals, measures.members[idx], prefix, witness.eps_prime))
      return false;
    prefix.push_back(measures.members[idx]);
  }
  return true;
}

enum class EluderVariant { decoupled, coordinated };

struct EluderResult {
  int dimension = 0;
  int level = 0;  // argmax level
  DeWitness witness;
};

// Minimax Eluder dimension: max over levels of the DE dimension of the
// Bellman residual class. The coordinated variant takes the min over the
// Dirac and hypothesis-occupancy measure families at each level.
inline EluderResult minimax_eluder_dimension(const MarkovGame& game,
                                             const FiniteValueFamily& family, double eps,
                                             DeMode mode = DeMode::exact,
                                             EluderVariant variant = EluderVariant::decoupled,
                                             const PolicyFamily* policies = nullptr,
                                             std::size_t exact_cap = 64,
                                             bool per_step_eps = false) {
  if (variant == EluderVariant::coordinated && policies == nullptr)
    throw InputError("minimax_eluder_dimension: coordinated variant needs a policy family");
  EluderResult out;
  const MeasureFamily dirac =
      dirac_measures(game.num_states, game.num_actions1, game.num_actions2);
  for (int h = 0; h < game.horizon; ++h) {
    const ResidualFamily residuals = bellman_residuals(
        game, family, h, variant == EluderVariant::coordinated ? policies : nullptr);
    DeWitness level_best =
        de_dimension(residuals, dirac, eps, mode, exact_cap, per_step_eps);
    if (variant == EluderVariant::coordinated) {
      const MeasureFamily occ = hypothesis_occupancy_measures(game, family, *policies, h);
      const DeWitness alt = de_dimension(residuals, occ, eps, mode, exact_cap, per_step_eps);
      if (alt.dimension < level_best.dimension) level_best = alt;
    }
    if (h == 0 || level_best.dimension > out.dimension) {
      out.dimension = level_best.dimension;
      out.level = h;
      out.witness = level_best;
    }
  }
  return out;
}

// Exact membership checks for the realizability/completeness assumptions,
// with violation witnesses; a report, not an assertion.
struct AssumptionReport {
  struct Violation {
    std::string assumption;
    int member = -1;
    int level = -1;
    int policy = -1;
    double distance = 0.0;
  };
  bool realizability = true;       // Q* in the family
  bool completeness = true;        // T_h f in the level components
  bool policy_realizability = true;  // Q^{pi, br(pi)} in the family, per pi
  bool policy_completeness = true;   // T^pi_h f in the level components
  std::vector<Violation> violations;
};

inline AssumptionReport check_assumptions(const MarkovGame& game,
                                          const FiniteValueFamily& family,
                                          const PolicyFamily* policies = nullptr,
                                          double tol = 1e-9) {
  AssumptionReport report;
  const GameSolution sol = ne_value_iteration(game);

  auto level_distance = [&](const std::vector<double>& table, int h) {
    // Distance from table (one level, (x,a,b)) to the nearest level-h
    // component in the family.
    double best = std::numeric_limits<double>::infinity();
    for (const ValueHypothesis& f : family.members) {
      double d = 0.0;
      std::size_t i = 0;
      for (int x = 0; x < game.num_states; ++x)
        for (int a = 0; a < game.num_actions1; ++a)
          for (int b = 0; b < game.num_actions2; ++b, ++i)
            d = std::max(d, std::abs(table[i] - f.at(h, x, a, b)));
      best = std::min(best, d);
    }
    return best;
  };

  // Realizability: Q* within tol of some member, level by level jointly.
  {
    const ValueHypothesis qstar = ValueHypothesis::from_q_star(game, sol);
    double best = std::numeric_limits<double>::infinity();
    for (const ValueHypothesis& f : family.members) best = std::min(best, f.sup_distance(qstar));
    if (best > tol) {
      report.realizability = false;
      report.violations.push_back({"realizability", -1, -1, -1, best});
    }
  }

  // Completeness: T_h f_{h+1} within tol of some level-h component.
  const std::size_t cells =
      static_cast<std::size_t>(game.num_states) * game.num_actions1 * game.num_actions2;
  for (std::size_t m = 0; m < family.size(); ++m)
    for (int h = 0; h < game.horizon; ++h) {
      const ValueHypothesis& f = family.members[m];
      std::vector<double> backup(cells, 0.0);
      std::size_t i = 0;
      for (int x = 0; x < game.num_states; ++x)
        for (int a = 0; a < game.num_actions1; ++a)
          for (int b = 0; b < game.num_actions2; ++b, ++i) {
            double t = game.r(h, x, a, b);
            if (h + 1 < game.horizon) {
              const auto dist = game.next_state_dist(h, x, a, b);
              for (int x2 = 0; x2 < game.num_states; ++x2)
                t += dist[x2] * hypothesis_ne_value(f, x2, h + 1);
            }
            backup[i] = t;
          }
      const double d = level_distance(backup, h);
      if (d > tol) {
        report.completeness = false;
        report.violations.push_back({"completeness", static_cast<int>(m), h, -1, d});
      }
    }

  if (policies != nullptr) {
    // Policy realizability: Q^{pi, br(pi)} (restricted best response) in the
    // family for every policy.
    for (std::size_t p = 0; p < policies->size(); ++p) {
      const StochasticPolicy& pi = policies->members[p];
      double lo = std::numeric_limits<double>::infinity();
      std::size_t best_nu = 0;
      for (std::size_t nu = 0; nu < policies->size(); ++nu) {
        const double v = evaluate_policy_pair(game, pi, policies->members[nu]);
        if (v < lo) {
          lo = v;
          best_nu = nu;
        }
      }
      const PairValues pv = policy_pair_values(game, pi, policies->members[best_nu]);
      ValueHypothesis truth(game.horizon, game.num_states, game.num_actions1,
                            game.num_actions2);
      truth.table = pv.q;
      double best = std::numeric_limits<double>::infinity();
      for (const ValueHypothesis& f : family.members)
        best = std::min(best, f.sup_distance(truth));
      if (best > tol) {
        report.policy_realizability = false;
        report.violations.push_back(
            {"policy-realizability", -1, -1, static_cast<int>(p), best});
      }
    }

    // Policy completeness: T^pi_h f within tol of some level-h component.
    for (std::size_t m = 0; m < family.size(); ++m)
      for (std::size_t p = 0; p < policies->size(); ++p)
        for (int h = 0; h < game.horizon; ++h) {
          const ValueHypothesis& f = family.members[m];
          std::vector<double> backup(cells, 0.0);
          std::size_t i = 0;
          for (int x = 0; x < game.num_states; ++x)
            for (int a = 0; a < game.num_actions1; ++a)
              for (int b = 0; b < game.num_actions2; ++b, ++i) {
                double t = game.r(h, x, a, b);
                if (h + 1 < game.horizon) {
                  const auto dist = game.next_state_dist(h, x, a, b);
                  for (int x2 = 0; x2 < game.num_states; ++x2) {
                    double lo = std::numeric_limits<double>::infinity();
                    for (const StochasticPolicy& member : policies->members)
                      lo = std::min(lo, f.expected(h + 1, x2,
                                                   policies->members[p].row(h + 1, x2),
                                                   member.row(h + 1, x2)));
                    t += dist[x2] * lo;
                  }
                }
                backup[i] = t;
              }
          const double d = level_distance(backup, h);
          if (d > tol) {
            report.policy_completeness = false;
            report.violations.push_back({"policy-completeness", static_cast<int>(m), h,
                                         static_cast<int>(p), d});
          }
        }
  }
  return report;
}

}  // namespace mglab
