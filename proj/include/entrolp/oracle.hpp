#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "entrolp/core.hpp"
#include "entrolp/entropy.hpp"
#include "entrolp/errors.hpp"
#include "entrolp/generators.hpp"

namespace entrolp {

// ---------------------------------------------------------------------------
// First-order (KKT) residuals
// ---------------------------------------------------------------------------

struct KktReport {
  /// max over states of the spread of c[s,a,b] + lam*ln(q[s,a,b]/t_b) over
  /// the support; the per-state constant multiplier drops out of the spread.
  double stationarity_residual = 0.0;
  double primal_feasibility = 0.0;  // max(g, 0)
  double complementarity = 0.0;     // |lam * g|
};

inline KktReport kkt_residual(const ValidatedInstance& inst,
                              const JointPolicy& q, double lam,
                              double support_floor = 1e-9) {
  if (!(lam > 0.0))
    throw SolverError(ErrorCode::InvalidLambda, "kkt_residual needs lam > 0");
  if (!q.tensor().same_shape(inst->cost))
    throw SolverError(ErrorCode::ShapeMismatch, "kkt_residual shape mismatch");

  SupportPattern full =
      SupportPattern::full(inst.num_s(), inst.num_a(), inst.num_b());
  std::vector<double> t =
      detail::marginal_b_unchecked(inst->prior, q.tensor(), full);

  double spread = 0.0;
  for (int s = 0; s < inst.num_s(); ++s) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < inst.num_a(); ++a)
      for (int b = 0; b < inst.num_b(); ++b) {
        double qv = q.at(s, a, b);
        if (qv <= support_floor) continue;
        double r = inst->cost.at(s, a, b) + lam * std::log(qv / t[b]);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
    if (!std::isfinite(lo))
      throw SolverError(ErrorCode::EmptySupport,
                        "no entries above the support floor in some state");
    spread = std::max(spread, hi - lo);
  }

  double g = g_value(inst, q).as_double();
  return KktReport{spread, std::max(g, 0.0), std::abs(lam * g)};
}

// ---------------------------------------------------------------------------
// Closed-form solution of the 2x2x2 coordination game
// ---------------------------------------------------------------------------

struct GhnAnalytic {
  double gamma = 0.0;
  JointPolicy policy;
  double value = 0.0;
};

/// Solves -g ln g - (1-g) ln(1-g) + (1-g) ln 3 = ln 2 for the unique root
/// in (1/4, 1) by bisection, builds the diagonal-gamma policy, and reports
/// its expected cost on the game instance.
inline GhnAnalytic ghn_analytic() {
  auto h = [](double g) {
    return -g * std::log(g) - (1.0 - g) * std::log1p(-g) +
           (1.0 - g) * std::log(3.0) - std::log(2.0);
  };
  double lo = 0.3, hi = 0.999;  // h(lo) > 0 > h(hi); h strictly decreasing
  while (hi - lo > 1e-15) {
    double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  double gamma = 0.5 * (lo + hi);

  Tensor3 q(2, 2, 2, (1.0 - gamma) / 3.0);
  q.at(0, 0, 0) = gamma;
  q.at(1, 1, 1) = gamma;
  JointPolicy policy(std::move(q));
  double value =
      expected_cost(validate_instance(ghn_instance()), policy);
  return GhnAnalytic{gamma, std::move(policy), value};
}

// ---------------------------------------------------------------------------
// Grid brute force
// ---------------------------------------------------------------------------

struct GridSolution {
  double value = 0.0;
  JointPolicy policy;
};

namespace detail {

/// Visits every composition of `total` into `cells` nonnegative parts,
/// starting from (total, 0, ..., 0) in decreasing lexicographic order.
template <typename Fn>
void for_each_composition(int cells, int total, Fn&& fn) {
  std::vector<int> k(cells, 0);
  k[0] = total;
  for (;;) {
    fn(static_cast<const std::vector<int>&>(k));
    if (cells == 1) return;
    int i = cells - 2;
    while (i >= 0 && k[i] == 0) --i;
    if (i < 0) return;
    int tail = k[cells - 1];
    k[cells - 1] = 0;
    --k[i];
    k[i + 1] = tail + 1;
  }
}

struct GridEntry {
  double neg_entropy;  // sum of phi(k_cell / n)
  double cost;         // state cost of the composition
  std::int64_t index;  // lexicographic enumeration index
};

}  // namespace detail

/// Exhaustive scan of the rational grid with denominator `resolution` over
/// the product of simplices, keeping the minimizer among grid points with
/// g <= feasibility_bound (0 for the solve's feasible set). Empty when no
/// grid point is feasible. Guarded to desk-scale instances.
inline std::optional<GridSolution> grid_scan(const ValidatedInstance& inst,
                                             int resolution,
                                             double feasibility_bound) {
  if (inst.num_a() * inst.num_b() > 4 || inst.num_s() > 2)
    throw SolverError(ErrorCode::TooLarge,
                      "grid oracle limited to |A||B| <= 4 and |S| <= 2");
  if (resolution < 1 || resolution > 200)
    throw SolverError(ErrorCode::TooLarge, "resolution must be in [1, 200]");

  const int ns = inst.num_s(), na = inst.num_a(), nb = inst.num_b();
  const int cells = na * nb;
  const double n = resolution;

  // phi(j/n) for j = 0..n, with phi(0) = 0
  std::vector<double> phi(resolution + 1, 0.0);
  for (int j = 1; j <= resolution; ++j) {
    double x = j / n;
    phi[j] = x * std::log(x);
  }

  // Per state, group compositions by their integer B-marginal (both
  // possible |B| values keyed by the first component) and sort each group
  // by negative entropy with running cost minima.
  struct Bin {
    std::vector<detail::GridEntry> entries;  // sorted by neg_entropy
    std::vector<double> prefix_min_cost;
    std::vector<std::int64_t> prefix_arg;
  };
  auto marginal_key = [&](const std::vector<int>& k) {
    if (nb == 1) return 0;
    int m0 = 0;
    for (int a = 0; a < na; ++a) m0 += k[a * nb];
    return m0;
  };
  const int num_keys = nb == 1 ? 1 : resolution + 1;

  std::vector<std::vector<Bin>> bins(ns, std::vector<Bin>(num_keys));
  for (int s = 0; s < ns; ++s) {
    auto cs = inst->cost.state(s);
    std::int64_t index = 0;
    detail::for_each_composition(cells, resolution,
                                 [&](const std::vector<int>& k) {
      double ne = 0.0, cost = 0.0;
      for (int cell = 0; cell < cells; ++cell) {
        ne += phi[k[cell]];
        cost += k[cell] * cs[cell];
      }
      bins[s][marginal_key(k)].entries.push_back(
          detail::GridEntry{ne, cost / n, index});
      ++index;
    });
    for (auto& bin : bins[s]) {
      std::sort(bin.entries.begin(), bin.entries.end(),
                [](const detail::GridEntry& x, const detail::GridEntry& y) {
                  if (x.neg_entropy != y.neg_entropy)
                    return x.neg_entropy < y.neg_entropy;
                  if (x.cost != y.cost) return x.cost < y.cost;
                  return x.index < y.index;
                });
      bin.prefix_min_cost.resize(bin.entries.size());
      bin.prefix_arg.resize(bin.entries.size());
      double best = std::numeric_limits<double>::infinity();
      std::int64_t arg = -1;
      for (std::size_t i = 0; i < bin.entries.size(); ++i) {
        if (bin.entries[i].cost < best) {
          best = bin.entries[i].cost;
          arg = bin.entries[i].index;
        }
        bin.prefix_min_cost[i] = best;
        bin.prefix_arg[i] = arg;
      }
    }
  }

  double best_value = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> best_idx;

  auto key_marginal = [&](int key, int kb) {
    // mass on column b for a bin key
    if (nb == 1) return resolution;
    return kb == 0 ? key : resolution - key;
  };

  if (ns == 1) {
    for (int key = 0; key < num_keys; ++key) {
      double beta = 0.0;
      for (int b = 0; b < nb; ++b) beta += phi[key_marginal(key, b)];
      for (const auto& e : bins[0][key].entries) {
        if (e.neg_entropy - beta > feasibility_bound)
          break;  // sorted: the rest are infeasible too
        if (e.neg_entropy - beta <= feasibility_bound &&
            (e.cost < best_value ||
             (e.cost == best_value &&
              (best_idx.empty() || e.index < best_idx[0])))) {
          best_value = e.cost;
          best_idx = {e.index};
        }
      }
    }
  } else {
    const double p0 = inst->prior[0], p1 = inst->prior[1];
    for (int key0 = 0; key0 < num_keys; ++key0) {
      if (bins[0][key0].entries.empty()) continue;
      for (int key1 = 0; key1 < num_keys; ++key1) {
        const Bin& bin1 = bins[1][key1];
        if (bin1.entries.empty()) continue;
        double beta = 0.0;
        for (int b = 0; b < nb; ++b) {
          double tb = (p0 * key_marginal(key0, b) +
                       p1 * key_marginal(key1, b)) / n;
          beta += tb > 0.0 ? tb * std::log(tb) : 0.0;
        }
        for (const auto& e0 : bins[0][key0].entries) {
          // need p0*x0 + p1*x1 - beta <= bound
          double x1_cap = (beta + feasibility_bound - p0 * e0.neg_entropy) / p1;
          auto it = std::upper_bound(
              bin1.entries.begin(), bin1.entries.end(), x1_cap,
              [](double cap, const detail::GridEntry& e) {
                return cap < e.neg_entropy;
              });
          if (it == bin1.entries.begin()) continue;
          std::size_t pos = static_cast<std::size_t>(
              std::distance(bin1.entries.begin(), it)) - 1;
          double value = p0 * e0.cost + p1 * bin1.prefix_min_cost[pos];
          std::int64_t i1 = bin1.prefix_arg[pos];
          if (value < best_value ||
              (value == best_value && !best_idx.empty() &&
               (e0.index < best_idx[0] ||
                (e0.index == best_idx[0] && i1 < best_idx[1])))) {
            best_value = value;
            best_idx = {e0.index, i1};
          }
        }
      }
    }
  }

  if (best_idx.empty()) return std::nullopt;

  // Reconstruct the winning compositions by a second enumeration pass.
  Tensor3 q(ns, na, nb, 0.0);
  for (int s = 0; s < ns; ++s) {
    std::int64_t index = 0;
    detail::for_each_composition(cells, resolution,
                                 [&](const std::vector<int>& k) {
      if (index == best_idx[s]) {
        auto qs = q.state(s);
        for (int cell = 0; cell < cells; ++cell) qs[cell] = k[cell] / n;
      }
      ++index;
    });
  }
  return GridSolution{best_value, JointPolicy(std::move(q))};
}

/// Independent upper-bound oracle: exhaustively scans grid points of the
/// simplex product and keeps the feasible (g <= 0) minimizer.
inline std::optional<GridSolution> grid_bruteforce(
    const ValidatedInstance& inst, int resolution) {
  return grid_scan(inst, resolution, 0.0);
}

}  // namespace entrolp
