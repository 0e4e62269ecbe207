#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "entrolp/attain.hpp"
#include "entrolp/core.hpp"
#include "entrolp/entropy.hpp"
#include "entrolp/errors.hpp"
#include "entrolp/lagrange.hpp"
#include "entrolp/tensor.hpp"

namespace entrolp {

/// A solve whose cost does not depend on the first action coordinate,
/// reduced to distributions over B per state with a mutual-information
/// budget of ln|A|. Reduced tensors are shaped (|S|, 1, |B|).
struct ReducedInstance {
  std::vector<double> prior;
  Tensor3 cost_b;   // (num_s, 1, num_b)
  int num_a = 0;
  double budget = 0.0;  // ln(num_a)
};

/// Relative per-(s,b)-slice tolerance under which the cost counts as
/// constant in a.
inline constexpr double kReducibleRelTol = 1e-12;

/// Detects costs of the form c[s,a,b] = c[s,b] and returns the reduction,
/// or nothing when some slice varies with a.
inline std::optional<ReducedInstance> detect_reducible(
    const ValidatedInstance& inst) {
  ReducedInstance red;
  red.prior = inst->prior;
  red.num_a = inst.num_a();
  red.budget = std::log(static_cast<double>(inst.num_a()));
  red.cost_b = Tensor3(inst.num_s(), 1, inst.num_b(), 0.0);
  for (int s = 0; s < inst.num_s(); ++s)
    for (int b = 0; b < inst.num_b(); ++b) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      double mag = 0.0;
      CompensatedAccumulator mean;
      for (int a = 0; a < inst.num_a(); ++a) {
        double c = inst->cost.at(s, a, b);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
        mag = std::max(mag, std::abs(c));
        mean.add(c);
      }
      if (hi - lo > kReducibleRelTol * std::max(1.0, mag))
        return std::nullopt;
      red.cost_b.at(s, 0, b) = mean.value() / inst.num_a();
    }
  return red;
}

/// The tiled full instance with c[s,a,b] = cost_b[s,b] for every a.
inline ProblemInstance tile_instance(const ReducedInstance& red) {
  ProblemInstance inst;
  inst.num_a = red.num_a;
  inst.num_b = red.cost_b.nb();
  inst.num_s = red.cost_b.ns();
  inst.prior = red.prior;
  inst.cost = Tensor3(inst.num_s, inst.num_a, inst.num_b, 0.0);
  for (int s = 0; s < inst.num_s; ++s)
    for (int a = 0; a < inst.num_a; ++a)
      for (int b = 0; b < inst.num_b; ++b)
        inst.cost.at(s, a, b) = red.cost_b.at(s, 0, b);
  return inst;
}

/// The reduced constraint functional
///   ghat(qhat) = sum_s p_s sum_b psi(qhat[s,b], that_b),
///   that_b = sum_s p_s qhat[s,b].
/// The reduced feasible set is { qhat : ghat(qhat) <= budget }.
inline ExtendedReal reduced_g(const ReducedInstance& red,
                              const Tensor3& q_hat) {
  if (!q_hat.same_shape(red.cost_b))
    throw SolverError(ErrorCode::ShapeMismatch, "reduced_g shape mismatch");
  const int nb = q_hat.nb();
  std::vector<double> t(nb);
  for (int b = 0; b < nb; ++b) {
    CompensatedAccumulator acc;
    for (int s = 0; s < q_hat.ns(); ++s)
      acc.add(red.prior[s] * q_hat.at(s, 0, b));
    t[b] = acc.value();
  }
  CompensatedAccumulator acc;
  for (int s = 0; s < q_hat.ns(); ++s) {
    CompensatedAccumulator state_acc;
    for (int b = 0; b < nb; ++b) {
      ExtendedReal term = psi(q_hat.at(s, 0, b), t[b]);
      if (term.is_infinite()) return ExtendedReal::infinity();
      state_acc.add(term.value());
    }
    acc.add(red.prior[s] * state_acc.value());
  }
  return ExtendedReal::finite(acc.value());
}

inline double reduced_expected_cost(const ReducedInstance& red,
                                    const Tensor3& q_hat) {
  CompensatedAccumulator acc;
  for (int s = 0; s < q_hat.ns(); ++s) {
    CompensatedAccumulator state_acc;
    for (int b = 0; b < q_hat.nb(); ++b)
      state_acc.add(red.cost_b.at(s, 0, b) * q_hat.at(s, 0, b));
    acc.add(red.prior[s] * state_acc.value());
  }
  return acc.value();
}

struct BaIterationResult {
  Tensor3 q_hat;          // (num_s, 1, num_b), rows normalized
  std::vector<double> t;  // prior-weighted marginal of q_hat
  long iterations = 0;
};

/// The alternating two-line loop at a fixed multiplier:
///   qhat[s,b] <- t_b exp(-c[s,b]/lam) / normalizer_s,
///   t <- sum_s p_s qhat[s,.],
/// run until consecutive qhat iterates differ by less than eps_f in l2.
/// Exponents are max-shifted per state exactly as in the full recursion.
inline BaIterationResult ba_iteration(const ReducedInstance& red,
                                      double lam_hat,
                                      const std::vector<double>& t0,
                                      double eps_f, long max_inner) {
  if (!(lam_hat > 0.0))
    throw SolverError(ErrorCode::InvalidLambda, "lambda must be > 0");
  if (!(eps_f > 0.0) || max_inner < 1)
    throw SolverError(ErrorCode::InvalidArgument, "bad ba_iteration settings");
  const int ns = red.cost_b.ns(), nb = red.cost_b.nb();
  if (static_cast<int>(t0.size()) != nb)
    throw SolverError(ErrorCode::ShapeMismatch, "t0 length != |B|");
  for (double v : t0)
    if (!(v > 0.0))
      throw SolverError(ErrorCode::NotInterior,
                        "t0 must be strictly positive");

  auto update = [&](const std::vector<double>& t, Tensor3& out) {
    for (int s = 0; s < ns; ++s) {
      double max_e = -std::numeric_limits<double>::infinity();
      std::vector<double> expo(nb);
      for (int b = 0; b < nb; ++b) {
        expo[b] = std::log(t[b]) - red.cost_b.at(s, 0, b) / lam_hat;
        max_e = std::max(max_e, expo[b]);
      }
      if (!std::isfinite(max_e))
        throw SolverError(ErrorCode::NumericalUnderflow,
                          "reduced marginal vanished");
      CompensatedAccumulator z;
      for (int b = 0; b < nb; ++b) {
        expo[b] = std::exp(expo[b] - max_e);
        z.add(expo[b]);
      }
      for (int b = 0; b < nb; ++b) out.at(s, 0, b) = expo[b] / z.value();
    }
  };
  auto marginal = [&](const Tensor3& q) {
    std::vector<double> t(nb);
    for (int b = 0; b < nb; ++b) {
      CompensatedAccumulator acc;
      for (int s = 0; s < ns; ++s) acc.add(red.prior[s] * q.at(s, 0, b));
      t[b] = acc.value();
    }
    return t;
  };

  Tensor3 cur(ns, 1, nb, 0.0), next(ns, 1, nb, 0.0);
  update(t0, cur);
  long iterations = 1;
  while (iterations < max_inner) {
    update(marginal(cur), next);
    ++iterations;
    double residual = l2_distance(next.flat(), cur.flat());
    std::swap(cur, next);
    if (residual < eps_f) {
      std::vector<double> t_final = marginal(cur);
      return BaIterationResult{std::move(cur), std::move(t_final), iterations};
    }
  }
  throw SolverError(ErrorCode::MaxInnerExceeded,
                    "ba_iteration did not converge within max_inner");
}

/// Embedding of a reduced policy into the full shape: q[s,a,b] =
/// qhat[s,b]/|A| for every a.
inline JointPolicy lift_policy(const ReducedInstance& red,
                               const Tensor3& q_hat) {
  if (!q_hat.same_shape(red.cost_b))
    throw SolverError(ErrorCode::ShapeMismatch, "lift_policy shape mismatch");
  Tensor3 q(q_hat.ns(), red.num_a, q_hat.nb(), 0.0);
  for (int s = 0; s < q_hat.ns(); ++s)
    for (int a = 0; a < red.num_a; ++a)
      for (int b = 0; b < q_hat.nb(); ++b)
        q.at(s, a, b) = q_hat.at(s, 0, b) / red.num_a;
  return JointPolicy(std::move(q));
}

/// Solves the reduced problem by bisection over the multiplier, with the
/// two-line alternation as the inner solver. The attainability phase runs
/// the general restricted machinery on the tiled instance. The returned
/// report carries the lifted policy, so it reads exactly like a full solve.
inline SolveReport ba_solve(const ReducedInstance& red,
                            const BisectionConfig& cfg = {}) {
  detail::check_bisection_config(cfg);
  const auto start_time = std::chrono::steady_clock::now();
  auto elapsed = [&start_time]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_time)
        .count();
  };

  ValidatedInstance tiled = validate_instance(tile_instance(red));
  NormalizeResult norm = normalize_costs(tiled);
  CompensatedAccumulator off;
  for (int s = 0; s < tiled.num_s(); ++s)
    off.add(tiled->prior[s] * norm.offsets[s]);
  const double offset_total = off.value();

  if (norm.degenerate) {
    SolveReport report;
    report.phase = SolvePhase::Degenerate;
    report.value = offset_total;
    report.policy =
        JointPolicy::uniform(tiled.num_s(), tiled.num_a(), tiled.num_b());
    report.g_val = g_value(norm.instance, report.policy).value();
    report.elapsed_s = elapsed();
    return report;
  }

  BpgConfig attain_cfg;
  attain_cfg.eps_fixed = cfg.eps_f;
  attain_cfg.max_inner = cfg.max_inner;
  attain_cfg.trace_stride = cfg.trace_stride;
  attain_cfg.record_marginals = cfg.record_marginals;
  attain_cfg.threads = cfg.threads;
  AttainReport attain = solve_delta0(norm.instance, attain_cfg);
  if (attain.attainable) {
    SolveReport report;
    report.phase = SolvePhase::Attainable;
    report.value = attainability_value(norm.instance, attain, norm.offsets);
    report.policy = std::move(attain.policy);
    report.g_val = attain.g_at_limit;
    report.inner_iterations_total = attain.iterations;
    report.elapsed_s = elapsed();
    return report;
  }

  // Reduced costs of the normalized tiled instance.
  ReducedInstance work = red;
  work.prior = norm.instance->prior;
  for (int s = 0; s < work.cost_b.ns(); ++s)
    for (int b = 0; b < work.cost_b.nb(); ++b)
      work.cost_b.at(s, 0, b) = norm.instance->cost.at(s, 0, b);

  CostSummary summary = cost_summary(norm.instance);
  double lam_hi = (summary.c_max - summary.c_min) / red.budget;
  double lam_lo = 0.0;
  bool upper_moved = false;

  const int nb = work.cost_b.nb();
  std::vector<double> warm_t(nb, 1.0 / nb);
  auto floored = [&](std::vector<double> t) {
    double sum = 0.0;
    for (double& v : t) {
      if (v < 1e-300) v = 1e-300;
      sum += v;
    }
    for (double& v : t) v /= sum;
    return t;
  };

  SolveReport report;
  report.phase = SolvePhase::Active;
  Tensor3 q_hat(work.cost_b.ns(), 1, nb, 1.0 / nb);
  long k = 0;
  double lam_k = lam_hi;
  while (lam_hi - lam_lo >= cfg.eps_b) {
    if (k >= cfg.max_outer)
      throw SolverError(ErrorCode::MaxOuterExceeded,
                        "reduced bisection exceeded max_outer");
    lam_k = 0.5 * (lam_hi + lam_lo);
    std::vector<double> t0 =
        cfg.warm_start ? floored(warm_t) : std::vector<double>(nb, 1.0 / nb);
    BaIterationResult inner =
        ba_iteration(work, lam_k, t0, cfg.eps_f, cfg.max_inner);
    double g_k = reduced_g(work, inner.q_hat).value() - red.budget;
    double residual = l2_distance(inner.q_hat.flat(), q_hat.flat());
    report.inner_iterations_total += inner.iterations;
    report.traces.push_back(OuterTraceRecord{
        k, lam_k, reduced_expected_cost(work, inner.q_hat) + offset_total,
        g_k, residual, elapsed()});
    q_hat = std::move(inner.q_hat);
    warm_t = std::move(inner.t);

    if (g_k < -cfg.zero_band) {
      lam_hi = lam_k;
      upper_moved = true;
    } else if (g_k > cfg.zero_band) {
      lam_lo = lam_k;
    } else {
      lam_lo = lam_hi = lam_k;
    }
    ++k;
  }
  if (k == 0)
    throw SolverError(ErrorCode::InvalidArgument,
                      "eps_b exceeds the initial bracket width");
  if (!upper_moved) {
    BaIterationResult at_max = ba_iteration(
        work, (summary.c_max - summary.c_min) / red.budget, floored(warm_t),
        cfg.eps_f, cfg.max_inner);
    if (reduced_g(work, at_max.q_hat).value() - red.budget >= 0.0)
      throw SolverError(ErrorCode::BracketFailure,
                        "reduced g at the lambda_max limit is nonnegative");
  }

  report.lambda = lam_k;
  report.g_val = reduced_g(work, q_hat).value() - red.budget;
  report.value = reduced_expected_cost(work, q_hat) + offset_total;
  report.policy = lift_policy(work, q_hat);
  report.outer_iterations = k;
  report.elapsed_s = elapsed();
  return report;
}

}  // namespace entrolp
