#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entrolp/attain.hpp"
#include "entrolp/bpg.hpp"
#include "entrolp/core.hpp"
#include "entrolp/entropy.hpp"
#include "entrolp/errors.hpp"

namespace entrolp {

/// Settings of the multiplier bisection and its inner fixed-point solves.
struct BisectionConfig {
  double eps_b = 1e-10;     // bracket width tolerance
  double eps_f = 1e-12;     // inner step-residual tolerance, < eps_b
  double zero_band = 1e-20; // |g| dead band that ends the search early
  long max_outer = 200;
  long max_inner = 100000;
  bool warm_start = true;   // start each inner solve from the previous limit
  long trace_stride = 1;
  bool record_marginals = true;
  int threads = 1;

  /// Settings used for the large random instances: looser tolerances and a
  /// thinned trace.
  static BisectionConfig high_dim() {
    BisectionConfig cfg;
    cfg.eps_b = 1e-6;
    cfg.eps_f = 1e-8;
    cfg.trace_stride = 100;
    cfg.record_marginals = false;
    return cfg;
  }
};

enum class SolvePhase { Attainable, Active, Degenerate };

inline const char* to_string(SolvePhase phase) {
  switch (phase) {
    case SolvePhase::Attainable: return "Attainable";
    case SolvePhase::Active: return "Active";
    case SolvePhase::Degenerate: return "Degenerate";
  }
  return "Unknown";
}

/// One row of the outer (bisection) trace. `residual` is the l2 distance
/// between consecutive outer policies.
struct OuterTraceRecord {
  long k = 0;
  double lambda = 0.0;
  double value = 0.0;
  double g_val = 0.0;
  double residual = 0.0;
  double elapsed_s = 0.0;
};

struct SolveReport {
  double value = 0.0;   // objective in the original (unshifted) cost scale
  double lambda = 0.0;  // multiplier for the normalized costs; 0 off Active
  JointPolicy policy;
  double g_val = 0.0;
  SolvePhase phase = SolvePhase::Active;
  long outer_iterations = 0;
  long inner_iterations_total = 0;
  std::vector<OuterTraceRecord> traces;
  std::vector<std::vector<TraceRecord>> inner_traces;  // one list per outer k
  double elapsed_s = 0.0;
};

namespace detail {

inline void check_bisection_config(const BisectionConfig& cfg) {
  if (!(cfg.eps_f > 0.0) || !(cfg.eps_b > cfg.eps_f))
    throw SolverError(ErrorCode::InvalidArgument,
                      "need 0 < eps_f < eps_b");
  if (!(cfg.zero_band >= 0.0))
    throw SolverError(ErrorCode::InvalidArgument, "zero_band must be >= 0");
  if (cfg.max_outer < 1 || cfg.max_inner < 1)
    throw SolverError(ErrorCode::InvalidArgument, "iteration caps must be >= 1");
}

inline BpgConfig inner_config(const ValidatedInstance& inst,
                              const BisectionConfig& cfg, double lambda) {
  BpgConfig inner;
  inner.eta = 1.0 / lambda;
  Tensor3 d = inst->cost;
  for (int s = 0; s < inst.num_s(); ++s) {
    auto slice = d.state(s);
    for (double& v : slice) v *= inst->prior[s];
  }
  inner.tilt = std::move(d);
  inner.eps_fixed = cfg.eps_f;
  inner.max_inner = cfg.max_inner;
  inner.trace_stride = cfg.trace_stride;
  inner.record_marginals = cfg.record_marginals;
  inner.threads = cfg.threads;
  return inner;
}

/// Floors zero/subnormal entries before an inner solve restarts from a
/// previous limit, so the restart is an interior point as the recursion
/// requires. The floor is far below every meaningful probability and the
/// renormalization shifts entries by at most a few ulps.
inline JointPolicy interior_restart(const JointPolicy& q) {
  Tensor3 t = q.tensor();
  for (double& v : t.flat())
    if (v < 1e-300) v = 1e-300;
  return JointPolicy(std::move(t));
}

}  // namespace detail

/// Near-minimizer of the Lagrangian L(., lambda) via the fixed-point
/// recursion with weights exp(-c[s,a,b]/lambda) on the full pattern.
inline BpgOutcome solve_for_lambda(const ValidatedInstance& inst, double lambda,
                                   const BisectionConfig& cfg,
                                   const JointPolicy& q0) {
  if (!(lambda > 0.0))
    throw SolverError(ErrorCode::InvalidLambda, "lambda must be > 0");
  detail::check_bisection_config(cfg);
  SupportPattern full =
      SupportPattern::full(inst.num_s(), inst.num_a(), inst.num_b());
  return run_bpg(inst, full, detail::inner_config(inst, cfg, lambda), q0);
}

namespace detail {

/// Runs the inner solve at the bracket's upper endpoint and checks the sign
/// certificate g < 0 that makes the bisection well posed. A nonnegative g
/// here contradicts the bracket guarantee and signals numerical breakdown.
inline void verify_upper_endpoint(const ValidatedInstance& inst,
                                  const BisectionConfig& cfg, double lam,
                                  const JointPolicy& start);

}  // namespace detail

/// Upper bracket endpoint (c_max - c_min) / ln|A|; the inner limit at this
/// multiplier always has g < 0.
inline double lambda_max(const ValidatedInstance& inst) {
  CostSummary summary = cost_summary(inst);
  if (summary.c_max <= summary.c_min)
    throw SolverError(ErrorCode::DegenerateCosts,
                      "constant costs admit every feasible point");
  return (summary.c_max - summary.c_min) /
         std::log(static_cast<double>(inst.num_a()));
}

/// Bisection count guaranteeing a multiplier within eps_b:
///   k0 = floor(log2((c_max - c_min) / (eps_b ln|A|))) + 1.
inline long k0_bound(const ValidatedInstance& inst, double eps_b) {
  if (!(eps_b > 0.0))
    throw SolverError(ErrorCode::InvalidArgument, "eps_b must be > 0");
  double lam_max = lambda_max(inst);
  return static_cast<long>(std::floor(std::log2(lam_max / eps_b))) + 1;
}

/// Bisection over the multiplier bracket [0, lambda_max]. Shrinks by the
/// sign of g at each inner limit, with a dead band `zero_band` that ends the
/// search when |g| is indistinguishable from zero. Call only after the
/// attainability phase answered "not attainable"; offset_total is re-added
/// to the reported value.
inline SolveReport bisection_solve(const ValidatedInstance& inst,
                                   const BisectionConfig& cfg,
                                   std::optional<JointPolicy> q0 = std::nullopt,
                                   double offset_total = 0.0) {
  detail::check_bisection_config(cfg);
  const auto start_time = std::chrono::steady_clock::now();
  auto elapsed = [&start_time]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_time)
        .count();
  };

  const JointPolicy cold_start =
      q0 ? std::move(*q0)
         : JointPolicy::uniform(inst.num_s(), inst.num_a(), inst.num_b());
  double lam_hi = lambda_max(inst);
  double lam_lo = 0.0;
  bool upper_moved = false;

  SolveReport report;
  report.phase = SolvePhase::Active;
  JointPolicy warm = cold_start;
  long k = 0;
  double lam_k = lam_hi;
  while (lam_hi - lam_lo >= cfg.eps_b) {
    if (k >= cfg.max_outer)
      throw SolverError(ErrorCode::MaxOuterExceeded,
                        "bisection exceeded max_outer");
    lam_k = 0.5 * (lam_hi + lam_lo);
    const JointPolicy& start = cfg.warm_start ? warm : cold_start;
    BpgOutcome inner =
        solve_for_lambda(inst, lam_k, cfg, detail::interior_restart(start));
    double g_k = inner.final_g;
    double residual =
        l2_distance(inner.policy.tensor().flat(), warm.tensor().flat());

    report.inner_iterations_total += inner.iterations;
    report.traces.push_back(OuterTraceRecord{
        k, lam_k, expected_cost(inst, inner.policy) + offset_total, g_k,
        residual, elapsed()});
    report.inner_traces.push_back(std::move(inner.trace));
    warm = std::move(inner.policy);

    if (g_k < -cfg.zero_band) {
      lam_hi = lam_k;
      upper_moved = true;
    } else if (g_k > cfg.zero_band) {
      lam_lo = lam_k;
    } else {
      lam_lo = lam_hi = lam_k;  // dead band: multiplier found
    }
    ++k;
  }
  if (k == 0)
    throw SolverError(ErrorCode::InvalidArgument,
                      "eps_b exceeds the initial bracket width");

  // The upper endpoint must dominate the root; if the search pressed
  // against it without ever observing g < 0, verify the endpoint itself.
  if (!upper_moved)
    detail::verify_upper_endpoint(inst, cfg, lambda_max(inst), warm);

  report.lambda = lam_k;
  report.g_val = g_value(inst, warm).value();
  report.value = expected_cost(inst, warm) + offset_total;
  report.policy = std::move(warm);
  report.outer_iterations = k;
  report.elapsed_s = elapsed();
  return report;
}

namespace detail {

inline void verify_upper_endpoint(const ValidatedInstance& inst,
                                  const BisectionConfig& cfg, double lam,
                                  const JointPolicy& start) {
  BpgOutcome at_max = solve_for_lambda(inst, lam, cfg, interior_restart(start));
  if (at_max.final_g >= 0.0)
    throw SolverError(ErrorCode::BracketFailure,
                      "g at the lambda_max limit is nonnegative");
}

}  // namespace detail

/// Ordered pair (g at the inner limit of lam1, g at the inner limit of
/// lam2) for 0 < lam1 <= lam2; the first is never smaller than the second
/// beyond solver tolerance.
inline std::pair<double, double> g_monotonicity_check(
    const ValidatedInstance& inst, double lam1, double lam2,
    const BisectionConfig& cfg) {
  if (!(lam1 > 0.0) || !(lam2 > 0.0) || lam1 > lam2)
    throw SolverError(ErrorCode::InvalidLambda, "need 0 < lam1 <= lam2");
  JointPolicy start =
      JointPolicy::uniform(inst.num_s(), inst.num_a(), inst.num_b());
  BpgOutcome o1 = solve_for_lambda(inst, lam1, cfg, start);
  BpgOutcome o2 = solve_for_lambda(inst, lam2, cfg, start);
  return {o1.final_g, o2.final_g};
}

/// End-to-end solve: validate, normalize, decide attainability, and if the
/// constraint is active run the multiplier bisection. Values are reported
/// in the original cost scale.
inline SolveReport full_solve(const ProblemInstance& raw,
                              const BisectionConfig& cfg = {},
                              std::optional<JointPolicy> q0 = std::nullopt) {
  detail::check_bisection_config(cfg);
  const auto start_time = std::chrono::steady_clock::now();
  auto elapsed = [&start_time]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_time)
        .count();
  };

  ValidatedInstance inst = validate_instance(raw);
  NormalizeResult norm = normalize_costs(inst);
  CompensatedAccumulator off;
  for (int s = 0; s < inst.num_s(); ++s)
    off.add(inst->prior[s] * norm.offsets[s]);
  const double offset_total = off.value();

  if (norm.degenerate) {
    SolveReport report;
    report.phase = SolvePhase::Degenerate;
    report.value = offset_total;  // every feasible point attains it
    report.policy =
        JointPolicy::uniform(inst.num_s(), inst.num_a(), inst.num_b());
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
    report.value =
        attainability_value(norm.instance, attain, norm.offsets);
    report.policy = std::move(attain.policy);
    report.g_val = attain.g_at_limit;
    report.inner_iterations_total = attain.iterations;
    report.elapsed_s = elapsed();
    return report;
  }

  SolveReport report =
      bisection_solve(norm.instance, cfg, std::move(q0), offset_total);
  report.elapsed_s = elapsed();
  return report;
}

}  // namespace entrolp
