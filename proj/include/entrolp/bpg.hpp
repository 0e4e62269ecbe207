#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "entrolp/core.hpp"
#include "entrolp/entropy.hpp"
#include "entrolp/errors.hpp"
#include "entrolp/tensor.hpp"

namespace entrolp {

/// Configuration of one fixed-point run minimizing
///   F(q, eta) = g(q) + eta * sum_{s,(a,b)} d[s,a,b] * q[s,a,b]
/// over a restricted simplex product.
struct BpgConfig {
  double eta = 0.0;        // tilt weight, >= 0
  Tensor3 tilt;            // d; may be empty when eta == 0
  double eps_fixed = 1e-12;  // stop when ||q_{n+1} - q_n||_2 drops below
  long max_inner = 100000;
  long trace_stride = 1;      // record every k-th iteration (first/last always)
  bool record_marginals = true;  // keep B-marginals of every iterate
  int threads = 1;
};

/// Per-iteration scalars of a run.
struct TraceRecord {
  long n = 0;
  double objective_F = 0.0;
  double g_val = 0.0;
  double residual = 0.0;
  double elapsed_s = 0.0;
};

struct BpgOutcome {
  JointPolicy policy;  // last iterate, supported on the pattern
  long iterations = 0;
  std::vector<TraceRecord> trace;
  bool converged = false;
  double final_F = 0.0;
  double final_g = 0.0;
  /// B-marginals of q^0, q^1, ..., q^N when record_marginals is set.
  std::vector<std::vector<double>> marginals;
};

namespace detail {

inline void check_bpg_config(const ValidatedInstance& inst,
                             const BpgConfig& cfg) {
  if (!(cfg.eta >= 0.0))
    throw SolverError(ErrorCode::InvalidArgument, "eta must be >= 0");
  if (!(cfg.eps_fixed > 0.0))
    throw SolverError(ErrorCode::InvalidArgument, "eps_fixed must be > 0");
  if (cfg.max_inner < 1)
    throw SolverError(ErrorCode::InvalidArgument, "max_inner must be >= 1");
  if (cfg.trace_stride < 1)
    throw SolverError(ErrorCode::InvalidArgument, "trace_stride must be >= 1");
  if (cfg.threads < 1)
    throw SolverError(ErrorCode::InvalidArgument, "threads must be >= 1");
  if (cfg.eta > 0.0 && !cfg.tilt.same_shape(inst->cost))
    throw SolverError(ErrorCode::ShapeMismatch,
                      "tilt tensor shape must match the cost tensor");
}

/// One multiplicative update for fixed marginal t, one state. Exponents are
/// shifted by their per-state maximum before exponentiation, which is
/// algebraically neutral and keeps the normalizer in [1, |pattern_s|].
inline void bpg_update_state(const ValidatedInstance& inst,
                             const SupportPattern& pattern,
                             const BpgConfig& cfg,
                             const std::vector<double>& log_t, int s,
                             Tensor3& out) {
  const auto& pairs = pattern.state(s);
  const double ps = inst->prior[s];
  double max_e = -std::numeric_limits<double>::infinity();
  std::vector<double> expo(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [a, b] = pairs[i];
    double e = log_t[b];
    if (cfg.eta > 0.0) e -= cfg.eta * cfg.tilt.at(s, a, b) / ps;
    expo[i] = e;
    if (e > max_e) max_e = e;
  }
  if (!std::isfinite(max_e))
    throw SolverError(ErrorCode::NumericalUnderflow,
                      "all pattern marginals vanished in one state");
  CompensatedAccumulator z;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    expo[i] = std::exp(expo[i] - max_e);
    z.add(expo[i]);
  }
  const double norm = z.value();
  if (norm == 0.0)
    throw SolverError(ErrorCode::NumericalUnderflow,
                      "per-state normalizer vanished");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [a, b] = pairs[i];
    out.at(s, a, b) = expo[i] / norm;
  }
}

/// Applies one step of the recursion into `out` given the current iterate's
/// B-marginal t. Off-pattern entries of `out` must already be zero. The
/// per-state updates are independent; with threads > 1 they run
/// concurrently, writing disjoint slices, so the result is identical to the
/// sequential evaluation.
inline void bpg_step_from_marginal(const ValidatedInstance& inst,
                                   const SupportPattern& pattern,
                                   const BpgConfig& cfg,
                                   const std::vector<double>& t, Tensor3& out) {
  std::vector<double> log_t(t.size());
  for (std::size_t b = 0; b < t.size(); ++b) log_t[b] = std::log(t[b]);

  const int ns = inst.num_s();
  const bool parallel =
      cfg.threads > 1 && ns > 1 &&
      static_cast<long>(inst->cost.size()) >= 4096;
  if (!parallel) {
    for (int s = 0; s < ns; ++s)
      bpg_update_state(inst, pattern, cfg, log_t, s, out);
    return;
  }
  const int workers = std::min(cfg.threads, ns);
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (int s = w; s < ns; s += workers)
          bpg_update_state(inst, pattern, cfg, log_t, s, out);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline Tensor3 pattern_supported_tensor(const ValidatedInstance& inst,
                                        const SupportPattern& pattern,
                                        const JointPolicy& q,
                                        bool require_interior) {
  Tensor3 out(inst.num_s(), inst.num_a(), inst.num_b(), 0.0);
  for (int s = 0; s < inst.num_s(); ++s) {
    CompensatedAccumulator mass;
    for (auto [a, b] : pattern.state(s)) {
      double v = q.at(s, a, b);
      if (require_interior && v <= 0.0)
        throw SolverError(ErrorCode::NotInterior,
                          "start must be strictly positive on the pattern");
      out.at(s, a, b) = v;
      mass.add(v);
    }
    double on_pattern = mass.value();
    if (1.0 - on_pattern > kSupportTol)
      throw SolverError(ErrorCode::SupportViolation,
                        "start carries mass outside the pattern");
    for (auto [a, b] : pattern.state(s)) out.at(s, a, b) /= on_pattern;
  }
  return out;
}

}  // namespace detail

/// Objective F(q, eta) of the restricted problem; +infinity off the domain.
inline ExtendedReal bpg_objective(const ValidatedInstance& inst,
                                  const BpgConfig& cfg, const Tensor3& q) {
  ExtendedReal g = g_value(inst, q);
  if (g.is_infinite()) return g;
  if (cfg.eta == 0.0) return g;
  CompensatedAccumulator lin;
  auto d = cfg.tilt.flat();
  auto qv = q.flat();
  for (std::size_t i = 0; i < qv.size(); ++i) lin.add(d[i] * qv[i]);
  return ExtendedReal::finite(g.value() + cfg.eta * lin.value());
}

/// One step of the fixed-point recursion
///   q[s,a,b] <- t_b exp(-eta d[s,a,b]/p_s) / normalizer_s
/// on the support pattern, where t is the prior-weighted B-marginal of q.
inline JointPolicy bpg_step(const ValidatedInstance& inst,
                            const SupportPattern& pattern, const BpgConfig& cfg,
                            const JointPolicy& q) {
  detail::check_bpg_config(inst, cfg);
  Tensor3 cur = detail::pattern_supported_tensor(inst, pattern, q, true);
  std::vector<double> t =
      detail::marginal_b_unchecked(inst->prior, cur, pattern);
  Tensor3 next(inst.num_s(), inst.num_a(), inst.num_b(), 0.0);
  detail::bpg_step_from_marginal(inst, pattern, cfg, t, next);
  return JointPolicy(std::move(next));
}

/// Iterates bpg_step from q0 until the step residual drops below
/// cfg.eps_fixed or cfg.max_inner is reached.
inline BpgOutcome run_bpg(const ValidatedInstance& inst,
                          const SupportPattern& pattern, const BpgConfig& cfg,
                          const JointPolicy& q0) {
  detail::check_bpg_config(inst, cfg);
  const auto start_time = std::chrono::steady_clock::now();
  auto elapsed = [&start_time]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_time)
        .count();
  };

  Tensor3 cur = detail::pattern_supported_tensor(inst, pattern, q0, true);
  Tensor3 next(inst.num_s(), inst.num_a(), inst.num_b(), 0.0);

  BpgOutcome out;
  if (cfg.record_marginals)
    out.marginals.push_back(
        detail::marginal_b_unchecked(inst->prior, cur, pattern));

  for (long n = 1; n <= cfg.max_inner; ++n) {
    std::vector<double> t =
        cfg.record_marginals && !out.marginals.empty()
            ? out.marginals.back()
            : detail::marginal_b_unchecked(inst->prior, cur, pattern);
    detail::bpg_step_from_marginal(inst, pattern, cfg, t, next);
    double residual = l2_distance(next.flat(), cur.flat());
    std::swap(cur, next);
    out.iterations = n;
    if (cfg.record_marginals)
      out.marginals.push_back(
          detail::marginal_b_unchecked(inst->prior, cur, pattern));

    bool last = residual < cfg.eps_fixed || n == cfg.max_inner;
    if (last || n % cfg.trace_stride == 0) {
      ExtendedReal F = bpg_objective(inst, cfg, cur);
      ExtendedReal g = g_value(inst, cur);
      out.trace.push_back(TraceRecord{n, F.value(), g.value(), residual,
                                      elapsed()});
      out.final_F = F.value();
      out.final_g = g.value();
    }
    if (residual < cfg.eps_fixed) {
      out.converged = true;
      break;
    }
  }
  out.policy = JointPolicy(std::move(cur));
  return out;
}

/// Both sides of the descent certificate after n steps of a recorded run:
///   lhs = n (F(q^n) - F(q_ref)) + sum_{k<n} D_B(T(q^{k+1}), T(q^k))
///   rhs = sum_s p_s D_{AxB}(q_ref^s, q^{0,s})
/// For q_ref a (near-)solution the run must satisfy lhs <= rhs.
struct CertificateGap {
  double lhs = 0.0;
  double rhs = 0.0;
};

inline CertificateGap certificate_gap(const ValidatedInstance& inst,
                                      const SupportPattern& pattern,
                                      const BpgConfig& cfg,
                                      const JointPolicy& q0,
                                      const JointPolicy& q_ref, long n,
                                      const BpgOutcome& outcome) {
  if (n < 0 || n > outcome.iterations)
    throw SolverError(ErrorCode::InvalidArgument,
                      "certificate index outside the recorded run");
  if (static_cast<long>(outcome.marginals.size()) < n + 1)
    throw SolverError(ErrorCode::InvalidArgument,
                      "certificate needs recorded marginals (record_marginals)");

  Tensor3 start = detail::pattern_supported_tensor(inst, pattern, q0, true);
  double f_ref = bpg_objective(inst, cfg, q_ref.tensor()).value();

  double f_n;
  if (n == 0) {
    f_n = bpg_objective(inst, cfg, start).value();
  } else if (n == outcome.iterations) {
    f_n = outcome.final_F;
  } else {
    f_n = std::numeric_limits<double>::quiet_NaN();
    for (const auto& rec : outcome.trace)
      if (rec.n == n) f_n = rec.objective_F;
    if (std::isnan(f_n))
      throw SolverError(ErrorCode::InvalidArgument,
                        "iteration not present in the trace (stride)");
  }

  CompensatedAccumulator marg_terms;
  for (long k = 0; k + 1 <= n; ++k)
    marg_terms.add(
        kl_divergence(outcome.marginals[k + 1], outcome.marginals[k]).value());

  CompensatedAccumulator rhs;
  for (int s = 0; s < inst.num_s(); ++s)
    rhs.add(inst->prior[s] *
            kl_divergence(q_ref.tensor().state(s), start.state(s)).value());

  return CertificateGap{static_cast<double>(n) * (f_n - f_ref) +
                            marg_terms.value(),
                        rhs.value()};
}

}  // namespace entrolp
