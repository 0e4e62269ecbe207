#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "entrolp/core.hpp"
#include "entrolp/errors.hpp"
#include "entrolp/tensor.hpp"

namespace entrolp {

/// A real number or an explicit +infinity tag. The entropic building blocks
/// are extended-real valued at the simplex boundary; the tag keeps 0*ln(0)
/// and support violations out of IEEE NaN territory.
class ExtendedReal {
 public:
  static ExtendedReal finite(double v) { return ExtendedReal(v, false); }
  static ExtendedReal infinity() { return ExtendedReal(0.0, true); }

  bool is_infinite() const noexcept { return infinite_; }
  bool is_finite() const noexcept { return !infinite_; }

  /// Finite value; calling this on +infinity is a caller bug.
  double value() const {
    if (infinite_)
      throw SolverError(ErrorCode::InvalidArgument,
                        "value() called on +infinity");
    return value_;
  }

  /// Finite value, or +HUGE_VAL for the infinite tag. For comparisons.
  double as_double() const noexcept {
    return infinite_ ? HUGE_VAL : value_;
  }

  friend ExtendedReal operator+(const ExtendedReal& x, const ExtendedReal& y) {
    if (x.infinite_ || y.infinite_) return infinity();
    return finite(x.value_ + y.value_);
  }

 private:
  ExtendedReal(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_ = 0.0;
  bool infinite_ = false;
};

/// Entries below this magnitude are treated as exact zero in psi, so that
/// subnormal residue from multiplicative updates never produces huge
/// spurious logarithm terms.
inline constexpr double kPsiZeroFloor = 1e-300;

/// psi(xi, mu): xi*ln(xi/mu) when xi > 0 and mu > 0; 0 when xi = 0 and
/// mu >= 0; +infinity otherwise.
inline ExtendedReal psi(double xi, double mu) {
  if (xi > 0.0 && xi < kPsiZeroFloor) xi = 0.0;
  if (xi == 0.0) {
    if (mu >= 0.0) return ExtendedReal::finite(0.0);
    return ExtendedReal::infinity();
  }
  if (xi > 0.0 && mu > 0.0)
    return ExtendedReal::finite(xi * std::log(xi / mu));
  return ExtendedReal::infinity();
}

/// D_I(q, u) = sum_i psi(q_i, u_i). +infinity exactly when supp(q) is not
/// contained in supp(u) (or an entry is negative).
inline ExtendedReal kl_divergence(std::span<const double> q,
                                  std::span<const double> u) {
  if (q.size() != u.size())
    throw SolverError(ErrorCode::ShapeMismatch, "kl_divergence length mismatch");
  CompensatedAccumulator acc;
  for (std::size_t i = 0; i < q.size(); ++i) {
    ExtendedReal term = psi(q[i], u[i]);
    if (term.is_infinite()) return ExtendedReal::infinity();
    acc.add(term.value());
  }
  return ExtendedReal::finite(acc.value());
}

inline ExtendedReal kl_divergence(const std::vector<double>& q,
                                  const std::vector<double>& u) {
  return kl_divergence(std::span<const double>(q), std::span<const double>(u));
}

/// Round-off slack on the nonnegativity of g's argument: entries in
/// [-1e-14, 0) are clamped to 0 before evaluation, anything more negative
/// makes g = +infinity.
inline constexpr double kGNegativeClamp = -1e-14;

/// The constraint functional
///   g(q) = sum_s p_s sum_{a,b} psi(q[s,a,b], t_b),
///   t_b  = sum_{a',s'} p_{s'} q[s',a',b],
/// total on tensors: +infinity off the (clamped) nonnegative orthant. The
/// feasible set of the solve is { q : g(q) <= 0 }.
inline ExtendedReal g_value(const ValidatedInstance& inst, const Tensor3& q) {
  if (!q.same_shape(inst->cost))
    throw SolverError(ErrorCode::ShapeMismatch, "g_value shape mismatch");
  const int nb = q.nb();

  // Inner marginal once per b before the double loop.
  std::vector<CompensatedAccumulator> t_acc(nb);
  for (int s = 0; s < q.ns(); ++s) {
    double ps = inst->prior[s];
    for (int a = 0; a < q.na(); ++a)
      for (int b = 0; b < nb; ++b) {
        double v = q.at(s, a, b);
        if (v < kGNegativeClamp) return ExtendedReal::infinity();
        t_acc[b].add(ps * std::max(v, 0.0));
      }
  }
  std::vector<double> t(nb);
  for (int b = 0; b < nb; ++b) t[b] = t_acc[b].value();

  CompensatedAccumulator acc;
  for (int s = 0; s < q.ns(); ++s) {
    double ps = inst->prior[s];
    CompensatedAccumulator state_acc;
    for (int a = 0; a < q.na(); ++a)
      for (int b = 0; b < nb; ++b) {
        ExtendedReal term = psi(std::max(q.at(s, a, b), 0.0), t[b]);
        if (term.is_infinite()) return ExtendedReal::infinity();
        state_acc.add(term.value());
      }
    acc.add(ps * state_acc.value());
  }
  return ExtendedReal::finite(acc.value());
}

inline ExtendedReal g_value(const ValidatedInstance& inst,
                            const JointPolicy& q) {
  return g_value(inst, q.tensor());
}

/// Gradient of the restriction of g to a support pattern, at an interior
/// point: entry (s,a,b) is p_s * ln(q[s,a,b] / t_b). Entries off the
/// pattern are zero in the returned tensor.
inline Tensor3 g_gradient(const ValidatedInstance& inst, const JointPolicy& q,
                          const SupportPattern& pattern) {
  if (!q.tensor().same_shape(inst->cost) || pattern.ns() != inst.num_s() ||
      pattern.na() != inst.num_a() || pattern.nb() != inst.num_b())
    throw SolverError(ErrorCode::ShapeMismatch, "g_gradient shape mismatch");
  for (int s = 0; s < q.ns(); ++s)
    for (auto [a, b] : pattern.state(s))
      if (q.at(s, a, b) <= 0.0)
        throw SolverError(ErrorCode::BoundaryPoint,
                          "gradient needs a strictly positive pattern point");

  std::vector<double> t =
      detail::marginal_b_unchecked(inst->prior, q.tensor(), pattern);
  Tensor3 grad(q.ns(), q.na(), q.nb(), 0.0);
  for (int s = 0; s < q.ns(); ++s) {
    double ps = inst->prior[s];
    for (auto [a, b] : pattern.state(s))
      grad.at(s, a, b) = ps * std::log(q.at(s, a, b) / t[b]);
  }
  return grad;
}

struct InfoDecomposition {
  double mutual_info = 0.0;    // I(b;s)
  double cond_entropy = 0.0;   // H(a|b,s)
};

/// Splits g into mutual information minus conditional entropy:
///   I(b;s)   = sum_s p_s sum_b psi(m[s,b], t_b)   with m[s,b] = sum_a q[s,a,b]
///   H(a|b,s) = -sum_s p_s sum_{a,b} psi(q[s,a,b], m[s,b])
/// Terms with zero denominator contribute zero, consistent with psi.
inline InfoDecomposition info_decomposition(const ValidatedInstance& inst,
                                            const JointPolicy& q) {
  if (!q.tensor().same_shape(inst->cost))
    throw SolverError(ErrorCode::ShapeMismatch,
                      "info_decomposition shape mismatch");
  const int ns = q.ns(), na = q.na(), nb = q.nb();

  std::vector<std::vector<double>> m(ns, std::vector<double>(nb, 0.0));
  std::vector<double> t(nb, 0.0);
  for (int s = 0; s < ns; ++s) {
    for (int b = 0; b < nb; ++b) {
      CompensatedAccumulator col;
      for (int a = 0; a < na; ++a) col.add(q.at(s, a, b));
      m[s][b] = col.value();
    }
  }
  for (int b = 0; b < nb; ++b) {
    CompensatedAccumulator acc;
    for (int s = 0; s < ns; ++s) acc.add(inst->prior[s] * m[s][b]);
    t[b] = acc.value();
  }

  CompensatedAccumulator mi, ce;
  for (int s = 0; s < ns; ++s) {
    double ps = inst->prior[s];
    CompensatedAccumulator mi_s, ce_s;
    for (int b = 0; b < nb; ++b) {
      // m[s,b] > 0 implies t_b >= p_s * m[s,b] > 0, so the term is finite.
      mi_s.add(psi(m[s][b], t[b]).value());
      for (int a = 0; a < na; ++a)
        ce_s.add(psi(q.at(s, a, b), m[s][b]).value());
    }
    mi.add(ps * mi_s.value());
    ce.add(ps * ce_s.value());
  }
  return InfoDecomposition{mi.value(), -ce.value()};
}

}  // namespace entrolp
