#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "entrolp/errors.hpp"
#include "entrolp/tensor.hpp"

namespace entrolp {

/// Tolerance applied to every simplex-sum check. Inputs within it are
/// renormalized on construction, outside it rejected.
inline constexpr double kSimplexTol = 1e-12;

/// Mass allowed outside a support pattern before marginal_b reports a
/// violation.
inline constexpr double kSupportTol = 1e-14;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// The raw data of a solve: a strictly positive state prior p over S and a
/// real cost tensor c indexed (s, a, b).
struct ProblemInstance {
  int num_a = 0;
  int num_b = 0;
  int num_s = 0;
  std::vector<double> prior;  // length num_s
  Tensor3 cost;               // (num_s, num_a, num_b)
};

/// One probability distribution over A x B per state.
class JointPolicy {
 public:
  JointPolicy() = default;

  /// Validates nonnegativity and per-state normalization (within
  /// kSimplexTol), then renormalizes each state to sum exactly to 1.
  explicit JointPolicy(Tensor3 q) : q_(std::move(q)) {
    for (int s = 0; s < q_.ns(); ++s) {
      auto slice = q_.state(s);
      for (double v : slice) {
        if (!(v >= 0.0))  // catches NaN as well
          throw SolverError(ErrorCode::InvalidPolicy,
                            "policy entries must be nonnegative");
      }
      double sum = compensated_sum(slice);
      if (std::abs(sum - 1.0) > kSimplexTol)
        throw SolverError(ErrorCode::InvalidPolicy,
                          "state mass deviates from 1 beyond tolerance");
      for (double& v : slice) v /= sum;
    }
  }

  static JointPolicy uniform(int ns, int na, int nb) {
    Tensor3 q(ns, na, nb, 1.0 / (static_cast<double>(na) * nb));
    return JointPolicy(std::move(q));
  }

  const Tensor3& tensor() const noexcept { return q_; }
  double at(int s, int a, int b) const { return q_.at(s, a, b); }
  int ns() const noexcept { return q_.ns(); }
  int na() const noexcept { return q_.na(); }
  int nb() const noexcept { return q_.nb(); }

 private:
  Tensor3 q_;
};

/// Per-state subsets of A x B on which a restricted solve lives.
class SupportPattern {
 public:
  using Pair = std::pair<int, int>;  // (a, b)

  SupportPattern() = default;
  SupportPattern(int na, int nb, std::vector<std::vector<Pair>> supports)
      : na_(na), nb_(nb), supports_(std::move(supports)) {
    if (supports_.empty())
      throw SolverError(ErrorCode::InvalidPattern, "pattern needs >= 1 state");
    mask_.assign(supports_.size(),
                 std::vector<char>(static_cast<std::size_t>(na) * nb, 0));
    for (std::size_t s = 0; s < supports_.size(); ++s) {
      auto& set = supports_[s];
      if (set.empty())
        throw SolverError(ErrorCode::InvalidPattern,
                          "per-state support set must be nonempty");
      std::sort(set.begin(), set.end());
      set.erase(std::unique(set.begin(), set.end()), set.end());
      for (auto [a, b] : set) {
        if (a < 0 || a >= na || b < 0 || b >= nb)
          throw SolverError(ErrorCode::InvalidPattern,
                            "support index out of range");
        mask_[s][static_cast<std::size_t>(a) * nb + b] = 1;
      }
    }
  }

  static SupportPattern full(int ns, int na, int nb) {
    std::vector<std::vector<Pair>> sup(ns);
    for (auto& set : sup) {
      set.reserve(static_cast<std::size_t>(na) * nb);
      for (int a = 0; a < na; ++a)
        for (int b = 0; b < nb; ++b) set.emplace_back(a, b);
    }
    return SupportPattern(na, nb, std::move(sup));
  }

  int ns() const noexcept { return static_cast<int>(supports_.size()); }
  int na() const noexcept { return na_; }
  int nb() const noexcept { return nb_; }
  const std::vector<Pair>& state(int s) const { return supports_[s]; }
  bool contains(int s, int a, int b) const {
    return mask_[s][static_cast<std::size_t>(a) * nb_ + b] != 0;
  }

 private:
  int na_ = 0, nb_ = 0;
  std::vector<std::vector<Pair>> supports_;
  std::vector<std::vector<char>> mask_;
};

/// A distribution over B (the image of a policy under the prior-weighted
/// b-marginal map).
class MarginalB {
 public:
  MarginalB() = default;
  explicit MarginalB(std::vector<double> t) : t_(std::move(t)) {
    for (double v : t_)
      if (!(v >= 0.0))
        throw SolverError(ErrorCode::InvalidPolicy,
                          "marginal entries must be nonnegative");
    double sum = compensated_sum(t_);
    if (std::abs(sum - 1.0) > kSimplexTol)
      throw SolverError(ErrorCode::InvalidPolicy,
                        "marginal mass deviates from 1 beyond tolerance");
    for (double& v : t_) v /= sum;
  }

  const std::vector<double>& values() const noexcept { return t_; }
  double operator[](int b) const { return t_[b]; }
  int size() const noexcept { return static_cast<int>(t_.size()); }

 private:
  std::vector<double> t_;
};

/// Per-state and prior-weighted cost extremes.
struct CostSummary {
  std::vector<double> c_min_s;
  std::vector<double> c_max_s;
  double c_min = 0.0;
  double c_max = 0.0;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// A ProblemInstance whose hypotheses have been checked: strictly positive
/// prior summing to 1 (renormalized exactly), |A| >= 2, finite costs.
/// Immutable once constructed; shareable across threads.
class ValidatedInstance {
 public:
  const ProblemInstance& get() const noexcept { return inst_; }
  const ProblemInstance& operator*() const noexcept { return inst_; }
  const ProblemInstance* operator->() const noexcept { return &inst_; }

  int num_a() const noexcept { return inst_.num_a; }
  int num_b() const noexcept { return inst_.num_b; }
  int num_s() const noexcept { return inst_.num_s; }

 private:
  friend ValidatedInstance validate_instance(ProblemInstance inst);
  explicit ValidatedInstance(ProblemInstance inst) : inst_(std::move(inst)) {}
  ProblemInstance inst_;
};

inline ValidatedInstance validate_instance(ProblemInstance inst) {
  if (inst.num_a < 2)
    throw SolverError(ErrorCode::TooFewActions, "need |A| >= 2");
  if (inst.num_b < 1 || inst.num_s < 1)
    throw SolverError(ErrorCode::ShapeMismatch, "need |B| >= 1 and |S| >= 1");
  if (static_cast<int>(inst.prior.size()) != inst.num_s)
    throw SolverError(ErrorCode::ShapeMismatch, "prior length != |S|");
  if (inst.cost.ns() != inst.num_s || inst.cost.na() != inst.num_a ||
      inst.cost.nb() != inst.num_b)
    throw SolverError(ErrorCode::ShapeMismatch, "cost tensor shape mismatch");

  for (double p : inst.prior) {
    if (!std::isfinite(p))
      throw SolverError(ErrorCode::NonPositivePrior, "prior entry not finite");
    if (p <= 0.0)
      throw SolverError(ErrorCode::NonPositivePrior,
                        "prior must be strictly positive");
  }
  double sum = compensated_sum(inst.prior);
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw SolverError(ErrorCode::PriorNotNormalized,
                      "prior mass deviates from 1 beyond tolerance");
  for (double& p : inst.prior) p /= sum;

  for (double c : inst.cost.flat())
    if (!std::isfinite(c))
      throw SolverError(ErrorCode::NonFiniteCost, "cost entry not finite");

  return ValidatedInstance(std::move(inst));
}

// ---------------------------------------------------------------------------
// Cost operations
// ---------------------------------------------------------------------------

inline CostSummary cost_summary(const ValidatedInstance& inst) {
  const auto& c = inst->cost;
  CostSummary out;
  out.c_min_s.resize(inst.num_s());
  out.c_max_s.resize(inst.num_s());
  CompensatedAccumulator min_acc, max_acc;
  for (int s = 0; s < inst.num_s(); ++s) {
    auto slice = c.state(s);
    auto [lo, hi] = std::minmax_element(slice.begin(), slice.end());
    out.c_min_s[s] = *lo;
    out.c_max_s[s] = *hi;
    min_acc.add(inst->prior[s] * *lo);
    max_acc.add(inst->prior[s] * *hi);
  }
  out.c_min = min_acc.value();
  out.c_max = max_acc.value();
  return out;
}

/// Result of shifting every state's costs so that its minimum is 0. The
/// shift leaves optimal policies unchanged; the optimal value moves by
/// sum_s p_s * offsets[s], which callers must re-add when reporting.
/// `degenerate` is set when the shifted tensor is identically zero, in
/// which case any feasible point is optimal and solvers short-circuit.
struct NormalizeResult {
  ValidatedInstance instance;
  std::vector<double> offsets;
  bool degenerate = false;
};

inline NormalizeResult normalize_costs(const ValidatedInstance& inst) {
  CostSummary summary = cost_summary(inst);
  ProblemInstance shifted = inst.get();
  for (int s = 0; s < inst.num_s(); ++s) {
    auto slice = shifted.cost.state(s);
    for (double& v : slice) v -= summary.c_min_s[s];
  }
  double max_after = 0.0;
  for (double v : shifted.cost.flat()) max_after = std::max(max_after, v);
  return NormalizeResult{validate_instance(std::move(shifted)),
                         std::move(summary.c_min_s), max_after == 0.0};
}

inline double expected_cost(const ValidatedInstance& inst,
                            const JointPolicy& q) {
  if (!q.tensor().same_shape(inst->cost))
    throw SolverError(ErrorCode::ShapeMismatch, "policy/cost shape mismatch");
  CompensatedAccumulator acc;
  for (int s = 0; s < inst.num_s(); ++s) {
    auto cs = inst->cost.state(s);
    auto qs = q.tensor().state(s);
    CompensatedAccumulator state_acc;
    for (std::size_t i = 0; i < cs.size(); ++i) state_acc.add(cs[i] * qs[i]);
    acc.add(inst->prior[s] * state_acc.value());
  }
  return acc.value();
}

namespace detail {

/// b-marginal of a pattern-supported tensor: t_b = sum_s p_s sum_{(a,b) in
/// pattern_s} q[s,a,b]. No support check; callers that iterate inside the
/// pattern use this directly.
inline std::vector<double> marginal_b_unchecked(const std::vector<double>& prior,
                                                const Tensor3& q,
                                                const SupportPattern& pattern) {
  std::vector<double> t(q.nb(), 0.0);
  std::vector<CompensatedAccumulator> acc(q.nb());
  for (int s = 0; s < q.ns(); ++s) {
    double ps = prior[s];
    for (auto [a, b] : pattern.state(s)) acc[b].add(ps * q.at(s, a, b));
  }
  for (int b = 0; b < q.nb(); ++b) t[b] = acc[b].value();
  return t;
}

}  // namespace detail

inline MarginalB marginal_b(const ValidatedInstance& inst, const JointPolicy& q,
                            const SupportPattern& pattern) {
  if (!q.tensor().same_shape(inst->cost) || pattern.ns() != inst.num_s() ||
      pattern.na() != inst.num_a() || pattern.nb() != inst.num_b())
    throw SolverError(ErrorCode::ShapeMismatch, "marginal_b shape mismatch");
  for (int s = 0; s < q.ns(); ++s)
    for (int a = 0; a < q.na(); ++a)
      for (int b = 0; b < q.nb(); ++b)
        if (!pattern.contains(s, a, b) && q.at(s, a, b) > kSupportTol)
          throw SolverError(ErrorCode::SupportViolation,
                            "policy mass outside the support pattern");
  return MarginalB(detail::marginal_b_unchecked(inst->prior, q.tensor(), pattern));
}

}  // namespace entrolp
