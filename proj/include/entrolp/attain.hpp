#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "entrolp/bpg.hpp"
#include "entrolp/core.hpp"
#include "entrolp/entropy.hpp"
#include "entrolp/errors.hpp"

namespace entrolp {

/// One-sided slack on the "g <= 0" decision at the restricted limit. The
/// limit is only approximated to eps_fixed, and a boundary case classified
/// as attainable still yields a correct solution, whereas sending it to the
/// multiplier search wastes bisection work.
inline constexpr double kAttainThreshold = 1e-9;

/// Relative tolerance for cost ties when collecting minimal supports;
/// JSON-roundtripped costs land within a few ulps of each other.
inline constexpr double kTieRelTol = 1e-12;

struct AttainReport {
  bool attainable = false;
  double g_at_limit = 0.0;
  JointPolicy policy;  // limit over the minimal supports, full shape
  long iterations = 0;
};

/// Per-state argmin sets of the cost tensor, ties all kept:
///   I^s = { (a,b) : c[s,a,b] <= c_min_s + tie_tol }.
/// Expects a normalized instance (per-state minima at 0), but works for any.
inline SupportPattern minimal_supports(const ValidatedInstance& inst) {
  CostSummary summary = cost_summary(inst);
  double scale = std::max(1.0, std::abs(summary.c_max));
  std::vector<std::vector<SupportPattern::Pair>> sup(inst.num_s());
  for (int s = 0; s < inst.num_s(); ++s) {
    double cutoff = summary.c_min_s[s] + kTieRelTol * scale;
    for (int a = 0; a < inst.num_a(); ++a)
      for (int b = 0; b < inst.num_b(); ++b)
        if (inst->cost.at(s, a, b) <= cutoff) sup[s].emplace_back(a, b);
  }
  return SupportPattern(inst.num_a(), inst.num_b(), std::move(sup));
}

/// Uniform distribution over each state's support set, embedded full-shape.
inline JointPolicy uniform_on_pattern(const ValidatedInstance& inst,
                                      const SupportPattern& pattern) {
  Tensor3 q(inst.num_s(), inst.num_a(), inst.num_b(), 0.0);
  for (int s = 0; s < inst.num_s(); ++s) {
    double w = 1.0 / static_cast<double>(pattern.state(s).size());
    for (auto [a, b] : pattern.state(s)) q.at(s, a, b) = w;
  }
  return JointPolicy(std::move(q));
}

/// Phase 1: minimize g over the product of simplices on the minimal
/// supports (the eta = 0 recursion) and decide attainability by the sign of
/// g at the limit.
inline AttainReport solve_delta0(const ValidatedInstance& inst, BpgConfig cfg,
                                 std::optional<JointPolicy> q0 = std::nullopt) {
  SupportPattern pattern = minimal_supports(inst);
  cfg.eta = 0.0;
  cfg.tilt = Tensor3();
  JointPolicy start = q0 ? std::move(*q0) : uniform_on_pattern(inst, pattern);
  BpgOutcome outcome = run_bpg(inst, pattern, cfg, start);
  double g_lim = outcome.final_g;
  return AttainReport{g_lim <= kAttainThreshold, g_lim,
                      std::move(outcome.policy), outcome.iterations};
}

/// Value of the solve in the attainable case: the prior-weighted minimal
/// cost, shifted back by the normalization offsets when given.
inline double attainability_value(const ValidatedInstance& inst,
                                  const AttainReport& report,
                                  const std::vector<double>& offsets = {}) {
  if (!report.attainable)
    throw SolverError(ErrorCode::NotAttainable,
                      "minimal cost is not attainable for this instance");
  CostSummary summary = cost_summary(inst);
  double value = summary.c_min;
  if (!offsets.empty()) {
    if (static_cast<int>(offsets.size()) != inst.num_s())
      throw SolverError(ErrorCode::ShapeMismatch, "offsets length != |S|");
    CompensatedAccumulator acc;
    for (int s = 0; s < inst.num_s(); ++s)
      acc.add(inst->prior[s] * offsets[s]);
    value += acc.value();
  }
  return value;
}

}  // namespace entrolp
