#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "entrolp/attain.hpp"
#include "entrolp/core.hpp"
#include "entrolp/errors.hpp"

namespace entrolp {

/// The 2x2x2 coordination game: uniform prior, state s0 rewards (a0,b0)
/// with cost 0, state s1 rewards (a1,b1), every other pair costs 1.
inline ProblemInstance ghn_instance() {
  ProblemInstance inst;
  inst.num_a = inst.num_b = inst.num_s = 2;
  inst.prior = {0.5, 0.5};
  inst.cost = Tensor3(2, 2, 2, 1.0);
  inst.cost.at(0, 0, 0) = 0.0;
  inst.cost.at(1, 1, 1) = 0.0;
  return inst;
}

/// The d x d x d version: uniform prior 1/d, cost 1 everywhere except the
/// diagonal entries c[k,k,k] = 0.
inline ProblemInstance extended_instance(int d) {
  if (d < 2)
    throw SolverError(ErrorCode::InvalidArgument, "extended_instance needs d >= 2");
  ProblemInstance inst;
  inst.num_a = inst.num_b = inst.num_s = d;
  inst.prior.assign(d, 1.0 / d);
  inst.cost = Tensor3(d, d, d, 1.0);
  for (int k = 0; k < d; ++k) inst.cost.at(k, k, k) = 0.0;
  return inst;
}

/// Recipe for a seeded random cost tensor on a decimal grid, uniform prior.
struct RandomSpec {
  int num_a = 0;
  int num_b = 0;
  int num_s = 0;
  double cost_low = 0.0;
  double cost_high = 10.0;
  int decimals = 1;
  std::uint64_t seed = 0;
  bool require_not_attainable = false;
};

/// splitmix64 finalizer evaluated in counter mode: the stream is a pure
/// function of (seed, index), so instances regenerate identically on any
/// platform. See the README for the exact sampling formula.
inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double uniform01_at(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(splitmix64_at(seed, index) >> 11) * 0x1.0p-53;
}

namespace detail {

inline ProblemInstance random_instance_attempt(const RandomSpec& spec,
                                               std::uint64_t attempt) {
  const double step = std::pow(10.0, -spec.decimals);
  const std::uint64_t points = static_cast<std::uint64_t>(
      std::llround((spec.cost_high - spec.cost_low) / step)) + 1;
  ProblemInstance inst;
  inst.num_a = spec.num_a;
  inst.num_b = spec.num_b;
  inst.num_s = spec.num_s;
  inst.prior.assign(spec.num_s, 1.0 / spec.num_s);
  inst.cost = Tensor3(spec.num_s, spec.num_a, spec.num_b, 0.0);
  const std::uint64_t n = inst.cost.size();
  std::uint64_t i = attempt * n;
  for (double& c : inst.cost.flat()) {
    double u = uniform01_at(spec.seed, i++);
    double v = spec.cost_low +
               std::floor(u * static_cast<double>(points)) * step;
    c = std::min(std::max(v, spec.cost_low), spec.cost_high);
  }
  return inst;
}

}  // namespace detail

/// Deterministic-from-seed cost tensor with entries on the decimal grid in
/// [cost_low, cost_high]. With require_not_attainable set, draws are
/// rejected until the attainability phase answers "not attainable"
/// (at most 1000 attempts).
inline ProblemInstance random_instance(const RandomSpec& spec) {
  if (spec.num_a < 2 || spec.num_b < 1 || spec.num_s < 1)
    throw SolverError(ErrorCode::InvalidArgument, "bad random_instance dims");
  if (!(spec.cost_low < spec.cost_high) || spec.decimals < 0)
    throw SolverError(ErrorCode::InvalidArgument, "bad random_instance range");

  const int max_attempts = spec.require_not_attainable ? 1000 : 1;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    ProblemInstance inst = detail::random_instance_attempt(spec, attempt);
    if (!spec.require_not_attainable) return inst;
    ValidatedInstance validated = validate_instance(inst);
    NormalizeResult norm = normalize_costs(validated);
    if (norm.degenerate) continue;
    BpgConfig cfg;
    cfg.eps_fixed = 1e-10;
    cfg.record_marginals = false;
    if (!solve_delta0(norm.instance, cfg).attainable) return inst;
  }
  throw SolverError(ErrorCode::RejectionExhausted,
                    "no non-attainable draw within 1000 attempts");
}

}  // namespace entrolp
