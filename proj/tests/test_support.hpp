#pragma once

// Shared helpers for the unit suites: seeded random simplices, policies,
// and instances.

#include <random>
#include <vector>

#include "entrolp/entrolp.hpp"

namespace testsupport {

inline std::vector<double> random_simplex(std::mt19937_64& rng, int n) {
  std::exponential_distribution<double> exp1(1.0);
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = exp1(rng) + 1e-12;
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

/// Random interior policy: a simplex draw per state mixed with uniform so
/// that no entry sits near the boundary.
inline entrolp::JointPolicy random_interior_policy(std::mt19937_64& rng,
                                                   int ns, int na, int nb,
                                                   double uniform_mix = 0.2) {
  entrolp::Tensor3 q(ns, na, nb, 0.0);
  const double u = uniform_mix / (na * nb);
  for (int s = 0; s < ns; ++s) {
    auto draw = random_simplex(rng, na * nb);
    auto slice = q.state(s);
    for (int i = 0; i < na * nb; ++i)
      slice[i] = (1.0 - uniform_mix) * draw[i] + u;
  }
  return entrolp::JointPolicy(std::move(q));
}

inline entrolp::ProblemInstance random_instance(std::uint64_t seed, int na,
                                                int nb, int ns,
                                                bool not_attainable = false) {
  entrolp::RandomSpec spec;
  spec.num_a = na;
  spec.num_b = nb;
  spec.num_s = ns;
  spec.seed = seed;
  spec.require_not_attainable = not_attainable;
  return entrolp::random_instance(spec);
}

}  // namespace testsupport
