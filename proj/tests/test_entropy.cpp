#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "entrolp/entrolp.hpp"
#include "test_support.hpp"

using namespace entrolp;

TEST_CASE("psi cases") {
  CHECK(psi(0.0, 0.5).value() == 0.0);
  CHECK(psi(0.5, 0.5).value() == 0.0);
  CHECK(psi(1.0, 0.5).value() == Catch::Approx(std::log(2.0)).margin(1e-15));
  CHECK(psi(0.3, 0.0).is_infinite());
  CHECK(psi(-0.1, 0.5).is_infinite());
  CHECK(psi(0.0, -0.1).is_infinite());
  CHECK(psi(0.0, 0.0).value() == 0.0);
  // subnormal residue counts as zero
  CHECK(psi(1e-310, 0.5).value() == 0.0);
}

TEST_CASE("kl_divergence cases") {
  std::vector<double> half{0.5, 0.5};
  CHECK(kl_divergence(half, half).value() == 0.0);
  CHECK(kl_divergence({1.0, 0.0}, half).value() ==
        Catch::Approx(std::log(2.0)).margin(1e-15));
  CHECK(kl_divergence(half, {1.0, 0.0}).is_infinite());
  CHECK_THROWS_AS(kl_divergence({0.5, 0.5}, {1.0}), SolverError);
}

TEST_CASE("kl_divergence Pinsker bound and positivity") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(2, 8);
  for (int trial = 0; trial < 300; ++trial) {
    int n = dim(rng);
    auto q = testsupport::random_simplex(rng, n);
    auto u = testsupport::random_simplex(rng, n);
    if (trial % 3 == 1) u = q;  // equality case
    if (trial % 3 == 2 && n >= 4) {
      // disjoint supports
      for (int i = 0; i < n; ++i) (i < n / 2 ? q[i] : u[i]) = 0.0;
      double qs = compensated_sum(q), us = compensated_sum(u);
      for (double& x : q) x /= qs;
      for (double& x : u) x /= us;
    }
    ExtendedReal d = kl_divergence(q, u);
    double l1 = l1_distance(q, u);
    if (d.is_finite()) {
      CHECK(d.value() >= 0.5 * l1 * l1 - 1e-12);
      CHECK(d.value() >= -1e-12);
    }
  }
}

TEST_CASE("kl_divergence vanishes only at equal arguments") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    auto q = testsupport::random_simplex(rng, 5);
    CHECK(kl_divergence(q, q).value() == 0.0);

    auto u = q;
    // push 1e-3 of mass from the largest entry to the smallest
    int hi = 0, lo = 0;
    for (int i = 1; i < 5; ++i) {
      if (u[i] > u[hi]) hi = i;
      if (u[i] < u[lo]) lo = i;
    }
    u[hi] -= 5e-4;
    u[lo] += 5e-4;
    CHECK(kl_divergence(q, u).value() > 0.0);
  }
}

TEST_CASE("g of the uniform policy is -ln|A|") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> adim(2, 6), bdim(1, 6), sdim(1, 6);
  for (int trial = 0; trial < 20; ++trial) {
    int na = adim(rng), nb = bdim(rng), ns = sdim(rng);
    ProblemInstance raw;
    raw.num_a = na;
    raw.num_b = nb;
    raw.num_s = ns;
    raw.prior = testsupport::random_simplex(rng, ns);
    raw.cost = Tensor3(ns, na, nb, 1.0);
    auto inst = validate_instance(raw);
    double g = g_value(inst, JointPolicy::uniform(ns, na, nb)).value();
    CHECK(g == Catch::Approx(-std::log(double(na))).margin(1e-12));
  }
}

TEST_CASE("g at the minimal-support points of the coordination games") {
  SECTION("2x2x2 game") {
    auto inst = validate_instance(ghn_instance());
    Tensor3 q(2, 2, 2, 0.0);
    q.at(0, 0, 0) = 1.0;
    q.at(1, 1, 1) = 1.0;
    CHECK(g_value(inst, JointPolicy(q)).value() ==
          Catch::Approx(std::log(2.0)).margin(1e-12));
  }
  SECTION("extended game") {
    for (int d : {2, 5, 10}) {
      auto inst = validate_instance(extended_instance(d));
      Tensor3 q(d, d, d, 0.0);
      for (int k = 0; k < d; ++k) q.at(k, k, k) = 1.0;
      CHECK(g_value(inst, JointPolicy(q)).value() ==
            Catch::Approx(std::log(double(d))).margin(1e-12));
    }
  }
}

TEST_CASE("g is extended-real valued off the orthant") {
  auto inst = validate_instance(ghn_instance());
  Tensor3 q(2, 2, 2, 0.25);
  q.at(0, 0, 0) = -1e-15;  // within the round-off clamp
  q.at(0, 0, 1) = 0.5 - 1e-15;
  CHECK(g_value(inst, q).is_finite());
  q.at(0, 0, 0) = -1e-9;  // beyond it
  CHECK(g_value(inst, q).is_infinite());
}

TEST_CASE("g convexity spot check") {
  std::mt19937_64 rng(31);
  auto inst = validate_instance(testsupport::random_instance(13, 3, 3, 2));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    auto qa = testsupport::random_interior_policy(rng, 2, 3, 3);
    auto qb = testsupport::random_interior_policy(rng, 2, 3, 3);
    double w = unif(rng);
    Tensor3 mix(2, 3, 3, 0.0);
    for (std::size_t i = 0; i < mix.size(); ++i)
      mix.flat()[i] =
          w * qa.tensor().flat()[i] + (1.0 - w) * qb.tensor().flat()[i];
    double lhs = g_value(inst, mix).value();
    double rhs = w * g_value(inst, qa).value() +
                 (1.0 - w) * g_value(inst, qb).value();
    CHECK(lhs <= rhs + 1e-10);
  }
}

TEST_CASE("g_gradient closed forms") {
  auto inst = validate_instance(ghn_instance());
  SupportPattern full = SupportPattern::full(2, 2, 2);

  SECTION("uniform policy") {
    Tensor3 grad = g_gradient(inst, JointPolicy::uniform(2, 2, 2), full);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          CHECK(grad.at(s, a, b) ==
                Catch::Approx(-0.5 * std::log(2.0)).margin(1e-12));
  }
  SECTION("policy equal to its own conditional-uniform product") {
    // q[s,a,b] = t_b / |A| gives entries p_s ln(1/|A|)
    Tensor3 q(2, 2, 2, 0.0);
    const double t0 = 0.3, t1 = 0.7;
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        q.at(s, a, 0) = t0 / 2.0;
        q.at(s, a, 1) = t1 / 2.0;
      }
    Tensor3 grad = g_gradient(inst, JointPolicy(q), full);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          CHECK(grad.at(s, a, b) ==
                Catch::Approx(0.5 * std::log(0.5)).margin(1e-12));
  }
  SECTION("boundary point is rejected") {
    Tensor3 q(2, 2, 2, 0.0);
    q.at(0, 0, 0) = 1.0;
    q.at(1, 1, 1) = 1.0;
    CHECK_THROWS_MATCHES(g_gradient(inst, JointPolicy(q), full), SolverError,
                         Catch::Matchers::Predicate<SolverError>([](auto& e) {
                           return e.code() == ErrorCode::BoundaryPoint;
                         }));
  }
}

TEST_CASE("g_gradient matches central finite differences") {
  std::mt19937_64 rng(43);
  auto inst = validate_instance(testsupport::random_instance(17, 3, 3, 2));
  SupportPattern full = SupportPattern::full(2, 3, 3);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    auto q = testsupport::random_interior_policy(rng, 2, 3, 3);
    Tensor3 grad = g_gradient(inst, q, full);
    double num = 0.0, den = 0.0;
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          Tensor3 plus = q.tensor(), minus = q.tensor();
          plus.at(s, a, b) += h;
          minus.at(s, a, b) -= h;
          double fd = (g_value(inst, plus).value() -
                       g_value(inst, minus).value()) /
                      (2.0 * h);
          double diff = fd - grad.at(s, a, b);
          num += diff * diff;
          den += grad.at(s, a, b) * grad.at(s, a, b);
        }
    CHECK(std::sqrt(num) <= 1e-6 * std::max(1.0, std::sqrt(den)));
  }
}

TEST_CASE("info_decomposition closed forms") {
  auto inst = validate_instance(ghn_instance());

  SECTION("uniform policy") {
    auto [mi, ce] = info_decomposition(inst, JointPolicy::uniform(2, 2, 2));
    CHECK(mi == Catch::Approx(0.0).margin(1e-15));
    CHECK(ce == Catch::Approx(std::log(2.0)).margin(1e-15));
  }
  SECTION("minimal-support point") {
    Tensor3 q(2, 2, 2, 0.0);
    q.at(0, 0, 0) = 1.0;
    q.at(1, 1, 1) = 1.0;
    auto [mi, ce] = info_decomposition(inst, JointPolicy(q));
    CHECK(mi == Catch::Approx(std::log(2.0)).margin(1e-12));
    CHECK(ce == Catch::Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("info_decomposition identity and ranges") {
  std::mt19937_64 rng(97);
  auto inst = validate_instance(testsupport::random_instance(29, 3, 4, 3));
  for (int trial = 0; trial < 100; ++trial) {
    auto q = testsupport::random_interior_policy(rng, 3, 3, 4);
    auto [mi, ce] = info_decomposition(inst, q);
    double g = g_value(inst, q).value();
    CHECK(g == Catch::Approx(mi - ce).margin(1e-10));
    CHECK(mi >= -1e-12);
    CHECK(ce >= -1e-12);
    CHECK(ce <= std::log(3.0) + 1e-12);
  }
}
