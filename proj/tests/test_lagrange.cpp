#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "entrolp/entrolp.hpp"
#include "test_support.hpp"

using namespace entrolp;

TEST_CASE("solve_for_lambda on the coordination game") {
  auto inst = validate_instance(ghn_instance());
  BisectionConfig cfg;
  JointPolicy uniform = JointPolicy::uniform(2, 2, 2);

  SECTION("near the critical multiplier") {
    BpgOutcome out = solve_for_lambda(inst, 0.39166, cfg, uniform);
    CHECK(out.converged);
    CHECK(std::abs(out.final_g) <= 1e-5);
    CHECK(expected_cost(inst, out.policy) ==
          Catch::Approx(0.18929).margin(1e-4));
  }
  SECTION("at the bracket's upper endpoint g is negative") {
    BpgOutcome out = solve_for_lambda(inst, lambda_max(inst), cfg, uniform);
    CHECK(out.final_g < 0.0);
  }
  SECTION("nonpositive multipliers are rejected") {
    CHECK_THROWS_MATCHES(solve_for_lambda(inst, 0.0, cfg, uniform),
                         SolverError,
                         Catch::Matchers::Predicate<SolverError>([](auto& e) {
                           return e.code() == ErrorCode::InvalidLambda;
                         }));
    CHECK_THROWS_AS(solve_for_lambda(inst, -1.0, cfg, uniform), SolverError);
  }
}

TEST_CASE("lambda_max") {
  CHECK(lambda_max(validate_instance(ghn_instance())) ==
        Catch::Approx(1.0 / std::log(2.0)).margin(1e-15));
  CHECK(lambda_max(validate_instance(extended_instance(10))) ==
        Catch::Approx(1.0 / std::log(10.0)).margin(1e-15));

  ProblemInstance flat = ghn_instance();
  for (double& c : flat.cost.flat()) c = 3.0;
  CHECK_THROWS_MATCHES(lambda_max(validate_instance(flat)), SolverError,
                       Catch::Matchers::Predicate<SolverError>([](auto& e) {
                         return e.code() == ErrorCode::DegenerateCosts;
                       }));
}

TEST_CASE("k0_bound reproduces the iteration pattern") {
  const double eps_b = 1e-10;
  CHECK(k0_bound(validate_instance(extended_instance(2)), eps_b) == 34);
  CHECK(k0_bound(validate_instance(extended_instance(3)), eps_b) == 34);
  CHECK(k0_bound(validate_instance(extended_instance(4)), eps_b) == 33);
  CHECK(k0_bound(validate_instance(extended_instance(10)), eps_b) == 33);
  CHECK(k0_bound(validate_instance(extended_instance(11)), eps_b) == 32);
  CHECK(k0_bound(validate_instance(extended_instance(18)), eps_b) == 32);
}

TEST_CASE("bisection_solve solves the coordination game") {
  auto inst = validate_instance(ghn_instance());
  BisectionConfig cfg;  // eps_b 1e-10, eps_f 1e-12
  SolveReport report = bisection_solve(inst, cfg);

  CHECK(report.phase == SolvePhase::Active);
  CHECK(report.lambda == Catch::Approx(0.39166).margin(1e-4));
  CHECK(report.value == Catch::Approx(0.18929).margin(1e-4));
  CHECK(report.outer_iterations == 34);
  CHECK(std::abs(report.g_val) <= 1e-8);

  GhnAnalytic analytic = ghn_analytic();
  CHECK(l2_distance(report.policy.tensor().flat(),
                    analytic.policy.tensor().flat()) <= 5e-10);
  CHECK(report.traces.size() == 34);
}

TEST_CASE("bisection bracket halves every outer iteration") {
  auto inst = validate_instance(ghn_instance());
  BisectionConfig cfg;
  SolveReport report = bisection_solve(inst, cfg);
  double width = lambda_max(inst);
  double lo = 0.0, hi = width;
  for (const auto& rec : report.traces) {
    CHECK(rec.lambda == Catch::Approx(0.5 * (lo + hi)).margin(1e-15));
    if (rec.g_val < 0)
      hi = rec.lambda;
    else
      lo = rec.lambda;
    CHECK(hi - lo <= 0.5 * width + 1e-15);
    width = hi - lo;
  }
}

TEST_CASE("bisection iteration count stays within the bound") {
  for (int d : {2, 5, 12}) {
    BisectionConfig cfg;
    auto inst = validate_instance(extended_instance(d));
    SolveReport report = bisection_solve(inst, cfg);
    CHECK(report.outer_iterations <= k0_bound(inst, cfg.eps_b) + 1);
  }
}

TEST_CASE("bisection error paths") {
  auto inst = validate_instance(ghn_instance());
  SECTION("outer cap") {
    BisectionConfig cfg;
    cfg.max_outer = 3;
    CHECK_THROWS_MATCHES(bisection_solve(inst, cfg), SolverError,
                         Catch::Matchers::Predicate<SolverError>([](auto& e) {
                           return e.code() == ErrorCode::MaxOuterExceeded;
                         }));
  }
  SECTION("config sanity") {
    BisectionConfig cfg;
    cfg.eps_f = 1e-8;
    cfg.eps_b = 1e-9;  // violates eps_f < eps_b
    CHECK_THROWS_AS(bisection_solve(inst, cfg), SolverError);
  }
  SECTION("upper endpoint certificate") {
    BisectionConfig cfg;
    JointPolicy uniform = JointPolicy::uniform(2, 2, 2);
    // at a small multiplier the limit has g > 0: the check must fire
    CHECK_THROWS_MATCHES(
        detail::verify_upper_endpoint(inst, cfg, 0.1, uniform), SolverError,
        Catch::Matchers::Predicate<SolverError>([](auto& e) {
          return e.code() == ErrorCode::BracketFailure;
        }));
    CHECK_NOTHROW(
        detail::verify_upper_endpoint(inst, cfg, lambda_max(inst), uniform));
  }
}

TEST_CASE("g at the inner limit is monotone in the multiplier") {
  SECTION("bracketing values on the coordination game") {
    auto inst = validate_instance(ghn_instance());
    BisectionConfig cfg;
    auto [g1, g2] = g_monotonicity_check(inst, 0.2, 1.0, cfg);
    CHECK(g1 > 0.0);
    CHECK(g2 < 0.0);
  }
  SECTION("equal multipliers give equal values") {
    auto inst = validate_instance(ghn_instance());
    BisectionConfig cfg;
    auto [g1, g2] = g_monotonicity_check(inst, 0.7, 0.7, cfg);
    CHECK(g1 == g2);
  }
  SECTION("sweep on a random instance") {
    auto inst =
        validate_instance(testsupport::random_instance(3, 3, 3, 3, true));
    NormalizeResult norm = normalize_costs(inst);
    BisectionConfig cfg;
    double hi = lambda_max(norm.instance);
    double prev = std::numeric_limits<double>::infinity();
    for (double frac : {0.2, 0.4, 0.6, 0.8, 1.0}) {
      JointPolicy uniform = JointPolicy::uniform(3, 3, 3);
      BpgOutcome out = solve_for_lambda(norm.instance, frac * hi, cfg, uniform);
      CHECK(out.final_g <= prev + 1e-8);
      prev = out.final_g;
    }
  }
}

TEST_CASE("full_solve phases") {
  SECTION("active constraint on the coordination game") {
    SolveReport report = full_solve(ghn_instance());
    CHECK(report.phase == SolvePhase::Active);
    CHECK(report.value == Catch::Approx(0.18929).margin(1e-4));
    CHECK(report.lambda == Catch::Approx(0.39166).margin(1e-4));
  }
  SECTION("degenerate constant costs") {
    ProblemInstance inst = ghn_instance();
    for (double& c : inst.cost.flat()) c = 0.0;
    SolveReport report = full_solve(inst);
    CHECK(report.phase == SolvePhase::Degenerate);
    CHECK(report.value == 0.0);
    CHECK(report.policy.at(0, 0, 0) == 0.25);

    for (double& c : inst.cost.flat()) c = 7.0;
    SolveReport shifted = full_solve(inst);
    CHECK(shifted.phase == SolvePhase::Degenerate);
    CHECK(shifted.value == Catch::Approx(7.0).margin(1e-15));
  }
  SECTION("attainable structure short-circuits to the minimal cost") {
    ProblemInstance inst;
    inst.num_a = inst.num_b = inst.num_s = 2;
    inst.prior = {0.5, 0.5};
    inst.cost = Tensor3(2, 2, 2, 0.0);
    inst.cost.at(1, 0, 1) = 1.0;
    inst.cost.at(1, 1, 0) = 1.0;
    SolveReport report = full_solve(inst);
    CHECK(report.phase == SolvePhase::Attainable);
    CHECK(report.value == 0.0);
    CHECK(report.lambda == 0.0);
    CHECK(report.g_val <= 1e-9);
  }
  SECTION("values are reported in the original cost scale") {
    // shift the game by +5 in state 0 and +2 in state 1
    ProblemInstance inst = ghn_instance();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        inst.cost.at(0, a, b) += 5.0;
        inst.cost.at(1, a, b) += 2.0;
      }
    SolveReport report = full_solve(inst);
    CHECK(report.phase == SolvePhase::Active);
    CHECK(report.value == Catch::Approx(0.18929 + 3.5).margin(1e-4));
    // lambda refers to the shifted-to-zero costs and is unchanged
    CHECK(report.lambda == Catch::Approx(0.39166).margin(1e-4));
  }
}

TEST_CASE("warm and cold starts agree at the reported solution") {
  auto raw = testsupport::random_instance(21, 3, 3, 2, true);
  BisectionConfig warm_cfg;
  BisectionConfig cold_cfg;
  cold_cfg.warm_start = false;
  SolveReport warm = full_solve(raw, warm_cfg);
  SolveReport cold = full_solve(raw, cold_cfg);
  CHECK(warm.phase == cold.phase);
  CHECK(warm.lambda == Catch::Approx(cold.lambda).margin(warm_cfg.eps_b));
  // identical bisection paths leave only inner-tolerance differences
  CHECK(l2_distance(warm.policy.tensor().flat(),
                    cold.policy.tensor().flat()) <= 10.0 * warm_cfg.eps_f);
}

TEST_CASE("solve reports are deterministic") {
  auto raw = testsupport::random_instance(33, 3, 4, 2, true);
  SolveReport a = full_solve(raw);
  SolveReport b = full_solve(raw);
  CHECK(a.policy.tensor() == b.policy.tensor());
  CHECK(a.value == b.value);
  CHECK(a.lambda == b.lambda);
  CHECK(a.outer_iterations == b.outer_iterations);
  CHECK(a.inner_iterations_total == b.inner_iterations_total);
}
