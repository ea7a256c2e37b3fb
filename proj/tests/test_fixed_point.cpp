#include <doctest.h>

#include <cmath>
#include <random>

#include "lobfluid/error.hpp"
#include "lobfluid/fixed_point.hpp"
#include "oracle.hpp"

using namespace lobfluid;

namespace {

ModelParams make(std::size_t n, double lb, double ls, double a, double b, double g) {
  return validate_params(ModelParams{n, lb, ls, a, b, g, std::nullopt});
}

ModelParams random_params(std::mt19937_64& gen, std::size_t max_n) {
  std::uniform_real_distribution<double> lg(std::log(0.1), std::log(10.0));
  std::uniform_int_distribution<std::size_t> nd(1, max_n);
  const std::size_t n = nd(gen);
  return make(n, std::exp(lg(gen)), std::exp(lg(gen)), std::exp(lg(gen)), std::exp(lg(gen)), std::exp(lg(gen)));
}

void check_point(const FixedPoint& fp, const std::vector<double>& x, const std::vector<double>& y, double tol) {
  REQUIRE(fp.x_star.size() == x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    CHECK(std::fabs(fp.x_star[k] - x[k]) < tol);
    CHECK(std::fabs(fp.y_star[k] - y[k]) < tol);
  }
}

} // namespace

TEST_CASE("oracle reproduces the hand-solved points") {
  const auto r1 = oracle::fixed_point(make(1, 2, 1, 1, 1, 1));
  CHECK(r1.point.x[0] == doctest::Approx(5.0 / 6.0));
  CHECK(r1.point.y[0] == doctest::Approx(1.0 / 3.0));
  const auto r2 = oracle::fixed_point(make(2, 1, 1, 1, 1, 1));
  CHECK(r2.point.x[0] == doctest::Approx(3.0 / 7.0));
  CHECK(r2.point.y[1] == doctest::Approx(3.0 / 7.0));
}

TEST_CASE("step_map examples") {
  const auto p = make(2, 1, 1, 1, 1, 1);
  const auto a = step_map({1.0 / 3, 1.0 / 3, 0}, p);
  CHECK(a.v == doctest::Approx(1.0 / 9));
  CHECK(a.w == doctest::Approx(1.0));
  CHECK(a.level == 1);
  const auto b = step_map({3.0 / 7, 1.0 / 7, 0}, p);
  CHECK(b.v == doctest::Approx(1.0 / 7));
  CHECK(b.w == doctest::Approx(3.0 / 7));
  const auto z = step_map({0.0, 0.0, 0}, p);
  CHECK(z.v == 0.0);
  CHECK(z.w == 0.0);
  CHECK_THROWS_AS(step_map({-1.0, 0.0, 0}, p), ParamError);
}

TEST_CASE("first_line_point traverses the ray and the segment") {
  const auto p = make(2, 1, 1, 1, 1, 1);
  const auto corner = first_line_point(1.0 / 3, p);
  CHECK(corner.v == doctest::Approx(1.0 / 3));
  const auto up = first_line_point(5.0, p);
  CHECK(up.v == doctest::Approx(1.0 / 3));
  CHECK(up.w == 5.0);
  const auto bottom = first_line_point(0.0, p);
  CHECK(bottom.v == doctest::Approx(0.5));
  CHECK(bottom.w == 0.0);
  CHECK(shooting_defect(0.0, p) == doctest::Approx(-1.0));
}

TEST_CASE("Jacobian check: middle case factor") {
  const auto p = make(2, 1, 1, 1, 1, 1);
  const auto rep = map_jacobian_check({3.0 / 7, 1.0 / 7, 0}, p, 1e-7);
  CHECK(rep.map_case == MapCase::Crossing);
  CHECK(rep.case_factor == doctest::Approx(9.0));
  CHECK(rep.rel_diff < 1e-6);
  // The middle factor does not depend on the probe direction.
  const auto tilted = map_jacobian_check({3.0 / 7, 1.0 / 7, 0}, p, 1e-7, std::pair{1.0, -2.0});
  CHECK(tilted.rel_diff < 1e-6);
}

TEST_CASE("Jacobian check: outer cases") {
  const auto p = make(2, 1, 1, 1, 1, 1);
  const auto c1 = map_jacobian_check({1.0, 0.1, 0}, p, 1e-7);
  CHECK(c1.map_case == MapCase::BothBuyerSide);
  CHECK(c1.rel_diff < 1e-6);
  const auto c3 = map_jacobian_check({0.1, 1.0, 0}, p, 1e-7);
  CHECK(c3.map_case == MapCase::BothSellerSide);
  CHECK(c3.rel_diff < 1e-6);

  // Off the radial direction only the exact slope transfer applies.
  const auto q = make(3, 1.3, 0.7, 0.8, 0.4, 2.2);
  for (const auto dir : {std::pair{1.0, 0.3}, std::pair{1.0, -0.7}, std::pair{-0.4, 1.0}}) {
    const auto a = map_jacobian_check({2.0, 0.05, 0}, q, 1e-7, dir);
    CHECK(a.map_case == MapCase::BothBuyerSide);
    CHECK(a.rel_diff_exact < 1e-6);
    const auto b = map_jacobian_check({0.1, 1.0, 0}, q, 1e-7, dir);
    CHECK(b.map_case == MapCase::BothSellerSide);
    CHECK(b.rel_diff_exact < 1e-6);
  }
}

TEST_CASE("Jacobian check rejects kinks") {
  const auto p = make(2, 1, 1, 1, 1, 1);
  CHECK_THROWS_AS(map_jacobian_check({1.0 / 3, 1.0 / 3, 0}, p, 1e-7), OnKink);
  CHECK_THROWS_AS(map_jacobian_check({1.0, 0.1, 0}, p, 0.0), ParamError);
}

TEST_CASE("slope bound on L_N") {
  std::mt19937_64 gen(17);
  for (int t = 0; t < 40; ++t) {
    auto p = random_params(gen, 8);
    if (p.n_levels < 2) p.n_levels = 2;
    const auto rep = check_slope_bound(p, 500);
    CHECK(rep.holds);
    CHECK(rep.segments_checked > 0);
    CHECK(rep.flattest_slope < rep.bound);
  }
}

TEST_CASE("solvers reproduce the hand-solved points") {
  for (auto solve : {+[](const ModelParams& p) { return solve_shooting(p); },
                     +[](const ModelParams& p) { return solve_recursive(p); }}) {
    const auto a = solve(make(1, 1, 1, 1, 1, 1));
    check_point(a, {1.0 / 3}, {1.0 / 3}, 1e-10);
    CHECK(a.residual < 1e-10);
    const auto b = solve(make(1, 2, 1, 1, 1, 1));
    check_point(b, {5.0 / 6}, {1.0 / 3}, 1e-10);
    const auto c = solve(make(2, 1, 1, 1, 1, 1));
    check_point(c, {3.0 / 7, 1.0 / 7}, {1.0 / 7, 3.0 / 7}, 1e-10);
  }
  const auto r = solve_relaxation(make(2, 1, 1, 1, 1, 1), FluidState::zeros(2));
  check_point(r, {3.0 / 7, 1.0 / 7}, {1.0 / 7, 3.0 / 7}, 1e-10);
  CHECK(r.solver == SolverKind::Relaxation);
}

TEST_CASE("solvers agree with each other and with the linear-system oracle") {
  std::mt19937_64 gen(2718);
  for (int t = 0; t < 150; ++t) {
    const auto p = random_params(gen, 10);
    const auto ref = oracle::fixed_point(p);
    const auto shot = solve_shooting(p);
    std::vector<FluidState> trace;
    RecursiveOptions ro;
    ro.trace = &trace;
    const auto rec = solve_recursive(p, ro);
    CHECK(sup_distance(shot.as_state(), ref.point) < 1e-8);
    CHECK(sup_distance(rec.as_state(), ref.point) < 1e-8);
    CHECK(sup_distance(shot.as_state(), rec.as_state()) < 1e-8);
    CHECK(shot.crossing == ref.ell);
    CHECK(rec.crossing == ref.ell);
    CHECK(shot.residual < 1e-8);
    CHECK(rec.residual < 1e-8);
    CHECK(rec.monotone_iterates);
    // Iterates: x grows, y shrinks.
    for (std::size_t i = 1; i < trace.size(); ++i)
      for (std::size_t k = 0; k < p.n_levels; ++k) {
        CHECK(trace[i].x[k] >= trace[i - 1].x[k]);
        CHECK(trace[i].y[k] <= trace[i - 1].y[k]);
      }
  }
}

TEST_CASE("recursion starts from the decoupled initial iterate") {
  const auto p = make(3, 1.5, 0.5, 1.0, 0.5, 2.0);
  std::vector<FluidState> trace;
  RecursiveOptions ro;
  ro.trace = &trace;
  solve_recursive(p, ro);
  REQUIRE(!trace.empty());
  const double abg = 3.5, ab = 1.5;
  CHECK(trace[0].x[0] == doctest::Approx(1.5 / abg));
  CHECK(trace[0].x[1] == doctest::Approx(1.5 / abg / abg));
  CHECK(trace[0].x[2] == doctest::Approx(1.5 / abg / abg / abg));
  CHECK(trace[0].y[2] == doctest::Approx(0.5 / ab));
  CHECK(trace[0].y[1] == doctest::Approx(0.5 / ab / ab));
  CHECK(trace[0].y[0] == doctest::Approx(0.5 / ab / ab / ab));
}

TEST_CASE("lagged recursion: converges when trading is slow, diverges when it is fast") {
  RecursiveOptions lag;
  lag.variant = RecursionVariant::Lagged;
  const auto slow = make(3, 1.0, 1.0, 1.0, 1.0, 0.5);
  const auto fp = solve_recursive(slow, lag);
  CHECK(fp.solver == SolverKind::RecursiveLagged);
  CHECK(sup_distance(fp.as_state(), oracle::fixed_point(slow).point) < 1e-8);
  lag.max_iter = 10000;
  CHECK_THROWS_AS(solve_recursive(make(3, 1.0, 1.0, 1.0, 1.0, 5.0), lag), NoConvergence);
}

TEST_CASE("recursion reports NoConvergence when the sweep budget is too small") {
  RecursiveOptions ro;
  ro.max_iter = 1;
  CHECK_THROWS_AS(solve_recursive(make(4, 1.0, 1.0, 1.0, 1.0, 1.0), ro), NoConvergence);
}

TEST_CASE("classify_regime") {
  const auto a = classify_regime(FluidState{{5.0 / 6}, {1.0 / 3}});
  CHECK(a.crossing == 1);
  CHECK(a.regime == Regime::BuyersDominate);
  const auto b = classify_regime(FluidState{{3.0 / 7, 1.0 / 7}, {1.0 / 7, 3.0 / 7}});
  CHECK(b.crossing == 1);
  CHECK(b.regime == Regime::Crossing);
  const auto c = solve_shooting(make(2, 1e-3, 1, 1, 1, 1));
  CHECK(c.crossing == 0);
  CHECK(c.regime == Regime::SellersDominate);
  CHECK(regime_label(c.regime) == "ii");

  const auto tie = classify_regime(FluidState{{1.0 / 3}, {1.0 / 3}});
  CHECK(tie.ties == 1);
  CHECK(tie.crossing == 0);
  const auto near = classify_regime(FluidState{{1.0 / 3 + 1e-15}, {1.0 / 3}});
  CHECK(near.ties == 1);
  CHECK(near.crossing == 0);
  const auto strict = classify_regime(FluidState{{1.0 / 3 + 1e-15}, {1.0 / 3}}, 0.0);
  CHECK(strict.ties == 0);
  CHECK(strict.crossing == 1);
  for (const auto& fp : {solve_shooting(make(1, 1, 1, 1, 1, 1)), solve_recursive(make(1, 1, 1, 1, 1, 1))}) {
    CHECK(fp.ties == 1);
    CHECK(fp.crossing == 0);
  }

  CHECK_THROWS_AS(classify_regime(FluidState{{0.1, 0.2}, {0.1, 0.3}}), NonMonotoneInput);
  CHECK_THROWS_AS(classify_regime(FluidState{{0.3, 0.2}, {0.3, 0.2}}), NonMonotoneInput);
}

TEST_CASE("trade_volume") {
  CHECK(trade_volume(FluidState{{3.0 / 7, 1.0 / 7}, {1.0 / 7, 3.0 / 7}}, make(2, 1, 1, 1, 1, 1)) ==
        doctest::Approx(2.0 / 7));
  CHECK(trade_volume(FluidState{{5.0 / 6}, {1.0 / 3}}, make(1, 2, 1, 1, 1, 1)) == doctest::Approx(1.0 / 3));
  CHECK(trade_volume(FluidState{{0.0, 0.0}, {1.0, 2.0}}, make(2, 1, 1, 1, 1, 3)) == 0.0);
}

TEST_CASE("regime (ii): x* solves the triangular system with min = x") {
  const auto p = make(3, 1, 20, 1, 1, 1);
  const auto fp = solve_shooting(p);
  REQUIRE(fp.crossing == 0);
  const double abg = p.alpha + p.beta + p.gamma;
  std::vector<double> x(3);
  x[0] = p.lambda_b / abg;
  for (std::size_t k = 1; k < 3; ++k) x[k] = p.alpha * x[k - 1] / abg;
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::fabs(fp.x_star[k] - x[k]) < 1e-10);
}

TEST_CASE("beta = 0 is solvable") {
  const auto p = make(4, 1.0, 2.0, 1.0, 0.0, 1.5);
  const auto a = solve_shooting(p);
  const auto b = solve_recursive(p);
  CHECK(sup_distance(a.as_state(), b.as_state()) < 1e-8);
  CHECK(sup_distance(a.as_state(), oracle::fixed_point(p).point) < 1e-8);
}

TEST_CASE("fixed_point_residual") {
  const auto p = make(2, 1, 1, 1, 1, 1);
  CHECK(fixed_point_residual(FluidState{{3.0 / 7, 1.0 / 7}, {1.0 / 7, 3.0 / 7}}, p) < 1e-15);
  CHECK(fixed_point_residual(FluidState::zeros(2), p) == doctest::Approx(1.0));
}
