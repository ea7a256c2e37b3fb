#pragma once
#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "lobfluid/model.hpp"

namespace lobfluid {

enum class Regime {
  BuyersDominate,  // (i): x*_i > y*_i at every level
  SellersDominate, // (ii): x*_i < y*_i at every level
  Crossing,        // (iii): single interior sign change
};

std::string_view regime_label(Regime r); // "i", "ii", "iii"

enum class SolverKind { Shooting, Recursive, RecursiveLagged, Relaxation };

std::string_view to_string(SolverKind s);

struct FixedPoint {
  std::vector<double> x_star;
  std::vector<double> y_star;
  std::size_t crossing{0}; // number of levels with x* > y* (counted from level 1)
  Regime regime{Regime::Crossing};
  std::size_t ties{0};
  double trade_volume{0.0};
  SolverKind solver{SolverKind::Shooting};
  double residual{0.0};      // sup-norm defect over all 2N stationarity equations
  std::size_t iterations{0}; // bisection steps / recursion sweeps
  bool monotone_iterates{true};

  FluidState as_state() const { return {x_star, y_star}; }
};

// Sup-norm of the 2N stationarity defects
//   lambda_b - (a+b) x_1 - g min(x_1,y_1), a x_{k-1} - (a+b) x_k - g min(x_k,y_k), ...
double fixed_point_residual(const FluidState& point, const ModelParams& params);

// gamma * sum_k min(x_k, y_k)
double trade_volume(const FluidState& point, const ModelParams& params);

struct RegimeInfo {
  std::size_t crossing{0};
  Regime regime{Regime::Crossing};
  std::size_t ties{0}; // levels with x* == y*; counted on neither side
};

// Throws NonMonotoneInput unless x* is strictly decreasing, y* strictly
// increasing and x* - y* changes sign at most once.
// Levels with |x* - y*| <= tie_tol * max(x*, y*) are ties.
RegimeInfo classify_regime(const FluidState& point, double tie_tol = 1e-9);

// --- Broken-line construction --------------------------------------------

struct BrokenLinePoint {
  double v{0.0};
  double w{0.0};
  std::size_t level{0}; // 0-based
};

// Maps a point satisfying the level-k relations to level k+1:
//   w_{k+1} = ((a+b) w_k + g min(v_k, w_k)) / a
//   v_{k+1} solves (a+b) u + g min(u, w_{k+1}) = a v_k
BrokenLinePoint step_map(const BrokenLinePoint& point, const ModelParams& params);

// The point on L_1 with seller coordinate theta: the vertical ray above
// the diagonal for theta >= lambda_b/(a+b+g), the segment down to
// (lambda_b/(a+b), 0) below it.
BrokenLinePoint first_line_point(double theta, const ModelParams& params);

// (v_k, w_k), k = 1..N, obtained from first_line_point(theta).
std::vector<BrokenLinePoint> shoot_path(double theta, const ModelParams& params);

// (a+b) w_N + g min(v_N, w_N) - lambda_s along shoot_path(theta).
double shooting_defect(double theta, const ModelParams& params);

enum class MapCase {
  BothBuyerSide = 1,  // v_k > w_k, v_{k+1} > w_{k+1}
  Crossing = 2,       // v_k > w_k, v_{k+1} < w_{k+1}
  BothSellerSide = 3, // v_k < w_k, v_{k+1} < w_{k+1}
};

struct JacobianReport {
  MapCase map_case{MapCase::Crossing};
  double input_slope{0.0};    // dw_k/dv_k of the probe direction
  double output_slope{0.0};   // finite-difference dw_{k+1}/dv_{k+1}
  double numeric_factor{0.0}; // output_slope / input_slope
  // Case factor A_{k+1}(a+b+g)/a^2, (a+b+g)^2/a^2 or B_k(a+b+g)/a^2 with
  // A_{k+1} = a+b+g w_{k+1}/v_{k+1}, B_k = a+b+g v_k/w_k. Cases 1 and 3 are
  // exact along rays through the origin (the map is positively homogeneous).
  double case_factor{0.0};
  // Slope transfer of the linear piece for the actual probe direction.
  double exact_factor{0.0};
  double rel_diff{0.0};       // |numeric - case| / |case|
  double rel_diff_exact{0.0}; // |numeric - exact| / |exact|
};

// Central finite differences of step_map along `direction` (dv, dw);
// defaults to the radial direction (v, w). Throws OnKink if the probe
// straddles v = w at either level.
JacobianReport map_jacobian_check(const BrokenLinePoint& point, const ModelParams& params, double h,
                                  std::optional<std::pair<double, double>> direction = std::nullopt);

struct SlopeBoundReport {
  std::size_t segments_checked{0};
  double flattest_slope{-std::numeric_limits<double>::infinity()}; // max dw_N/dv_N seen
  double bound{0.0};                                                // -g/(a+b)
  bool holds{true};
};

// Samples the sloped part of L_1, pushes it to L_N and measures secant
// slopes of L_N above the diagonal.
SlopeBoundReport check_slope_bound(const ModelParams& params, std::size_t samples = 2000);

// --- Solvers ---------------------------------------------------------------

// Intersects L_N with the terminal locus by bisection in theta.
// Throws BracketFailure if no sign change can be found.
FixedPoint solve_shooting(const ModelParams& params, double tol = 1e-12);

enum class RecursionVariant {
  // Each scalar equation is solved in its own unknown with the other
  // side's latest iterate frozen; iterates are monotone.
  Monotone,
  // min terms lagged one sweep (x side uses both old iterates, y side the
  // new x and old y). Jacobi-like; diverges when gamma > alpha + beta.
  Lagged,
};

struct RecursiveOptions {
  double tol{1e-13};
  std::size_t max_iter{1'000'000};
  RecursionVariant variant{RecursionVariant::Monotone};
  std::vector<FluidState>* trace{nullptr}; // iterates x^(0), x^(1), ... when set
};

// Throws NoConvergence when max_iter is hit or the iterates blow up.
FixedPoint solve_recursive(const ModelParams& params, const RecursiveOptions& options = {});

// Integrates the fluid ODE from `initial` until the vector field vanishes
// (sup-norm < rhs_tol). Throws NoConvergence if tau_budget runs out.
FixedPoint solve_relaxation(const ModelParams& params, const FluidState& initial, double tau_budget = 1e5,
                            double rhs_tol = 1e-12);

} // namespace lobfluid
