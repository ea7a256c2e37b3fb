#pragma once
#include <cstddef>
#include <optional>
#include <vector>

#include "lobfluid/model.hpp"

namespace lobfluid {

// Time derivative of the fluid limit at `state`:
//   x_1' = lambda_b - (beta+alpha) x_1 - gamma min(x_1, y_1)
//   x_k' = alpha x_{k-1} - (beta+alpha) x_k - gamma min(x_k, y_k)
//   y_k' = alpha y_{k+1} - (beta+alpha) y_k - gamma min(x_k, y_k)
//   y_N' = lambda_s - (beta+alpha) y_N - gamma min(x_N, y_N)
FluidState rhs(const FluidState& state, const ModelParams& params);

// Sup-norm of rhs(state).
double rhs_norm(const FluidState& state, const ModelParams& params);

struct IntegratorOptions {
  double abs_tol{1e-9};
  double rel_tol{1e-9};
  // When set, steps are clipped so the solution is recorded exactly at
  // tau = 0, dt, 2dt, ... (plus tau_max). Otherwise every accepted step is
  // recorded.
  std::optional<double> output_dt;
  double min_step{1e-14};
  std::size_t max_steps{50'000'000};
};

struct OdeSolution {
  std::vector<double> times;
  std::vector<FluidState> states;
  double abs_tol{0.0};
  double rel_tol{0.0};
  std::size_t accepted_steps{0};
  std::size_t rejected_steps{0};
  // Sum of accepted local error estimates (sup-norm); a crude global bound.
  double error_estimate{0.0};

  const FluidState& back() const { return states.back(); }
};

// Dormand-Prince 5(4) with FSAL and an elementary step-size controller.
// Components within abs_tol below zero are clamped to 0; anything more
// negative throws NegativeState. Throws StepUnderflow if the step size
// collapses below min_step.
OdeSolution integrate(const FluidState& initial, const ModelParams& params, double tau_max,
                      const IntegratorOptions& options = {});

enum class RelaxStatus { Converged, BudgetExhausted };

struct RelaxResult {
  FluidState state;
  double tau{0.0};
  double final_rhs_norm{0.0};
  RelaxStatus status{RelaxStatus::BudgetExhausted};
};

// Integrates until the sup-norm of rhs drops below rhs_tol or tau_budget is
// used up, whichever comes first. Integrator tolerances are capped at
// rhs_tol / 10.
RelaxResult integrate_to_rest(const FluidState& initial, const ModelParams& params, double tau_budget,
                              double rhs_tol = 1e-10, const IntegratorOptions& options = {});

// Per-level outcome of the comparison check.
struct ComparisonLevel {
  bool x_ordered{true}; // x_A(tau) <= x_B(tau) + tol on the whole grid
  bool y_ordered{true}; // y_A(tau) >= y_B(tau) - tol on the whole grid
  double worst_x{0.0};  // max of x_A - x_B over the grid
  double worst_y{0.0};  // max of y_B - y_A over the grid
};

struct ComparisonReport {
  std::vector<ComparisonLevel> levels;
  std::size_t grid_points{0};

  bool holds() const noexcept;
};

// Integrates both initial conditions on a shared grid and checks that the
// ordering x_A <= x_B, y_A >= y_B (all levels) persists. Throws
// HypothesisViolated if it does not hold at tau = 0.
ComparisonReport check_comparison(const FluidState& a, const FluidState& b, const ModelParams& params, double tau_max,
                                  double tol, double grid_dt = 0.0, const IntegratorOptions& options = {});

// Whether every x component is nondecreasing and every y component
// nonincreasing along the recorded solution (within tol), and the mirror.
struct MonotonicityReport {
  bool x_nondecreasing{true};
  bool x_nonincreasing{true};
  bool y_nondecreasing{true};
  bool y_nonincreasing{true};
};

MonotonicityReport monotonicity(const OdeSolution& solution, double tol);

// The bracketing initial conditions used to sandwich an arbitrary solution:
// lower = (0, max(lambda_s/(alpha+beta), max_i y_i)),
// upper = (max(lambda_b/(alpha+beta), max_i x_i), 0).
FluidState lower_bracket(const FluidState& reference, const ModelParams& params);
FluidState upper_bracket(const FluidState& reference, const ModelParams& params);

} // namespace lobfluid
