#include "lobfluid/fluid_ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lobfluid/error.hpp"

namespace lobfluid {

FluidState rhs(const FluidState& state, const ModelParams& p) {
  const std::size_t n = state.size();
  const double out_rate = p.beta + p.alpha;
  FluidState d = FluidState::zeros(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double trade = p.gamma * std::min(state.x[k], state.y[k]);
    const double x_in = (k == 0) ? p.lambda_b : p.alpha * state.x[k - 1];
    const double y_in = (k + 1 == n) ? p.lambda_s : p.alpha * state.y[k + 1];
    d.x[k] = x_in - out_rate * state.x[k] - trade;
    d.y[k] = y_in - out_rate * state.y[k] - trade;
  }
  return d;
}

double rhs_norm(const FluidState& state, const ModelParams& params) {
  const FluidState d = rhs(state, params);
  double m = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) m = std::max({m, std::abs(d.x[k]), std::abs(d.y[k])});
  return m;
}

namespace {

// Flat 2N layout: x_1..x_N, y_1..y_N.
using Vec = std::vector<double>;

Vec flatten(const FluidState& s) {
  Vec v(s.x);
  v.insert(v.end(), s.y.begin(), s.y.end());
  return v;
}

FluidState unflatten(const Vec& v) {
  const std::size_t n = v.size() / 2;
  return {Vec(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)), Vec(v.begin() + static_cast<std::ptrdiff_t>(n), v.end())};
}

void eval(const Vec& u, const ModelParams& p, Vec& du) {
  const std::size_t n = u.size() / 2;
  const double out_rate = p.beta + p.alpha;
  for (std::size_t k = 0; k < n; ++k) {
    const double xk = u[k];
    const double yk = u[n + k];
    const double trade = p.gamma * std::min(xk, yk);
    const double x_in = (k == 0) ? p.lambda_b : p.alpha * u[k - 1];
    const double y_in = (k + 1 == n) ? p.lambda_s : p.alpha * u[n + k + 1];
    du[k] = x_in - out_rate * xk - trade;
    du[n + k] = y_in - out_rate * yk - trade;
  }
}

double sup_norm(const Vec& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b_hat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

class Stepper {
public:
  Stepper(const ModelParams& p, Vec u0, const IntegratorOptions& opt)
      : p_(p), opt_(opt), u_(std::move(u0)), dim_(u_.size()), k1_(dim_), k2_(dim_), k3_(dim_), k4_(dim_), k5_(dim_),
        k6_(dim_), k7_(dim_), tmp_(dim_), next_(dim_), err_(dim_) {
    eval(u_, p_, k1_);
    const double scale_u = std::max(sup_norm(u_), 1e-3);
    const double scale_f = std::max(sup_norm(k1_), 1e-6);
    h_ = std::clamp(0.01 * scale_u / scale_f, 1e-6, 1.0);
  }

  // Advances by at most h_max. Returns the step actually taken.
  double advance(double h_max) {
    for (;;) {
      const double h = std::min(h_, h_max);
      if (h < opt_.min_step)
        throw StepUnderflow("step size " + std::to_string(h) + " fell below min_step at tau=" + std::to_string(t_));
      attempt(h);
      double err = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        const double sc = opt_.abs_tol + opt_.rel_tol * std::max(std::abs(u_[i]), std::abs(next_[i]));
        err = std::max(err, std::abs(err_[i]) / sc);
      }
      const double fac = (err == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (err <= 1.0) {
        error_estimate_ += sup_norm(err_);
        accept(h);
        // a grid-clipped step does not shrink the controller's proposal
        h_ = (h < h_) ? std::max(h_, h * fac) : h * fac;
        ++accepted_;
        return h;
      }
      h_ = h * std::max(fac, 0.1);
      ++rejected_;
    }
  }

  double t() const noexcept { return t_; }
  const Vec& u() const noexcept { return u_; }
  double rhs_sup() const { return sup_norm(k1_); }
  std::size_t accepted() const noexcept { return accepted_; }
  std::size_t rejected() const noexcept { return rejected_; }
  double error_estimate() const noexcept { return error_estimate_; }

private:
  void attempt(double h) {
    for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = u_[i] + h * a21 * k1_[i];
    eval(tmp_, p_, k2_);
    for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = u_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    eval(tmp_, p_, k3_);
    for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = u_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    eval(tmp_, p_, k4_);
    for (std::size_t i = 0; i < dim_; ++i)
      tmp_[i] = u_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    eval(tmp_, p_, k5_);
    for (std::size_t i = 0; i < dim_; ++i)
      tmp_[i] = u_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
    eval(tmp_, p_, k6_);
    for (std::size_t i = 0; i < dim_; ++i)
      next_[i] = u_[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
    eval(next_, p_, k7_);
    for (std::size_t i = 0; i < dim_; ++i)
      err_[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
  }

  void accept(double h) {
    bool clamped = false;
    for (std::size_t i = 0; i < dim_; ++i) {
      if (next_[i] >= 0.0) continue;
      if (next_[i] < -opt_.abs_tol)
        throw NegativeState("component " + std::to_string(i) + " reached " + std::to_string(next_[i]) +
                            " at tau=" + std::to_string(t_ + h));
      next_[i] = 0.0;
      clamped = true;
    }
    std::swap(u_, next_);
    if (clamped)
      eval(u_, p_, k1_);
    else
      std::swap(k1_, k7_); // FSAL
    t_ += h;
  }

  const ModelParams& p_;
  IntegratorOptions opt_;
  Vec u_;
  std::size_t dim_;
  Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, next_, err_;
  double t_{0.0};
  double h_{0.0};
  std::size_t accepted_{0};
  std::size_t rejected_{0};
  double error_estimate_{0.0};
};

void check_options(const IntegratorOptions& opt) {
  if (!(opt.abs_tol > 0.0) || !(opt.rel_tol >= 0.0))
    throw ParamError(ParamErrorCode::BadArgument, "tol", "abs_tol must be > 0 and rel_tol >= 0");
  if (opt.output_dt && !(*opt.output_dt > 0.0))
    throw ParamError(ParamErrorCode::BadArgument, "output_dt", "must be > 0");
}

} // namespace

OdeSolution integrate(const FluidState& initial, const ModelParams& params, double tau_max,
                      const IntegratorOptions& options) {
  check_state(initial, params);
  check_options(options);
  if (!(tau_max >= 0.0) || !std::isfinite(tau_max))
    throw ParamError(ParamErrorCode::BadArgument, "tau_max", "must be finite and >= 0");

  OdeSolution sol;
  sol.abs_tol = options.abs_tol;
  sol.rel_tol = options.rel_tol;
  sol.times.push_back(0.0);
  sol.states.push_back(initial);
  if (tau_max == 0.0) return sol;

  Stepper stepper(params, flatten(initial), options);
  const double slack = 1e-12 * std::max(1.0, tau_max);
  std::size_t grid_index = 1;
  auto next_target = [&]() {
    if (!options.output_dt) return tau_max;
    const double t = static_cast<double>(grid_index) * *options.output_dt;
    return t > tau_max - slack ? tau_max : t;
  };

  while (stepper.t() < tau_max) {
    if (stepper.accepted() + stepper.rejected() >= options.max_steps)
      throw StepUnderflow("step budget exhausted at tau=" + std::to_string(stepper.t()));
    const double target = next_target();
    stepper.advance(target - stepper.t());
    const bool on_target = std::abs(stepper.t() - target) <= slack;
    if (!options.output_dt || on_target) {
      sol.times.push_back(on_target ? target : stepper.t());
      sol.states.push_back(unflatten(stepper.u()));
    }
    if (on_target) {
      if (target == tau_max) break;
      ++grid_index;
    }
  }
  sol.accepted_steps = stepper.accepted();
  sol.rejected_steps = stepper.rejected();
  sol.error_estimate = stepper.error_estimate();
  return sol;
}

RelaxResult integrate_to_rest(const FluidState& initial, const ModelParams& params, double tau_budget, double rhs_tol,
                              const IntegratorOptions& options) {
  check_state(initial, params);
  check_options(options);
  // Near rest the controller lets steps grow to the stability edge, where
  // |rhs| stalls at roughly the tolerance. Keep the tolerance below rhs_tol.
  IntegratorOptions opt = options;
  opt.abs_tol = std::min(opt.abs_tol, 0.1 * rhs_tol);
  opt.rel_tol = std::min(opt.rel_tol, 0.1 * rhs_tol);
  Stepper stepper(params, flatten(initial), opt);
  RelaxResult out;
  while (stepper.rhs_sup() >= rhs_tol && stepper.t() < tau_budget) {
    if (stepper.accepted() + stepper.rejected() >= opt.max_steps) break;
    stepper.advance(tau_budget - stepper.t());
  }
  out.state = unflatten(stepper.u());
  out.tau = stepper.t();
  out.final_rhs_norm = stepper.rhs_sup();
  out.status = out.final_rhs_norm < rhs_tol ? RelaxStatus::Converged : RelaxStatus::BudgetExhausted;
  return out;
}

bool ComparisonReport::holds() const noexcept {
  return std::all_of(levels.begin(), levels.end(), [](const ComparisonLevel& l) { return l.x_ordered && l.y_ordered; });
}

ComparisonReport check_comparison(const FluidState& a, const FluidState& b, const ModelParams& params, double tau_max,
                                  double tol, double grid_dt, const IntegratorOptions& options) {
  check_state(a, params);
  check_state(b, params);
  const std::size_t n = params.n_levels;
  for (std::size_t k = 0; k < n; ++k)
    if (!(a.x[k] <= b.x[k]) || !(a.y[k] >= b.y[k]))
      throw HypothesisViolated("initial ordering x_A <= x_B, y_A >= y_B fails at level " + std::to_string(k + 1));

  IntegratorOptions opt = options;
  opt.output_dt = grid_dt > 0.0 ? grid_dt : std::max(tau_max / 1000.0, 1e-6);
  const OdeSolution sa = integrate(a, params, tau_max, opt);
  const OdeSolution sb = integrate(b, params, tau_max, opt);

  ComparisonReport rep;
  rep.levels.resize(n);
  rep.grid_points = sa.times.size();
  for (auto& lvl : rep.levels) lvl.worst_x = lvl.worst_y = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < sa.times.size(); ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      auto& lvl = rep.levels[k];
      const double dx = sa.states[j].x[k] - sb.states[j].x[k];
      const double dy = sb.states[j].y[k] - sa.states[j].y[k];
      lvl.worst_x = std::max(lvl.worst_x, dx);
      lvl.worst_y = std::max(lvl.worst_y, dy);
      if (dx > tol) lvl.x_ordered = false;
      if (dy > tol) lvl.y_ordered = false;
    }
  }
  return rep;
}

MonotonicityReport monotonicity(const OdeSolution& solution, double tol) {
  MonotonicityReport r;
  for (std::size_t j = 1; j < solution.states.size(); ++j) {
    const auto& prev = solution.states[j - 1];
    const auto& cur = solution.states[j];
    for (std::size_t k = 0; k < cur.size(); ++k) {
      if (cur.x[k] < prev.x[k] - tol) r.x_nondecreasing = false;
      if (cur.x[k] > prev.x[k] + tol) r.x_nonincreasing = false;
      if (cur.y[k] < prev.y[k] - tol) r.y_nondecreasing = false;
      if (cur.y[k] > prev.y[k] + tol) r.y_nonincreasing = false;
    }
  }
  return r;
}

FluidState lower_bracket(const FluidState& reference, const ModelParams& p) {
  const double top = std::max(p.lambda_s / (p.alpha + p.beta), *std::max_element(reference.y.begin(), reference.y.end()));
  FluidState s = FluidState::zeros(p.n_levels);
  std::fill(s.y.begin(), s.y.end(), top);
  return s;
}

FluidState upper_bracket(const FluidState& reference, const ModelParams& p) {
  const double top = std::max(p.lambda_b / (p.alpha + p.beta), *std::max_element(reference.x.begin(), reference.x.end()));
  FluidState s = FluidState::zeros(p.n_levels);
  std::fill(s.x.begin(), s.x.end(), top);
  return s;
}

} // namespace lobfluid
