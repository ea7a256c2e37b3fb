#include "lobfluid/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lobfluid/error.hpp"
#include "lobfluid/fluid_ode.hpp"

namespace lobfluid {

namespace {

// Unique root u >= 0 of out*u + g*min(u, cap) = inflow (strictly increasing
// piecewise-linear in u). cap may be +inf.
double solve_branch(double inflow, double out, double g, double cap) {
  const double u = inflow / (out + g);
  if (u <= cap) return u;
  return (inflow - g * cap) / out;
}

bool is_bad(double v) { return !std::isfinite(v); }

void fill_summary(FixedPoint& fp, const ModelParams& params) {
  const FluidState st = fp.as_state();
  fp.residual = fixed_point_residual(st, params);
  fp.trade_volume = trade_volume(st, params);
  const RegimeInfo info = classify_regime(st);
  fp.crossing = info.crossing;
  fp.regime = info.regime;
  fp.ties = info.ties;
}

} // namespace

std::string_view regime_label(Regime r) {
  switch (r) {
  case Regime::BuyersDominate: return "i";
  case Regime::SellersDominate: return "ii";
  case Regime::Crossing: return "iii";
  }
  return "?";
}

std::string_view to_string(SolverKind s) {
  switch (s) {
  case SolverKind::Shooting: return "shooting";
  case SolverKind::Recursive: return "recursive";
  case SolverKind::RecursiveLagged: return "recursive-lagged";
  case SolverKind::Relaxation: return "relaxation";
  }
  return "?";
}

double fixed_point_residual(const FluidState& point, const ModelParams& p) {
  const std::size_t n = point.size();
  const double out = p.alpha + p.beta;
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double trade = p.gamma * std::min(point.x[k], point.y[k]);
    const double x_in = (k == 0) ? p.lambda_b : p.alpha * point.x[k - 1];
    const double y_in = (k + 1 == n) ? p.lambda_s : p.alpha * point.y[k + 1];
    worst = std::max(worst, std::abs(x_in - out * point.x[k] - trade));
    worst = std::max(worst, std::abs(y_in - out * point.y[k] - trade));
  }
  return worst;
}

double trade_volume(const FluidState& point, const ModelParams& p) {
  double sum = 0.0;
  for (std::size_t k = 0; k < point.size(); ++k) sum += std::min(point.x[k], point.y[k]);
  return p.gamma * sum;
}

RegimeInfo classify_regime(const FluidState& point, double tie_tol) {
  const std::size_t n = point.size();
  for (std::size_t k = 1; k < n; ++k) {
    if (!(point.x[k] < point.x[k - 1]))
      throw NonMonotoneInput("x* is not strictly decreasing at level " + std::to_string(k + 1));
    if (!(point.y[k] > point.y[k - 1]))
      throw NonMonotoneInput("y* is not strictly increasing at level " + std::to_string(k + 1));
  }
  RegimeInfo info;
  bool seen_seller_side = false;
  for (std::size_t k = 0; k < n; ++k) {
    const double gap = point.x[k] - point.y[k];
    if (std::abs(gap) <= tie_tol * std::max(point.x[k], point.y[k])) {
      seen_seller_side = true;
      ++info.ties;
    } else if (gap > 0.0) {
      if (seen_seller_side) throw NonMonotoneInput("x* - y* changes sign more than once");
      ++info.crossing;
    } else {
      seen_seller_side = true;
    }
  }
  if (info.crossing == n)
    info.regime = Regime::BuyersDominate;
  else if (info.crossing == 0)
    info.regime = Regime::SellersDominate;
  else
    info.regime = Regime::Crossing;
  return info;
}

BrokenLinePoint step_map(const BrokenLinePoint& pt, const ModelParams& p) {
  if (!(pt.v >= 0.0) || !(pt.w >= 0.0) || is_bad(pt.v) || is_bad(pt.w))
    throw ParamError(ParamErrorCode::BadArgument, "point", "v and w must be finite and >= 0");
  const double out = p.alpha + p.beta;
  BrokenLinePoint next;
  next.level = pt.level + 1;
  next.w = (out * pt.w + p.gamma * std::min(pt.v, pt.w)) / p.alpha;
  next.v = solve_branch(p.alpha * pt.v, out, p.gamma, next.w);
  if (!(next.v >= 0.0)) throw SolverError("step_map produced a negative buyer coordinate");
  return next;
}

BrokenLinePoint first_line_point(double theta, const ModelParams& p) {
  const double out = p.alpha + p.beta;
  const double corner = p.lambda_b / (out + p.gamma);
  BrokenLinePoint pt;
  pt.w = theta;
  pt.v = theta >= corner ? corner : (p.lambda_b - p.gamma * theta) / out;
  return pt;
}

std::vector<BrokenLinePoint> shoot_path(double theta, const ModelParams& p) {
  std::vector<BrokenLinePoint> path;
  path.reserve(p.n_levels);
  path.push_back(first_line_point(theta, p));
  while (path.size() < p.n_levels) path.push_back(step_map(path.back(), p));
  return path;
}

double shooting_defect(double theta, const ModelParams& p) {
  const auto path = shoot_path(theta, p);
  const auto& last = path.back();
  return (p.alpha + p.beta) * last.w + p.gamma * std::min(last.v, last.w) - p.lambda_s;
}

namespace {

MapCase case_of(const BrokenLinePoint& in, const BrokenLinePoint& out) {
  if (in.v > in.w && out.v > out.w) return MapCase::BothBuyerSide;
  if (in.v > in.w && out.v < out.w) return MapCase::Crossing;
  if (in.v < in.w && out.v < out.w) return MapCase::BothSellerSide;
  throw OnKink("point lies on v = w at the input or output level");
}

} // namespace

JacobianReport map_jacobian_check(const BrokenLinePoint& point, const ModelParams& p, double h,
                                  std::optional<std::pair<double, double>> direction) {
  if (!(h > 0.0)) throw ParamError(ParamErrorCode::BadArgument, "h", "must be > 0");
  const auto [dv_raw, dw_raw] = direction.value_or(std::pair{point.v, point.w});
  const double len = std::hypot(dv_raw, dw_raw);
  if (!(len > 0.0) || dv_raw == 0.0)
    throw ParamError(ParamErrorCode::BadArgument, "direction", "must be nonzero with dv != 0");
  const double dv = dv_raw / len;
  const double dw = dw_raw / len;

  const BrokenLinePoint center_out = step_map(point, p);
  const MapCase c = case_of(point, center_out);

  const BrokenLinePoint plus{point.v + h * dv, point.w + h * dw, point.level};
  const BrokenLinePoint minus{point.v - h * dv, point.w - h * dw, point.level};
  if (!(minus.v >= 0.0) || !(minus.w >= 0.0)) throw OnKink("probe leaves the positive quadrant");
  const BrokenLinePoint plus_out = step_map(plus, p);
  const BrokenLinePoint minus_out = step_map(minus, p);
  if (case_of(plus, plus_out) != c || case_of(minus, minus_out) != c)
    throw OnKink("finite-difference probe crosses v = w; perturb the point or shrink h");

  JacobianReport rep;
  rep.map_case = c;
  rep.input_slope = dw / dv;
  const double dv_out = plus_out.v - minus_out.v;
  if (dv_out == 0.0) throw OnKink("output slope is vertical");
  rep.output_slope = (plus_out.w - minus_out.w) / dv_out;
  rep.numeric_factor = rep.output_slope / rep.input_slope;

  const double a = p.alpha;
  const double ab = p.alpha + p.beta;
  const double abg = ab + p.gamma;
  const double s = rep.input_slope;
  switch (c) {
  case MapCase::BothBuyerSide: {
    const double a_next = ab + p.gamma * center_out.w / center_out.v;
    rep.case_factor = a_next * abg / (a * a);
    rep.exact_factor = abg * ab / (a * a - p.gamma * abg * s);
    break;
  }
  case MapCase::Crossing:
    rep.case_factor = abg * abg / (a * a);
    rep.exact_factor = rep.case_factor;
    break;
  case MapCase::BothSellerSide: {
    const double b_k = ab + p.gamma * point.v / point.w;
    rep.case_factor = b_k * abg / (a * a);
    rep.exact_factor = abg * (ab * s + p.gamma) / (a * a * s);
    break;
  }
  }
  rep.rel_diff = std::abs(rep.numeric_factor - rep.case_factor) / std::abs(rep.case_factor);
  rep.rel_diff_exact = std::abs(rep.numeric_factor - rep.exact_factor) / std::abs(rep.exact_factor);
  return rep;
}

SlopeBoundReport check_slope_bound(const ModelParams& p, std::size_t samples) {
  SlopeBoundReport rep;
  rep.bound = -p.gamma / (p.alpha + p.beta);
  if (p.n_levels < 2 || samples < 2) return rep;
  const double corner = p.lambda_b / (p.alpha + p.beta + p.gamma);
  std::vector<BrokenLinePoint> ends;
  ends.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double theta = corner * static_cast<double>(i) / static_cast<double>(samples - 1);
    ends.push_back(shoot_path(theta, p).back());
  }
  for (std::size_t i = 1; i < ends.size(); ++i) {
    const auto& a = ends[i - 1];
    const auto& b = ends[i];
    if (!(a.w > a.v && b.w > b.v)) continue;
    const double dv = b.v - a.v;
    if (std::abs(dv) <= 1e-14 * std::max(a.v, b.v)) continue;
    const double slope = (b.w - a.w) / dv;
    ++rep.segments_checked;
    rep.flattest_slope = std::max(rep.flattest_slope, slope);
    if (!(slope < rep.bound)) rep.holds = false;
  }
  return rep;
}

FixedPoint solve_shooting(const ModelParams& p, double tol) {
  const double out = p.alpha + p.beta;
  double lo = 0.0;
  double g_lo = shooting_defect(lo, p); // = -lambda_s
  double hi = p.lambda_s / out;
  double g_hi = shooting_defect(hi, p);
  for (int i = 0; g_hi < 0.0; ++i) {
    if (i == 200 || is_bad(g_hi)) throw BracketFailure("no sign change of the shooting defect on [0, " + std::to_string(hi) + "]");
    lo = hi;
    g_lo = g_hi;
    hi *= 2.0;
    g_hi = shooting_defect(hi, p);
  }

  std::size_t iterations = 0;
  double best = hi;
  double g_best = g_hi;
  while (std::abs(g_best) > tol && hi - lo > tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double g_mid = shooting_defect(mid, p);
    ++iterations;
    if (g_mid < 0.0) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
      g_hi = g_mid;
    }
    if (std::abs(g_mid) < std::abs(g_best)) {
      best = mid;
      g_best = g_mid;
    }
  }
  // The defect is piecewise linear in theta: one secant step on the
  // bracketing piece lands on the root when no kink is inside.
  if (g_hi != g_lo) {
    const double sec = lo - g_lo * (hi - lo) / (g_hi - g_lo);
    if (sec > lo && sec < hi) {
      const double g_sec = shooting_defect(sec, p);
      if (std::abs(g_sec) < std::abs(g_best)) {
        best = sec;
        g_best = g_sec;
      }
    }
  }
  if (std::abs(g_lo) < std::abs(g_best)) best = lo;

  const auto path = shoot_path(best, p);
  FixedPoint fp;
  fp.solver = SolverKind::Shooting;
  fp.iterations = iterations;
  fp.x_star.reserve(p.n_levels);
  fp.y_star.reserve(p.n_levels);
  for (const auto& pt : path) {
    fp.x_star.push_back(pt.v);
    fp.y_star.push_back(pt.w);
  }
  fill_summary(fp, p);
  return fp;
}

namespace {

bool is_monotone_step(const FluidState& prev, const FluidState& cur) {
  for (std::size_t k = 0; k < cur.size(); ++k) {
    const double slack_x = 1e-14 * std::abs(prev.x[k]);
    const double slack_y = 1e-14 * std::abs(prev.y[k]);
    if (cur.x[k] < prev.x[k] - slack_x || cur.y[k] > prev.y[k] + slack_y) return false;
  }
  return true;
}

} // namespace

FixedPoint solve_recursive(const ModelParams& p, const RecursiveOptions& opt) {
  const std::size_t n = p.n_levels;
  const double out = p.alpha + p.beta;
  const double g = p.gamma;
  constexpr double inf = std::numeric_limits<double>::infinity();

  // x^(0): every buyer level trades as if sellers were plentiful;
  // y^(0): no trades on the seller side.
  FluidState cur = FluidState::zeros(n);
  for (std::size_t i = 0; i < n; ++i) cur.x[i] = solve_branch(i == 0 ? p.lambda_b : p.alpha * cur.x[i - 1], out, g, inf);
  for (std::size_t i = n; i-- > 0;) cur.y[i] = solve_branch(i + 1 == n ? p.lambda_s : p.alpha * cur.y[i + 1], out, g, 0.0);
  if (opt.trace) opt.trace->push_back(cur);

  FixedPoint fp;
  fp.solver = opt.variant == RecursionVariant::Monotone ? SolverKind::Recursive : SolverKind::RecursiveLagged;
  FluidState next = cur;
  for (std::size_t iter = 1;; ++iter) {
    if (iter > opt.max_iter)
      throw NoConvergence(std::string(to_string(fp.solver)) + " recursion did not converge in " +
                          std::to_string(opt.max_iter) + " sweeps");
    if (opt.variant == RecursionVariant::Monotone) {
      for (std::size_t i = 0; i < n; ++i)
        next.x[i] = solve_branch(i == 0 ? p.lambda_b : p.alpha * next.x[i - 1], out, g, cur.y[i]);
      for (std::size_t i = n; i-- > 0;)
        next.y[i] = solve_branch(i + 1 == n ? p.lambda_s : p.alpha * next.y[i + 1], out, g, next.x[i]);
    } else {
      for (std::size_t i = 0; i < n; ++i)
        next.x[i] = ((i == 0 ? p.lambda_b : p.alpha * next.x[i - 1]) - g * std::min(cur.x[i], cur.y[i])) / out;
      for (std::size_t i = n; i-- > 0;)
        next.y[i] = ((i + 1 == n ? p.lambda_s : p.alpha * next.y[i + 1]) - g * std::min(next.x[i], cur.y[i])) / out;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_bad(next.x[i]) || is_bad(next.y[i]))
        throw NoConvergence(std::string(to_string(fp.solver)) + " recursion diverged after " + std::to_string(iter) +
                            " sweeps");
      change = std::max({change, std::abs(next.x[i] - cur.x[i]), std::abs(next.y[i] - cur.y[i])});
    }
    if (!is_monotone_step(cur, next)) fp.monotone_iterates = false;
    if (opt.trace) opt.trace->push_back(next);
    std::swap(cur, next);
    if (change < opt.tol) {
      fp.iterations = iter;
      break;
    }
  }
  fp.x_star = std::move(cur.x);
  fp.y_star = std::move(cur.y);
  fill_summary(fp, p);
  return fp;
}

FixedPoint solve_relaxation(const ModelParams& p, const FluidState& initial, double tau_budget, double rhs_tol) {
  const RelaxResult r = integrate_to_rest(initial, p, tau_budget, rhs_tol);
  if (r.status != RelaxStatus::Converged)
    throw NoConvergence("fluid ODE did not come to rest within tau=" + std::to_string(tau_budget) +
                        " (|rhs| = " + std::to_string(r.final_rhs_norm) + ")");
  FixedPoint fp;
  fp.solver = SolverKind::Relaxation;
  fp.x_star = r.state.x;
  fp.y_star = r.state.y;
  fill_summary(fp, p);
  return fp;
}

} // namespace lobfluid
