#include "lobfluid/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "lobfluid/error.hpp"
#include "lobfluid/fluid_ode.hpp"

namespace lobfluid {

Quantiles quantiles(std::vector<double> values) {
  Quantiles q;
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  auto at = [&](double prob) {
    const double pos = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  q.q25 = at(0.25);
  q.median = at(0.5);
  q.q75 = at(0.75);
  return q;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body) {
  if (workers == 0) workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

void check_levels(const std::vector<std::uint64_t>& levels) {
  if (levels.empty()) throw ParamError(ParamErrorCode::BadArgument, "levels", "must not be empty");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 1) throw ParamError(ParamErrorCode::BadArgument, "levels", "every L must be >= 1");
    if (i > 0 && !(levels[i] > levels[i - 1]))
      throw ParamError(ParamErrorCode::BadArgument, "levels", "must be strictly increasing");
  }
}

} // namespace

ConvergenceReport fluid_convergence(const ModelParams& params, const FluidState& initial,
                                    const std::vector<std::uint64_t>& levels, double horizon, std::size_t replicas,
                                    std::uint64_t master_seed, std::optional<double> grid_step,
                                    const ExperimentOptions& options) {
  check_levels(levels);
  check_state(initial, params);
  if (replicas < 1) throw ParamError(ParamErrorCode::BadArgument, "replicas", "must be >= 1");
  if (!(horizon > 0.0)) throw ParamError(ParamErrorCode::BadArgument, "horizon", "must be > 0");
  const double dt = grid_step.value_or(0.01 * horizon);
  if (!(dt > 0.0)) throw ParamError(ParamErrorCode::BadArgument, "grid_step", "must be > 0");

  IntegratorOptions ode_opt;
  ode_opt.output_dt = dt;
  const OdeSolution fluid = integrate(initial, params, horizon, ode_opt);

  ConvergenceReport rep;
  rep.params = params;
  rep.horizon = horizon;
  rep.grid_step = dt;
  rep.master_seed = master_seed;
  rep.replicas = replicas;
  rep.levels.resize(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    rep.levels[i].scale = levels[i];
    rep.levels[i].seeds.resize(replicas);
    rep.levels[i].distances.resize(replicas);
    for (std::size_t r = 0; r < replicas; ++r) rep.levels[i].seeds[r] = derive_seed(master_seed, i, r);
  }

  parallel_for(levels.size() * replicas, options.workers, [&](std::size_t job) {
    const std::size_t i = job / replicas;
    const std::size_t r = job % replicas;
    auto& lvl = rep.levels[i];
    const Trajectory tr =
        simulate(params, ScalingLevel(lvl.scale), initial, horizon, dt, lvl.seeds[r], options.simulation);
    if (tr.times.size() != fluid.times.size())
      throw Error("simulation and ODE grids differ (" + std::to_string(tr.times.size()) + " vs " +
                  std::to_string(fluid.times.size()) + " points)");
    double sup = 0.0;
    for (std::size_t j = 0; j < tr.times.size(); ++j) sup = std::max(sup, distance(tr.states[j], fluid.states[j]));
    lvl.distances[r] = sup;
  });
  for (auto& lvl : rep.levels) lvl.summary = quantiles(lvl.distances);
  return rep;
}

ConvergenceReport equilibrium_concentration(const ModelParams& params, const std::vector<std::uint64_t>& levels,
                                            double burn_in, std::size_t n_samples, double sample_gap,
                                            std::uint64_t master_seed, const ExperimentOptions& options) {
  check_levels(levels);
  ConvergenceReport rep;
  rep.params = params;
  rep.horizon = burn_in;
  rep.grid_step = sample_gap;
  rep.master_seed = master_seed;
  rep.replicas = 1;
  if (!(burn_in > 0.0)) throw ParamError(ParamErrorCode::BadArgument, "burn_in", "must be > 0");
  if (!(sample_gap > 0.0)) throw ParamError(ParamErrorCode::BadArgument, "sample_gap", "must be > 0");
  if (n_samples == 0) return rep;

  const FluidState target = solve_shooting(params).as_state();
  rep.levels.resize(levels.size());
  parallel_for(levels.size(), options.workers, [&](std::size_t i) {
    auto& lvl = rep.levels[i];
    lvl.scale = levels[i];
    lvl.seeds = {derive_seed(master_seed, i)};
    const auto samples = empirical_equilibrium(params, ScalingLevel(lvl.scale), burn_in, n_samples, sample_gap,
                                               lvl.seeds.front(), options.simulation);
    lvl.distances.reserve(samples.size());
    for (const auto& s : samples) lvl.distances.push_back(distance(s, target));
    lvl.summary = quantiles(lvl.distances);
  });
  return rep;
}

SweepReport overproduction_sweep(const ModelParams& params, const std::vector<double>& lambda_s_values, double tol,
                                 const ExperimentOptions& options) {
  if (lambda_s_values.empty()) throw ParamError(ParamErrorCode::BadArgument, "lambda_s_values", "must not be empty");
  for (std::size_t i = 1; i < lambda_s_values.size(); ++i)
    if (!(lambda_s_values[i] > lambda_s_values[i - 1]))
      throw ParamError(ParamErrorCode::BadArgument, "lambda_s_values", "must be strictly increasing");

  SweepReport rep;
  rep.base = params;
  rep.points.resize(lambda_s_values.size());
  parallel_for(lambda_s_values.size(), options.workers, [&](std::size_t i) {
    ModelParams p = params;
    p.lambda_s = lambda_s_values[i];
    p = validate_params(p);
    const FixedPoint shot = solve_shooting(p, tol);
    RecursiveOptions ro;
    ro.tol = std::min(tol, 1e-12);
    const FixedPoint rec = solve_recursive(p, ro);
    if (sup_distance(shot.as_state(), rec.as_state()) > 1e-8)
      throw SolverError("shooting and recursive fixed points disagree at lambda_s=" + std::to_string(p.lambda_s));
    rep.points[i] = {p.lambda_s, shot.crossing, shot.regime, shot.trade_volume, shot.residual};
  });
  for (const auto& pt : rep.points)
    if (pt.crossing == 0 && pt.regime == Regime::SellersDominate) {
      rep.saturation_onset = pt.lambda_s;
      break;
    }
  return rep;
}

} // namespace lobfluid
