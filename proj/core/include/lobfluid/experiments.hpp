#pragma once
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lobfluid/ctmc.hpp"
#include "lobfluid/fixed_point.hpp"
#include "lobfluid/model.hpp"

namespace lobfluid {

struct Quantiles {
  double q25{0.0};
  double median{0.0};
  double q75{0.0};
};

// Linear-interpolation quantiles (type 7). Empty input -> all zeros.
Quantiles quantiles(std::vector<double> values);

struct LevelResult {
  std::uint64_t scale{1};
  std::vector<std::uint64_t> seeds;  // one per replica (one per level for equilibrium runs)
  std::vector<double> distances;     // per replica sup-distance, or per sample distance
  Quantiles summary;
};

struct ConvergenceReport {
  ModelParams params;
  double horizon{0.0};   // T for fluid convergence, burn-in for equilibrium runs
  double grid_step{0.0}; // sampling step in tau
  std::uint64_t master_seed{0};
  std::size_t replicas{0};
  std::vector<LevelResult> levels;
};

struct ExperimentOptions {
  // 0 = hardware concurrency
  std::size_t workers{0};
  SimulationOptions simulation{};
};

// For each L: simulate `replicas` independent copies of V^(L) from the
// rounded initial data and record sup_{tau on grid} |V^(L) - (x, y)|.
// The default grid step is 0.01 T. Replica r at level index i uses seed
// derive_seed(master_seed, i, r).
ConvergenceReport fluid_convergence(const ModelParams& params, const FluidState& initial,
                                    const std::vector<std::uint64_t>& levels, double horizon, std::size_t replicas,
                                    std::uint64_t master_seed, std::optional<double> grid_step = std::nullopt,
                                    const ExperimentOptions& options = {});

// For each L: one long run, distances of the post-burn-in samples to the
// fixed point. n_samples == 0 gives a report without level rows.
ConvergenceReport equilibrium_concentration(const ModelParams& params, const std::vector<std::uint64_t>& levels,
                                            double burn_in, std::size_t n_samples, double sample_gap,
                                            std::uint64_t master_seed, const ExperimentOptions& options = {});

struct SweepPoint {
  double lambda_s{0.0};
  std::size_t crossing{0};
  Regime regime{Regime::Crossing};
  double trade_volume{0.0};
  double residual{0.0};
};

struct SweepReport {
  ModelParams base;
  std::vector<SweepPoint> points;
  std::optional<double> saturation_onset; // first lambda_s with crossing == 0
};

// Solves the fixed point (shooting, cross-checked by the monotone
// recursion to `tol`) for each seller arrival rate.
SweepReport overproduction_sweep(const ModelParams& params, const std::vector<double>& lambda_s_values,
                                 double tol = 1e-12, const ExperimentOptions& options = {});

// Runs body(i) for i in [0, count) on up to `workers` threads. Exceptions
// are rethrown in index order after all workers finish.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

} // namespace lobfluid
