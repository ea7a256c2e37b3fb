#pragma once
#include <cstddef>
#include <cstdint>
#include <vector>

#include "lobfluid/model.hpp"
#include "lobfluid/rng.hpp"

namespace lobfluid {

// Cumulative event counts over a simulation window. Level vectors are
// 0-based; buyer_moves[N-1] and seller_moves[0] stay zero (those flows are
// the exit counters).
struct EventCounters {
  std::vector<std::uint64_t> trades;
  std::vector<std::uint64_t> buyer_quits;
  std::vector<std::uint64_t> seller_quits;
  std::vector<std::uint64_t> buyer_moves;  // k -> k+1
  std::vector<std::uint64_t> seller_moves; // k -> k-1
  std::uint64_t buyer_arrivals{0};
  std::uint64_t seller_arrivals{0};
  std::uint64_t buyer_exit_top{0};
  std::uint64_t seller_exit_bottom{0};

  explicit EventCounters(std::size_t n = 0)
      : trades(n, 0), buyer_quits(n, 0), seller_quits(n, 0), buyer_moves(n, 0), seller_moves(n, 0) {}

  void record(EventKind kind, std::size_t level);
  std::uint64_t total() const noexcept;
  bool operator==(const EventCounters&) const = default;
};

// Checks the per-level flow balance
//   b_k(t') = b_k(t) + inflow_k - trades_k - buyer_moves_k - buyer_quits_k
// (and the seller mirror) exactly, in integers.
bool conservation_holds(const DiscreteState& initial, const DiscreteState& final_state, const EventCounters& counters);

struct Trajectory {
  std::vector<double> times; // scaled time tau
  std::vector<FluidState> states;
  DiscreteState initial;
  DiscreteState final_state;
  EventCounters counters;
  std::uint64_t seed{0};
  std::uint64_t scale{1};
  std::uint64_t n_events{0};

  bool operator==(const Trajectory&) const = default;
};

struct StepResult {
  Event event;
  double holding_time{0.0}; // unscaled time t
  DiscreteState next;
};

// One exact CTMC transition from `state`.
StepResult step(const DiscreteState& state, const ModelParams& params, ScalingLevel scale, Rng& rng);

struct SimulationOptions {
  // Upper bound on the number of events in one run; BudgetExceeded if hit.
  std::uint64_t max_events{200'000'000};
  // Rebuilds the full rate table after every event and compares.
  bool verify_rate_table{false};
};

// Runs U^(L) over t in [0, L*tau_max] from round-half-up(L*initial) and
// records V^(L) at tau = 0, dt, 2dt, ... (plus tau_max if it is not on the
// grid).
Trajectory simulate(const ModelParams& params, ScalingLevel scale, const FluidState& initial, double tau_max,
                    double sample_dt, std::uint64_t seed, const SimulationOptions& options = {});

// Same, from an explicit discrete initial state.
Trajectory simulate_discrete(const ModelParams& params, ScalingLevel scale, const DiscreteState& initial,
                             double tau_max, double sample_dt, std::uint64_t seed,
                             const SimulationOptions& options = {});

// One long run from the empty book: samples of V^(L) at
// tau = burn_in + j*sample_gap, j = 0..n_samples-1.
std::vector<FluidState> empirical_equilibrium(const ModelParams& params, ScalingLevel scale, double burn_in,
                                              std::size_t n_samples, double sample_gap, std::uint64_t seed,
                                              const SimulationOptions& options = {});

} // namespace lobfluid
