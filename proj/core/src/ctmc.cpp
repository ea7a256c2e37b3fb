#include "lobfluid/ctmc.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "lobfluid/error.hpp"
#include "rates.hpp"

namespace lobfluid {

double Rng::exponential(double rate) noexcept {
  // open interval (0, 1): the holding time is strictly positive
  const double u = (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52;
  return -std::log(u) / rate;
}

void EventCounters::record(EventKind kind, std::size_t level) {
  switch (kind) {
  case EventKind::BuyerArrival: ++buyer_arrivals; break;
  case EventKind::SellerArrival: ++seller_arrivals; break;
  case EventKind::Trade: ++trades[level]; break;
  case EventKind::BuyerQuit: ++buyer_quits[level]; break;
  case EventKind::BuyerMove: ++buyer_moves[level]; break;
  case EventKind::BuyerExitTop: ++buyer_exit_top; break;
  case EventKind::SellerQuit: ++seller_quits[level]; break;
  case EventKind::SellerMove: ++seller_moves[level]; break;
  case EventKind::SellerExitBottom: ++seller_exit_bottom; break;
  }
}

std::uint64_t EventCounters::total() const noexcept {
  auto sum = [](const std::vector<std::uint64_t>& v) { return std::accumulate(v.begin(), v.end(), std::uint64_t{0}); };
  return sum(trades) + sum(buyer_quits) + sum(seller_quits) + sum(buyer_moves) + sum(seller_moves) + buyer_arrivals +
         seller_arrivals + buyer_exit_top + seller_exit_bottom;
}

bool conservation_holds(const DiscreteState& initial, const DiscreteState& final_state, const EventCounters& c) {
  const std::size_t n = initial.size();
  if (final_state.size() != n || c.trades.size() != n) return false;
  auto i64 = [](std::uint64_t v) { return static_cast<std::int64_t>(v); };
  for (std::size_t k = 0; k < n; ++k) {
    const std::int64_t b_in = (k == 0) ? i64(c.buyer_arrivals) : i64(c.buyer_moves[k - 1]);
    const std::int64_t b_up = (k + 1 == n) ? i64(c.buyer_exit_top) : i64(c.buyer_moves[k]);
    if (final_state.b[k] != initial.b[k] + b_in - i64(c.trades[k]) - b_up - i64(c.buyer_quits[k])) return false;

    const std::int64_t s_in = (k + 1 == n) ? i64(c.seller_arrivals) : i64(c.seller_moves[k + 1]);
    const std::int64_t s_down = (k == 0) ? i64(c.seller_exit_bottom) : i64(c.seller_moves[k]);
    if (final_state.s[k] != initial.s[k] + s_in - i64(c.trades[k]) - s_down - i64(c.seller_quits[k])) return false;
  }
  // Flows that cannot exist must never be counted.
  return c.buyer_moves[n - 1] == 0 && c.seller_moves[0] == 0;
}

namespace {

// Per-level rate blocks, refreshed only at the levels an event touched.
class RateTable {
public:
  RateTable(const ModelParams& params, ScalingLevel scale, const DiscreteState& state)
      : params_(&params), coef_(params, scale), blocks_(params.n_levels) {
    for (std::size_t k = 0; k < blocks_.size(); ++k) refresh(state, k);
  }

  void refresh(const DiscreteState& state, std::size_t level) {
    blocks_[level] = detail::level_block(state.b[level], state.s[level], coef_);
  }

  void refresh_after(const DiscreteState& state, EventKind kind, std::size_t level) {
    refresh(state, level);
    if (kind == EventKind::BuyerMove) refresh(state, level + 1);
    if (kind == EventKind::SellerMove) refresh(state, level - 1);
  }

  // Same summation grouping as total_rate().
  double total() const {
    double t = params_->lambda_b + params_->lambda_s;
    for (const auto& blk : blocks_) t += blk.sum;
    return t;
  }

  Event select(double target) const {
    const std::size_t n = blocks_.size();
    if (target < params_->lambda_b) return {EventKind::BuyerArrival, 0, params_->lambda_b};
    target -= params_->lambda_b;
    if (target < params_->lambda_s) return {EventKind::SellerArrival, n - 1, params_->lambda_s};
    target -= params_->lambda_s;
    Event last{EventKind::SellerArrival, n - 1, params_->lambda_s};
    for (std::size_t k = 0; k < n; ++k) {
      const auto& blk = blocks_[k];
      if (blk.sum <= 0.0) continue;
      if (target < blk.sum) {
        for (std::size_t slot = 0; slot < blk.rates.size(); ++slot) {
          const double r = blk.rates[slot];
          if (r <= 0.0) continue;
          last = {detail::resolve_kind(slot, k, n), k, r};
          if (target < r) return last;
          target -= r;
        }
        return last; // rounding at the block boundary
      }
      target -= blk.sum;
      for (std::size_t slot = blk.rates.size(); slot-- > 0;)
        if (blk.rates[slot] > 0.0) {
          last = {detail::resolve_kind(slot, k, n), k, blk.rates[slot]};
          break;
        }
    }
    return last; // rounding past the final event
  }

  bool operator==(const RateTable& other) const {
    for (std::size_t k = 0; k < blocks_.size(); ++k)
      if (blocks_[k].rates != other.blocks_[k].rates || blocks_[k].sum != other.blocks_[k].sum) return false;
    return true;
  }

private:
  const ModelParams* params_;
  detail::RateCoefficients coef_;
  std::vector<detail::LevelBlock> blocks_;
};

void check_horizon(double tau_max, double sample_dt) {
  if (!(tau_max >= 0.0) || !std::isfinite(tau_max))
    throw ParamError(ParamErrorCode::BadArgument, "tau_max", "must be finite and >= 0");
  if (!(sample_dt > 0.0) || !std::isfinite(sample_dt))
    throw ParamError(ParamErrorCode::BadArgument, "sample_dt", "must be finite and > 0");
}

std::vector<double> sample_grid(double tau_max, double dt) {
  std::vector<double> grid;
  const double slack = 1e-12 * std::max(1.0, tau_max);
  for (std::size_t j = 0;; ++j) {
    const double t = static_cast<double>(j) * dt;
    if (t > tau_max + slack) break;
    grid.push_back(std::min(t, tau_max));
  }
  if (grid.back() < tau_max - slack) grid.push_back(tau_max);
  return grid;
}

Trajectory run_chain(const ModelParams& params, ScalingLevel scale, const DiscreteState& initial,
                     const std::vector<double>& sample_times, double tau_end, std::uint64_t seed,
                     const SimulationOptions& options) {
  check_state(initial, params);
  Trajectory traj;
  traj.initial = initial;
  traj.counters = EventCounters(params.n_levels);
  traj.seed = seed;
  traj.scale = scale.l;
  traj.times.reserve(sample_times.size());
  traj.states.reserve(sample_times.size());

  Rng rng(seed);
  DiscreteState state = initial;
  RateTable table(params, scale, state);
  const double l = scale.as_double();
  const double t_end = tau_end * l;
  std::size_t next_sample = 0;
  double t = 0.0;

  auto record_until = [&](double t_limit) {
    while (next_sample < sample_times.size() && sample_times[next_sample] * l < t_limit) {
      traj.times.push_back(sample_times[next_sample]);
      traj.states.push_back(scale_state(state, scale));
      ++next_sample;
    }
  };

  for (;;) {
    const double total = table.total();
    const double t_next = t + rng.exponential(total);
    record_until(t_next);
    if (t_next > t_end) break;
    if (traj.n_events >= options.max_events)
      throw BudgetExceeded("event budget of " + std::to_string(options.max_events) + " exhausted at tau=" +
                           std::to_string(t / l));
    const Event ev = table.select(rng.uniform() * total);
    apply_event_in_place(state, ev.kind, ev.level);
    traj.counters.record(ev.kind, ev.level);
    table.refresh_after(state, ev.kind, ev.level);
    if (options.verify_rate_table && !(table == RateTable(params, scale, state)))
      throw Error("incremental rate table diverged from full recomputation");
    ++traj.n_events;
    t = t_next;
  }
  // any remaining grid points lie at or before t_end
  while (next_sample < sample_times.size()) {
    traj.times.push_back(sample_times[next_sample++]);
    traj.states.push_back(scale_state(state, scale));
  }
  traj.final_state = std::move(state);
  return traj;
}

} // namespace

StepResult step(const DiscreteState& state, const ModelParams& params, ScalingLevel scale, Rng& rng) {
  check_state(state, params);
  const RateTable table(params, scale, state);
  const double total = table.total();
  StepResult out;
  out.holding_time = rng.exponential(total);
  out.event = table.select(rng.uniform() * total);
  out.next = apply_event(state, out.event);
  return out;
}

Trajectory simulate_discrete(const ModelParams& params, ScalingLevel scale, const DiscreteState& initial,
                             double tau_max, double sample_dt, std::uint64_t seed, const SimulationOptions& options) {
  check_horizon(tau_max, sample_dt);
  return run_chain(params, scale, initial, sample_grid(tau_max, sample_dt), tau_max, seed, options);
}

Trajectory simulate(const ModelParams& params, ScalingLevel scale, const FluidState& initial, double tau_max,
                    double sample_dt, std::uint64_t seed, const SimulationOptions& options) {
  check_state(initial, params);
  return simulate_discrete(params, scale, unscale_state(initial, scale), tau_max, sample_dt, seed, options);
}

std::vector<FluidState> empirical_equilibrium(const ModelParams& params, ScalingLevel scale, double burn_in,
                                              std::size_t n_samples, double sample_gap, std::uint64_t seed,
                                              const SimulationOptions& options) {
  if (!(burn_in > 0.0) || !std::isfinite(burn_in))
    throw ParamError(ParamErrorCode::BadArgument, "burn_in", "must be finite and > 0");
  if (!(sample_gap > 0.0) || !std::isfinite(sample_gap))
    throw ParamError(ParamErrorCode::BadArgument, "sample_gap", "must be finite and > 0");
  if (n_samples == 0) return {};
  std::vector<double> times(n_samples);
  for (std::size_t j = 0; j < n_samples; ++j) times[j] = burn_in + static_cast<double>(j) * sample_gap;
  auto traj = run_chain(params, scale, DiscreteState::empty(params.n_levels), times, times.back(), seed, options);
  return std::move(traj.states);
}

} // namespace lobfluid
