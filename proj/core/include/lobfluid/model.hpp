#pragma once
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace lobfluid {

// Rate constants of the order book model. Per-trader rates at scaling
// level L are gamma/L (trade), beta/L (quit) and alpha/L (move one level);
// buyers arrive at level 1 with rate lambda_b, sellers at level N with
// rate lambda_s. Construct through validate_params().
struct ModelParams {
  std::size_t n_levels{1};
  double lambda_b{1.0};
  double lambda_s{1.0};
  double alpha{1.0};
  double beta{1.0};
  double gamma{1.0};
  // Annotation only: c_1 < ... < c_N.
  std::optional<std::vector<double>> price_labels;

  bool operator==(const ModelParams&) const = default;
};

// Throws ParamError naming the offending field. beta == 0 is accepted
// (the fixed point is still unique); the CTMC then has no quit events.
ModelParams validate_params(const ModelParams& raw);

struct ScalingLevel {
  std::uint64_t l{1};

  explicit ScalingLevel(std::uint64_t value);
  double as_double() const noexcept { return static_cast<double>(l); }
};

// Occupancy of the order book. Index 0 is the lowest price level.
struct DiscreteState {
  std::vector<std::int64_t> b;
  std::vector<std::int64_t> s;

  static DiscreteState empty(std::size_t n) { return {std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, 0)}; }
  std::size_t size() const noexcept { return b.size(); }
  std::int64_t population() const noexcept;
  bool operator==(const DiscreteState&) const = default;
};

// Scaled state (x, y) ~ (b/L, s/L); also the state of the fluid ODE.
struct FluidState {
  std::vector<double> x;
  std::vector<double> y;

  static FluidState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }
  std::size_t size() const noexcept { return x.size(); }
  bool operator==(const FluidState&) const = default;
};

// Euclidean distance on the concatenated 2N vector.
double distance(const FluidState& a, const FluidState& b);
// Sup-norm distance on the concatenated 2N vector.
double sup_distance(const FluidState& a, const FluidState& b);

// Throws ParamError if sizes disagree with params or any entry is negative.
void check_state(const DiscreteState& state, const ModelParams& params);
void check_state(const FluidState& state, const ModelParams& params);

FluidState scale_state(const DiscreteState& state, ScalingLevel scale);

// round-half-up of L*x0, L*y0.
DiscreteState unscale_state(const FluidState& state, ScalingLevel scale);

enum class EventKind : std::uint8_t {
  BuyerArrival,
  SellerArrival,
  Trade,
  BuyerQuit,
  BuyerMove,    // level k -> k+1, k < N-1
  BuyerExitTop, // move rate at the top level leaves the book
  SellerQuit,
  SellerMove,       // level k -> k-1, k > 0
  SellerExitBottom, // move rate at the bottom level leaves the book
};

std::string_view to_string(EventKind kind);

struct Event {
  EventKind kind{EventKind::BuyerArrival};
  std::size_t level{0}; // 0-based; arrivals carry their entry level
  double rate{0.0};

  bool operator==(const Event&) const = default;
};

// Canonical order: BuyerArrival, SellerArrival, then for each level
// ascending: Trade, BuyerQuit, BuyerMove|BuyerExitTop, SellerQuit,
// SellerMove|SellerExitBottom. Zero-rate events are omitted.
std::vector<Event> enumerate_events(const DiscreteState& state, const ModelParams& params, ScalingLevel scale);

// Closed-form total jump rate, summed in the same grouping the simulator uses.
double total_rate(const DiscreteState& state, const ModelParams& params, ScalingLevel scale);

// Throws DisabledEvent if the event would make an entry negative.
DiscreteState apply_event(const DiscreteState& state, const Event& event);
void apply_event_in_place(DiscreteState& state, EventKind kind, std::size_t level);

} // namespace lobfluid
