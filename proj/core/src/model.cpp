#include "lobfluid/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "lobfluid/error.hpp"
#include "rates.hpp"

namespace lobfluid {

namespace {

void require_positive(double value, const char* field) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw ParamError(ParamErrorCode::NonPositiveRate, field, "must be a finite value > 0");
}

} // namespace

ModelParams validate_params(const ModelParams& raw) {
  if (raw.n_levels < 1) throw ParamError(ParamErrorCode::BadN, "n_levels", "must be >= 1");
  require_positive(raw.lambda_b, "lambda_b");
  require_positive(raw.lambda_s, "lambda_s");
  require_positive(raw.alpha, "alpha");
  require_positive(raw.gamma, "gamma");
  if (!(raw.beta >= 0.0) || !std::isfinite(raw.beta))
    throw ParamError(ParamErrorCode::NegativeBeta, "beta", "must be a finite value >= 0");
  if (raw.price_labels) {
    const auto& c = *raw.price_labels;
    if (c.size() != raw.n_levels)
      throw ParamError(ParamErrorCode::BadPriceLabels, "price_labels", "length must equal n_levels");
    for (std::size_t i = 1; i < c.size(); ++i)
      if (!(c[i - 1] < c[i]))
        throw ParamError(ParamErrorCode::BadPriceLabels, "price_labels", "must be strictly increasing");
  }
  return raw;
}

ScalingLevel::ScalingLevel(std::uint64_t value) : l(value) {
  if (value < 1) throw ParamError(ParamErrorCode::BadArgument, "scale", "L must be >= 1");
}

std::int64_t DiscreteState::population() const noexcept {
  return std::accumulate(b.begin(), b.end(), std::int64_t{0}) + std::accumulate(s.begin(), s.end(), std::int64_t{0});
}

double distance(const FluidState& a, const FluidState& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    const double dx = a.x[i] - b.x[i];
    const double dy = a.y[i] - b.y[i];
    acc += dx * dx + dy * dy;
  }
  return std::sqrt(acc);
}

double sup_distance(const FluidState& a, const FluidState& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    m = std::max(m, std::abs(a.x[i] - b.x[i]));
    m = std::max(m, std::abs(a.y[i] - b.y[i]));
  }
  return m;
}

void check_state(const DiscreteState& state, const ModelParams& params) {
  if (state.b.size() != params.n_levels || state.s.size() != params.n_levels)
    throw ParamError(ParamErrorCode::BadArgument, "state", "dimension must equal n_levels");
  for (std::size_t i = 0; i < state.b.size(); ++i)
    if (state.b[i] < 0 || state.s[i] < 0)
      throw ParamError(ParamErrorCode::BadArgument, "state", "occupancies must be >= 0");
}

void check_state(const FluidState& state, const ModelParams& params) {
  if (state.x.size() != params.n_levels || state.y.size() != params.n_levels)
    throw ParamError(ParamErrorCode::BadArgument, "state", "dimension must equal n_levels");
  for (std::size_t i = 0; i < state.x.size(); ++i)
    if (!(state.x[i] >= 0.0) || !(state.y[i] >= 0.0) || !std::isfinite(state.x[i]) || !std::isfinite(state.y[i]))
      throw ParamError(ParamErrorCode::BadArgument, "state", "components must be finite and >= 0");
}

FluidState scale_state(const DiscreteState& state, ScalingLevel scale) {
  FluidState out = FluidState::zeros(state.size());
  const double l = scale.as_double();
  for (std::size_t i = 0; i < state.size(); ++i) {
    out.x[i] = static_cast<double>(state.b[i]) / l;
    out.y[i] = static_cast<double>(state.s[i]) / l;
  }
  return out;
}

DiscreteState unscale_state(const FluidState& state, ScalingLevel scale) {
  DiscreteState out = DiscreteState::empty(state.size());
  const double l = scale.as_double();
  for (std::size_t i = 0; i < state.size(); ++i) {
    out.b[i] = static_cast<std::int64_t>(std::floor(l * state.x[i] + 0.5));
    out.s[i] = static_cast<std::int64_t>(std::floor(l * state.y[i] + 0.5));
  }
  return out;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
  case EventKind::BuyerArrival: return "BuyerArrival";
  case EventKind::SellerArrival: return "SellerArrival";
  case EventKind::Trade: return "Trade";
  case EventKind::BuyerQuit: return "BuyerQuit";
  case EventKind::BuyerMove: return "BuyerMove";
  case EventKind::BuyerExitTop: return "BuyerExitTop";
  case EventKind::SellerQuit: return "SellerQuit";
  case EventKind::SellerMove: return "SellerMove";
  case EventKind::SellerExitBottom: return "SellerExitBottom";
  }
  return "?";
}

std::vector<Event> enumerate_events(const DiscreteState& state, const ModelParams& params, ScalingLevel scale) {
  const std::size_t n = params.n_levels;
  const detail::RateCoefficients coef(params, scale);
  std::vector<Event> events;
  events.reserve(2 + 5 * n);
  events.push_back({EventKind::BuyerArrival, 0, params.lambda_b});
  events.push_back({EventKind::SellerArrival, n - 1, params.lambda_s});
  for (std::size_t k = 0; k < n; ++k) {
    const auto blk = detail::level_block(state.b[k], state.s[k], coef);
    for (std::size_t slot = 0; slot < blk.rates.size(); ++slot)
      if (blk.rates[slot] > 0.0) events.push_back({detail::resolve_kind(slot, k, n), k, blk.rates[slot]});
  }
  return events;
}

double total_rate(const DiscreteState& state, const ModelParams& params, ScalingLevel scale) {
  const detail::RateCoefficients coef(params, scale);
  double total = params.lambda_b + params.lambda_s;
  for (std::size_t k = 0; k < params.n_levels; ++k) total += detail::level_block(state.b[k], state.s[k], coef).sum;
  return total;
}

void apply_event_in_place(DiscreteState& state, EventKind kind, std::size_t level) {
  const std::size_t n = state.size();
  if (level >= n) throw DisabledEvent("event level out of range");
  auto need = [&](bool ok) {
    if (!ok) throw DisabledEvent(std::string(to_string(kind)) + " at level " + std::to_string(level + 1) + " is not enabled");
  };
  switch (kind) {
  case EventKind::BuyerArrival: ++state.b[0]; break;
  case EventKind::SellerArrival: ++state.s[n - 1]; break;
  case EventKind::Trade:
    need(state.b[level] > 0 && state.s[level] > 0);
    --state.b[level];
    --state.s[level];
    break;
  case EventKind::BuyerQuit:
    need(state.b[level] > 0);
    --state.b[level];
    break;
  case EventKind::BuyerMove:
    need(state.b[level] > 0 && level + 1 < n);
    --state.b[level];
    ++state.b[level + 1];
    break;
  case EventKind::BuyerExitTop:
    need(state.b[level] > 0 && level + 1 == n);
    --state.b[level];
    break;
  case EventKind::SellerQuit:
    need(state.s[level] > 0);
    --state.s[level];
    break;
  case EventKind::SellerMove:
    need(state.s[level] > 0 && level > 0);
    --state.s[level];
    ++state.s[level - 1];
    break;
  case EventKind::SellerExitBottom:
    need(state.s[level] > 0 && level == 0);
    --state.s[level];
    break;
  }
}

DiscreteState apply_event(const DiscreteState& state, const Event& event) {
  DiscreteState next = state;
  apply_event_in_place(next, event.kind, event.level);
  return next;
}

} // namespace lobfluid
