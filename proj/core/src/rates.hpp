#pragma once
// Internal: per-level rate block shared by enumeration and the simulator's
// rate table so that both produce bit-identical totals.
#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>

#include "lobfluid/model.hpp"

namespace lobfluid::detail {

struct RateCoefficients {
  double trade;
  double quit;
  double move;

  RateCoefficients(const ModelParams& p, ScalingLevel scale)
      : trade(p.gamma / scale.as_double()), quit(p.beta / scale.as_double()), move(p.alpha / scale.as_double()) {}
};

inline constexpr std::array<EventKind, 5> kLevelOrder{EventKind::Trade, EventKind::BuyerQuit, EventKind::BuyerMove,
                                                      EventKind::SellerQuit, EventKind::SellerMove};

struct LevelBlock {
  // trade, buyer quit, buyer move/exit, seller quit, seller move/exit
  std::array<double, 5> rates{};
  double sum{0.0};
};

inline LevelBlock level_block(std::int64_t b, std::int64_t s, const RateCoefficients& c) {
  LevelBlock blk;
  const auto bd = static_cast<double>(b);
  const auto sd = static_cast<double>(s);
  blk.rates[0] = c.trade * static_cast<double>(std::min(b, s));
  blk.rates[1] = c.quit * bd;
  blk.rates[2] = c.move * bd;
  blk.rates[3] = c.quit * sd;
  blk.rates[4] = c.move * sd;
  blk.sum = (((blk.rates[0] + blk.rates[1]) + blk.rates[2]) + blk.rates[3]) + blk.rates[4];
  return blk;
}

// Maps a slot of the block to the concrete event kind at this level.
inline EventKind resolve_kind(std::size_t slot, std::size_t level, std::size_t n) {
  const EventKind k = kLevelOrder[slot];
  if (k == EventKind::BuyerMove && level + 1 == n) return EventKind::BuyerExitTop;
  if (k == EventKind::SellerMove && level == 0) return EventKind::SellerExitBottom;
  return k;
}

} // namespace lobfluid::detail
