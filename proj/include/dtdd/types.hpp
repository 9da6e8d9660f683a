#pragma once

#include <cstdint>
#include <string_view>

namespace dtdd {

enum class Direction : std::uint8_t { kDl = 0, kUl = 1 };

inline constexpr std::string_view to_string(Direction d) { return d == Direction::kDl ? "dl" : "ul"; }
inline constexpr int index(Direction d) { return static_cast<int>(d); }
inline constexpr Direction opposite(Direction d) { return d == Direction::kDl ? Direction::kUl : Direction::kDl; }

/// OFDM symbol ticks. 30 kHz SCS gives 28 symbols per millisecond with the
/// cyclic-prefix length difference ignored.
using Tick = std::int64_t;

inline constexpr int kSymbolsPerSlot = 14;
inline constexpr double kSymbolsPerMs = 28.0;
inline constexpr int kSubcarriersPerPrb = 12;

inline constexpr double ticks_to_ms(double ticks) { return ticks / kSymbolsPerMs; }

}  // namespace dtdd
