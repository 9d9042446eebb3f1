#pragma once

#include "xwalk/trial/condition.hpp"
#include "xwalk/trial/pedestrian.hpp"

#include <cstdint>
#include <string_view>

namespace xwalk
{

enum class LedMode : std::uint8_t { Off, White, BlueFlashing };

std::string_view to_string(LedMode m) noexcept;
LedMode led_mode_from_string(std::string_view s);

struct LedState
{
  LedMode mode = LedMode::Off;
  std::int64_t phase = 0;          // ticks since the LED turned blue
  bool initiation_seen = false;    // the initiation tick has been evaluated

  /// Square-wave phase of the flashing strip at `flash_hz`.
  bool lit(double tick_dt, double flash_hz) const noexcept;
  bool operator==(const LedState &) const = default;
};

LedState initial_led(Condition condition) noexcept;

/// Control and Distracted: always Off. DistractedLed: White on the curb;
/// turns BlueFlashing on the tick crossing is initiated if the head is on the
/// phone at that tick, then stays blue. An initiation with the head on the
/// road leaves the strip White for the rest of the trial.
LedState update_led(Condition condition, const PedestrianState & ped, const LedState & prev);

}  // namespace xwalk
