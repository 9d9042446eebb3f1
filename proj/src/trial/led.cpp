#include "xwalk/trial/led.hpp"

#include "xwalk/core/errors.hpp"

#include <cmath>
#include <string>

namespace xwalk
{

std::string_view to_string(LedMode m) noexcept
{
  switch (m) {
    case LedMode::Off:
      return "off";
    case LedMode::White:
      return "white";
    case LedMode::BlueFlashing:
      return "blue";
  }
  return "off";
}

LedMode led_mode_from_string(std::string_view s)
{
  if (s == "off") {
    return LedMode::Off;
  }
  if (s == "white") {
    return LedMode::White;
  }
  if (s == "blue") {
    return LedMode::BlueFlashing;
  }
  throw InvalidArgument("unknown LED mode '" + std::string(s) + "'");
}

bool LedState::lit(double tick_dt, double flash_hz) const noexcept
{
  if (mode != LedMode::BlueFlashing) {
    return mode == LedMode::White;
  }
  const auto half_period =
    std::max<std::int64_t>(1, std::llround(0.5 / (flash_hz * tick_dt)));
  return (phase / half_period) % 2 == 0;
}

LedState initial_led(Condition condition) noexcept
{
  LedState s;
  s.mode = condition == Condition::DistractedLed ? LedMode::White : LedMode::Off;
  return s;
}

LedState update_led(Condition condition, const PedestrianState & ped, const LedState & prev)
{
  if (condition != Condition::DistractedLed) {
    return LedState{};
  }
  LedState next = prev;
  if (prev.mode == LedMode::BlueFlashing) {
    ++next.phase;
    return next;
  }
  next.mode = LedMode::White;
  if (ped.crossing_initiated && !prev.initiation_seen) {
    next.initiation_seen = true;
    if (ped.head == Head::TowardPhone) {
      next.mode = LedMode::BlueFlashing;
      next.phase = 0;
    }
  }
  return next;
}

}  // namespace xwalk
