#pragma once

#include <cstdint>

namespace xwalk
{

/// Which constraint set a vehicle's acceleration on the last tick.
enum class YieldState : std::uint8_t {
  None,       // car-following (or free road) was binding
  Yielding,   // braking for the pedestrian, stop before the zone is feasible
  Emergency,  // braking for the pedestrian at b_max, cannot stop in time
};

struct VehicleState
{
  std::int64_t id = 0;
  double x = 0.0;       // m, front bumper; crosswalk near edge at 0
  double v = 0.0;       // m/s
  double a = 0.0;       // m/s^2, realised over the last tick
  double length = 4.5;  // m
  double width = 1.8;   // m
  double spawn_time = 0.0;  // s, trial clock (negative during pre-roll)
  YieldState yield = YieldState::None;

  double rear() const { return x - length; }
  bool operator==(const VehicleState &) const = default;
};

}  // namespace xwalk
