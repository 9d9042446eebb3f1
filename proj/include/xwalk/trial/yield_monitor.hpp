#pragma once

#include "xwalk/traffic/vehicle.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>

namespace xwalk
{

struct YieldThresholds
{
  double decel = 3.0;        // m/s^2, braking harder than this while yielding
  double speed_ratio = 0.5;  // fraction of the reference speed
};

/// Tracks whether the pedestrian has made a vehicle yield significantly.
///
/// Only ticks where the yield rule is binding and a stop is feasible
/// (YieldState::Yielding) count. Emergency braking means the pedestrian
/// stepped out too late for the car to stop; that trial ends as a collision or
/// a near miss, not as a forced yield.
///
/// The reference speed of a vehicle is its speed on the tick before the
/// crossing was initiated. Vehicles that appear later use their speed on the
/// tick before they first start yielding.
class YieldMonitor
{
public:
  explicit YieldMonitor(YieldThresholds thresholds = {}) : thresholds_(thresholds) {}

  /// Feed consecutive ticks. `initiated` is the pedestrian latch at this tick.
  /// Returns the id of the offending vehicle on the first significant yield.
  std::optional<std::int64_t> observe(std::span<const VehicleState> vehicles, bool initiated);

private:
  YieldThresholds thresholds_;
  bool armed_ = false;
  std::map<std::int64_t, double> last_speed_;
  std::map<std::int64_t, double> reference_;
};

}  // namespace xwalk
