#include "xwalk/trial/yield_monitor.hpp"

namespace xwalk
{

std::optional<std::int64_t> YieldMonitor::observe(
  std::span<const VehicleState> vehicles, bool initiated)
{
  if (initiated && !armed_) {
    armed_ = true;
    reference_ = last_speed_;
  }

  std::optional<std::int64_t> offender;
  if (armed_) {
    for (const VehicleState & v : vehicles) {
      if (v.yield != YieldState::Yielding) {
        continue;
      }
      auto ref = reference_.find(v.id);
      if (ref == reference_.end()) {
        const auto prev = last_speed_.find(v.id);
        ref = reference_.emplace(v.id, prev != last_speed_.end() ? prev->second : v.v).first;
      }
      const bool hard_brake = -v.a > thresholds_.decel;
      const bool speed_drop = ref->second > 0.0 && v.v < thresholds_.speed_ratio * ref->second;
      if ((hard_brake || speed_drop) && !offender) {
        offender = v.id;
      }
    }
  }

  last_speed_.clear();
  for (const VehicleState & v : vehicles) {
    last_speed_.emplace(v.id, v.v);
  }
  return offender;
}

}  // namespace xwalk
