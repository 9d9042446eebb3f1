#include "xwalk/traffic/car_following.hpp"

#include "xwalk/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace xwalk
{

namespace
{
constexpr double kOverlapTolerance = 1e-9;
constexpr double kMinGap = 1e-9;
// Floor on the speed used to project a vehicle's traversal window, so that a
// vehicle stopped at the line still "occupies" the near future.
constexpr double kCreepSpeed = 0.5;
}  // namespace

double car_following_accel(
  const VehicleState & follower, const VehicleState * leader, const TrafficConfig & config)
{
  const double v = follower.v;
  double a = config.a_max * (1.0 - std::pow(v / config.v_max, config.idm_exponent));

  if (leader != nullptr) {
    const double gap = leader->rear() - follower.x;
    if (gap < -kOverlapTolerance) {
      throw IntegrityError(fmt::format(
        "vehicle {} overlaps leader {} (gap {:.6f} m)", follower.id, leader->id, gap));
    }
    const double dv = v - leader->v;
    const double dynamic =
      v * config.idm_time_headway + v * dv / (2.0 * std::sqrt(config.a_max * config.b_comf));
    const double desired = config.idm_min_spacing + std::max(0.0, dynamic);
    const double ratio = desired / std::max(gap, kMinGap);
    a -= config.a_max * ratio * ratio;
  }
  return std::clamp(a, -config.b_max, config.a_max);
}

std::optional<double> yield_decision(
  const VehicleState & vehicle, const PedestrianState & ped, const RoadGeometry & geometry,
  const TrafficConfig & /*config*/)
{
  const Rect zone = geometry.conflict_zone();
  if (vehicle.x > zone.x_lo) {
    return std::nullopt;
  }
  if (ped.y >= zone.y_hi) {
    return std::nullopt;
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  const bool in_zone = ped.y > zone.y_lo;
  if (!in_zone && ped.speed <= 0.0) {
    return std::nullopt;
  }

  const double ped_in = in_zone ? 0.0 : (zone.y_lo - ped.y) / ped.speed;
  const double ped_out = ped.speed > 0.0 ? (zone.y_hi - ped.y) / ped.speed : inf;

  const double distance = zone.x_lo - vehicle.x;
  const double v_proj = std::max(vehicle.v, kCreepSpeed);
  const double veh_in = distance / v_proj;
  const double veh_out = (distance + (zone.x_hi - zone.x_lo) + vehicle.length) / v_proj;

  if (!(ped_in < veh_out && veh_in < ped_out)) {
    return std::nullopt;
  }
  if (distance <= kMinGap) {
    return vehicle.v > 0.0 ? inf : 0.0;
  }
  return vehicle.v * vehicle.v / (2.0 * distance);
}

}  // namespace xwalk
