#pragma once

#include "xwalk/traffic/config.hpp"
#include "xwalk/traffic/vehicle.hpp"
#include "xwalk/trial/pedestrian.hpp"

#include <optional>

namespace xwalk
{

/// Intelligent Driver Model acceleration, clamped to [-b_max, a_max].
/// `leader` is null on a free road. Throws IntegrityError when the leader's
/// rear is behind the follower's front bumper.
double car_following_accel(
  const VehicleState & follower, const VehicleState * leader, const TrafficConfig & config);

/// Deceleration (positive, m/s^2) a vehicle needs to stop at the crosswalk
/// near edge when the pedestrian occupies, or at current speed will occupy,
/// the conflict zone while the vehicle would traverse it. Empty when the
/// vehicle may proceed or is already past the near edge.
///
/// The value is the constant-deceleration stop-at-line requirement v^2/(2d);
/// it can exceed b_max when the vehicle is too close to stop.
std::optional<double> yield_decision(
  const VehicleState & vehicle, const PedestrianState & ped, const RoadGeometry & geometry,
  const TrafficConfig & config);

}  // namespace xwalk
