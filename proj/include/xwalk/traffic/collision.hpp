#pragma once

#include "xwalk/traffic/config.hpp"
#include "xwalk/traffic/vehicle.hpp"
#include "xwalk/trial/pedestrian.hpp"

namespace xwalk
{

/// Footprint of a vehicle: rear to front bumper along x, centred in the lane.
Rect vehicle_footprint(const VehicleState & vehicle, const RoadGeometry & geometry);

/// Squared distance from a point to a rectangle (0 inside).
double squared_distance(double px, double py, const Rect & r) noexcept;

/// True iff the pedestrian disc and the vehicle footprint overlap with
/// positive area. Tangency is not a collision.
bool detect_collision(
  const VehicleState & vehicle, const PedestrianState & ped, const RoadGeometry & geometry);

/// Pedestrian centre strictly inside the lane band of the conflict zone.
bool ped_in_conflict_zone(double y, const RoadGeometry & geometry) noexcept;

/// Vehicle footprint overlaps the crosswalk band along x.
bool vehicle_in_conflict_zone(const VehicleState & vehicle, const RoadGeometry & geometry) noexcept;

}  // namespace xwalk
