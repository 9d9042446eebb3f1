#include "xwalk/traffic/collision.hpp"

#include <algorithm>

namespace xwalk
{

Rect vehicle_footprint(const VehicleState & vehicle, const RoadGeometry & geometry)
{
  const double half_width = 0.5 * vehicle.width;
  return {vehicle.rear(), vehicle.x, geometry.lane_center() - half_width,
          geometry.lane_center() + half_width};
}

double squared_distance(double px, double py, const Rect & r) noexcept
{
  const double dx = std::max({r.x_lo - px, 0.0, px - r.x_hi});
  const double dy = std::max({r.y_lo - py, 0.0, py - r.y_hi});
  return dx * dx + dy * dy;
}

bool detect_collision(
  const VehicleState & vehicle, const PedestrianState & ped, const RoadGeometry & geometry)
{
  const double r = geometry.ped_radius;
  return squared_distance(geometry.ped_x(), ped.y, vehicle_footprint(vehicle, geometry)) < r * r;
}

bool ped_in_conflict_zone(double y, const RoadGeometry & geometry) noexcept
{
  const Rect zone = geometry.conflict_zone();
  return y > zone.y_lo && y < zone.y_hi;
}

bool vehicle_in_conflict_zone(const VehicleState & vehicle, const RoadGeometry & geometry) noexcept
{
  const Rect zone = geometry.conflict_zone();
  return vehicle.x > zone.x_lo && vehicle.rear() < zone.x_hi;
}

}  // namespace xwalk
