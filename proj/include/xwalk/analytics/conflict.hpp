#pragma once

#include "xwalk/traffic/config.hpp"
#include "xwalk/traffic/vehicle.hpp"
#include "xwalk/trial/trial.hpp"

#include <optional>
#include <vector>

namespace xwalk
{

struct TtcSample
{
  double t;    // s, sample time (whole seconds)
  double ttc;  // s, minimum over vehicles on a collision course
};

inline constexpr double kDefaultTtcHorizon = 60.0;

/// Time until the pedestrian disc and the vehicle footprint first overlap
/// when both keep their current velocity, or std::nullopt if they never do
/// within `horizon`. Zero if they already overlap.
std::optional<double> time_to_collision(
  double ped_y, double ped_speed, const VehicleState & vehicle, const RoadGeometry & geometry,
  double horizon = kDefaultTtcHorizon);

/// TTC at every whole second of the trial. Seconds without any collision
/// course are omitted.
std::vector<TtcSample> compute_ttc_series(
  const TrialRecord & record, const RoadGeometry & geometry, double horizon = kDefaultTtcHorizon);

/// Zone occupancy on the tick grid: entry is the first tick inside the
/// conflict zone, exit the first tick after that back outside. An exit that
/// never happens is std::nullopt.
struct ZoneInterval
{
  std::int64_t entry_tick;
  std::optional<std::int64_t> exit_tick;
};

std::optional<ZoneInterval> ped_zone_interval(const TrialRecord & record, const RoadGeometry & geometry);
/// One interval per vehicle id that entered the zone, in id order.
std::vector<std::pair<std::int64_t, ZoneInterval>> vehicle_zone_intervals(
  const TrialRecord & record, const RoadGeometry & geometry);

/// Post-encroachment time, minimum over vehicles, symmetric in passing
/// order; zero when the occupancies overlap. Undefined when the pedestrian
/// never entered the zone or no vehicle traversed it.
std::optional<double> compute_pet(const TrialRecord & record, const RoadGeometry & geometry);

}  // namespace xwalk
