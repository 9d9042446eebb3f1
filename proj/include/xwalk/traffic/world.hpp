#pragma once

#include "xwalk/traffic/arrivals.hpp"
#include "xwalk/traffic/config.hpp"
#include "xwalk/traffic/vehicle.hpp"
#include "xwalk/trial/pedestrian.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace xwalk
{

struct TrafficEvents
{
  std::vector<std::int64_t> spawned;
  std::vector<std::int64_t> despawned;
};

/// Ticks a lone vehicle needs from the spawn point (at rest) until its front
/// bumper reaches the crosswalk near edge.
std::int64_t free_flow_lead_ticks(const TrafficConfig & config, const RoadGeometry & geometry);

/// Fixed-tick single-lane road.
///
/// The clock is the trial clock: tick 0 is the start of the trial. A world
/// built from a schedule starts at tick -free_flow_lead_ticks() so that every
/// scheduled vehicle can be spawned on time; preroll() advances it to tick 0
/// with the pedestrian waiting on the curb.
class TrafficWorld
{
public:
  TrafficWorld(TrafficConfig config, RoadGeometry geometry, ArrivalSchedule schedule);

  /// Empty road without arrivals, starting at `start_tick`. Used to stage
  /// hand-built scenarios together with place_vehicle().
  static TrafficWorld without_arrivals(
    TrafficConfig config, RoadGeometry geometry, std::int64_t start_tick = 0);

  void preroll(const PedestrianState & ped);

  /// Advances one tick: acceleration from car-following and yielding, then
  /// semi-implicit Euler, spawning and despawning. Throws IntegrityError on
  /// vehicle overlap.
  TrafficEvents step(const PedestrianState & ped);

  /// Inserts a vehicle keeping the downstream-first ordering.
  void place_vehicle(VehicleState vehicle);

  std::int64_t tick() const noexcept { return tick_; }
  double time() const noexcept { return static_cast<double>(tick_) * config_.tick_dt; }
  /// Ordered downstream first, so vehicles()[i - 1] leads vehicles()[i].
  std::span<const VehicleState> vehicles() const noexcept { return vehicles_; }
  const TrafficConfig & config() const noexcept { return config_; }
  const RoadGeometry & geometry() const noexcept { return geometry_; }
  const ArrivalSchedule & schedule() const noexcept { return schedule_; }

private:
  TrafficWorld(TrafficConfig config, RoadGeometry geometry, std::int64_t start_tick);

  void spawn_due();
  void check_integrity() const;
  void realize_forced_gaps();
  /// Times the front bumpers of `ids` reach x = 0 with nobody on the
  /// crossing, interpolated within the tick.
  std::vector<std::optional<double>> crossing_times(
    std::span<const std::int64_t> ids, double horizon) const;

  TrafficConfig config_;
  RoadGeometry geometry_;
  ArrivalSchedule schedule_;
  std::vector<std::int64_t> spawn_ticks_;
  std::size_t next_spawn_ = 0;
  std::int64_t tick_ = 0;
  std::vector<VehicleState> vehicles_;
};

}  // namespace xwalk
