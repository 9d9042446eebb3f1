#include "xwalk/analytics/conflict.hpp"

#include "xwalk/traffic/collision.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace xwalk
{

namespace
{
constexpr double kGolden = 0.6180339887498949;
constexpr double kTimeTol = 1e-10;
}  // namespace

std::optional<double> time_to_collision(
  double ped_y, double ped_speed, const VehicleState & vehicle, const RoadGeometry & geometry,
  double horizon)
{
  const Rect box = vehicle_footprint(vehicle, geometry);
  const double px = geometry.ped_x();
  const double r2 = geometry.ped_radius * geometry.ped_radius;
  // In the vehicle's frame the pedestrian moves on a straight line, so the
  // distance to the box is convex in time.
  auto dist2 = [&](double t) {
    return squared_distance(px - vehicle.v * t, ped_y + ped_speed * t, box);
  };

  if (dist2(0.0) < r2) {
    return 0.0;
  }
  double lo = 0.0;
  double hi = horizon;
  double x1 = hi - kGolden * (hi - lo);
  double x2 = lo + kGolden * (hi - lo);
  double f1 = dist2(x1);
  double f2 = dist2(x2);
  while (hi - lo > kTimeTol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = dist2(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = dist2(x2);
    }
  }
  const double t_min = 0.5 * (lo + hi);
  if (!(dist2(t_min) < r2)) {
    return std::nullopt;
  }

  lo = 0.0;
  hi = t_min;
  while (hi - lo > kTimeTol) {
    const double mid = 0.5 * (lo + hi);
    (dist2(mid) < r2 ? hi : lo) = mid;
  }
  return hi;
}

std::vector<TtcSample> compute_ttc_series(
  const TrialRecord & record, const RoadGeometry & geometry, double horizon)
{
  std::vector<TtcSample> out;
  const double dt = record.dt();
  for (int second = 0;; ++second) {
    const auto k = std::llround(second / dt);
    if (record.ticks.empty() || k > record.ticks.back().k) {
      break;
    }
    const auto it = std::lower_bound(
      record.ticks.begin(), record.ticks.end(), k,
      [](const TickRecord & tick, std::int64_t key) { return tick.k < key; });
    if (it == record.ticks.end() || it->k != k) {
      continue;
    }
    std::optional<double> best;
    for (const VehicleState & v : it->vehicles) {
      const auto ttc = time_to_collision(it->ped.y, it->ped.speed, v, geometry, horizon);
      if (ttc && (!best || *ttc < *best)) {
        best = ttc;
      }
    }
    if (best) {
      out.push_back({it->t, *best});
    }
  }
  return out;
}

std::optional<ZoneInterval> ped_zone_interval(const TrialRecord & record, const RoadGeometry & geometry)
{
  std::optional<ZoneInterval> out;
  for (const TickRecord & tick : record.ticks) {
    const bool inside = ped_in_conflict_zone(tick.ped.y, geometry);
    if (!out) {
      if (inside) {
        out = ZoneInterval{tick.k, std::nullopt};
      }
    } else if (!inside) {
      out->exit_tick = tick.k;
      break;
    }
  }
  return out;
}

std::vector<std::pair<std::int64_t, ZoneInterval>> vehicle_zone_intervals(
  const TrialRecord & record, const RoadGeometry & geometry)
{
  std::map<std::int64_t, ZoneInterval> intervals;
  for (const TickRecord & tick : record.ticks) {
    for (const VehicleState & v : tick.vehicles) {
      const bool inside = vehicle_in_conflict_zone(v, geometry);
      auto it = intervals.find(v.id);
      if (it == intervals.end()) {
        if (inside) {
          intervals.emplace(v.id, ZoneInterval{tick.k, std::nullopt});
        }
      } else if (!inside && !it->second.exit_tick) {
        it->second.exit_tick = tick.k;
      }
    }
  }
  // A vehicle that left the log (despawned) while inside never happens: the
  // despawn point is downstream of the zone.
  return {intervals.begin(), intervals.end()};
}

std::optional<double> compute_pet(const TrialRecord & record, const RoadGeometry & geometry)
{
  const auto ped = ped_zone_interval(record, geometry);
  if (!ped) {
    return std::nullopt;
  }
  std::optional<std::int64_t> best_ticks;
  for (const auto & [id, veh] : vehicle_zone_intervals(record, geometry)) {
    std::int64_t gap = 0;
    if (ped->exit_tick && *ped->exit_tick <= veh.entry_tick) {
      gap = veh.entry_tick - *ped->exit_tick;
    } else if (veh.exit_tick && *veh.exit_tick <= ped->entry_tick) {
      gap = ped->entry_tick - *veh.exit_tick;
    }
    if (!best_ticks || gap < *best_ticks) {
      best_ticks = gap;
    }
  }
  if (!best_ticks) {
    return std::nullopt;
  }
  return static_cast<double>(*best_ticks) * record.dt();
}

}  // namespace xwalk
