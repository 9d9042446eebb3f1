#include "xwalk/traffic/world.hpp"

#include "xwalk/core/errors.hpp"
#include "xwalk/traffic/car_following.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace xwalk
{

namespace
{
constexpr double kOverlapTolerance = 1e-9;
// Slack when mapping schedule times onto the tick grid: a time that is an
// exact multiple of dt up to rounding noise lands on that tick, not the next.
constexpr double kTickSlack = 1e-9;
constexpr int kGapRealizePasses = 4;
constexpr double kRolloutSlack = 120.0;  // s past the last spawn
}  // namespace

std::int64_t free_flow_lead_ticks(const TrafficConfig & config, const RoadGeometry & geometry)
{
  VehicleState probe;
  probe.x = -geometry.vehicle_entry_offset;
  probe.length = config.vehicle_length;
  std::int64_t ticks = 0;
  while (probe.x < 0.0) {
    const double a = car_following_accel(probe, nullptr, config);
    probe.v = std::clamp(probe.v + a * config.tick_dt, 0.0, config.v_max);
    probe.x += probe.v * config.tick_dt;
    ++ticks;
  }
  return ticks;
}

TrafficWorld::TrafficWorld(TrafficConfig config, RoadGeometry geometry, std::int64_t start_tick)
: config_(std::move(config)), geometry_(geometry), tick_(start_tick)
{
  config_.validate();
  geometry_.validate(config_);
}

TrafficWorld::TrafficWorld(TrafficConfig config, RoadGeometry geometry, ArrivalSchedule schedule)
: TrafficWorld(std::move(config), geometry, 0)
{
  schedule_ = std::move(schedule);
  const std::int64_t lead = free_flow_lead_ticks(config_, geometry_);
  tick_ = -lead;
  spawn_ticks_.reserve(schedule_.spawn_times.size());
  for (const double s : schedule_.spawn_times) {
    const auto nominal = static_cast<std::int64_t>(std::ceil(s / config_.tick_dt - kTickSlack));
    spawn_ticks_.push_back(nominal - lead);
  }
  realize_forced_gaps();
  spawn_due();
}

std::vector<std::optional<double>> TrafficWorld::crossing_times(
  std::span<const std::int64_t> ids, double horizon) const
{
  // Traffic-only rollout with the pedestrian on the curb.
  TrafficWorld probe = *this;
  const PedestrianState curb;
  std::vector<std::optional<double>> out(ids.size());
  std::vector<std::optional<double>> prev_x(ids.size());
  std::size_t open = ids.size();
  while (open > 0 && probe.time() <= horizon) {
    for (const VehicleState & v : probe.vehicles_) {
      const auto it = std::find(ids.begin(), ids.end(), v.id);
      if (it == ids.end()) {
        continue;
      }
      const auto k = static_cast<std::size_t>(it - ids.begin());
      if (out[k]) {
        continue;
      }
      if (v.x >= 0.0) {
        double t = probe.time();
        if (prev_x[k]) {
          t -= v.x / (v.x - *prev_x[k]) * config_.tick_dt;
        }
        out[k] = t;
        --open;
      } else {
        prev_x[k] = v.x;
      }
    }
    probe.step(curb);
  }
  return out;
}

void TrafficWorld::realize_forced_gaps()
{
  // Queues behind short headways delay the vehicle that opens a forced gap,
  // which would shrink the gap by the time it reaches the crosswalk. Delay
  // every later vehicle by the same amount so the gap arrives intact.
  const auto & forced = schedule_.forced_gap_indices;
  if (forced.empty() || spawn_ticks_.empty()) {
    return;
  }
  const double dt = config_.tick_dt;
  const double horizon = schedule_.spawn_times.back() + kRolloutSlack;
  for (const std::size_t g : forced) {
    if (g + 1 >= spawn_ticks_.size()) {
      continue;
    }
    const double target = schedule_.spawn_times[g + 1] - schedule_.spawn_times[g];
    const std::array<std::int64_t, 2> ids{
      static_cast<std::int64_t>(g), static_cast<std::int64_t>(g + 1)};
    for (int pass = 0; pass < kGapRealizePasses; ++pass) {
      const auto t = crossing_times(ids, horizon);
      if (!t[0] || !t[1]) {
        break;
      }
      const auto shift = static_cast<std::int64_t>(std::llround((target - (*t[1] - *t[0])) / dt));
      if (shift == 0) {
        break;
      }
      for (std::size_t j = g + 1; j < spawn_ticks_.size(); ++j) {
        spawn_ticks_[j] += shift;
      }
    }
  }

  // The same delays push the gaps later. Traffic on its own is time
  // invariant, so translating the whole stream earlier keeps every gap and
  // brings the last one back inside the window.
  std::vector<std::int64_t> ends;
  for (const std::size_t g : forced) {
    if (g + 1 < spawn_ticks_.size()) {
      ends.push_back(static_cast<std::int64_t>(g + 1));
    }
  }
  const auto t = crossing_times(ends, horizon);
  double latest = -std::numeric_limits<double>::infinity();
  for (const auto & e : t) {
    if (e) {
      latest = std::max(latest, *e);
    }
  }
  const double excess = latest - config_.forced_gap_window;
  if (excess > 0.0) {
    const auto back = static_cast<std::int64_t>(std::ceil(excess / dt - kTickSlack));
    for (auto & k : spawn_ticks_) {
      k -= back;
    }
    tick_ -= back;
  }
}

TrafficWorld TrafficWorld::without_arrivals(
  TrafficConfig config, RoadGeometry geometry, std::int64_t start_tick)
{
  return TrafficWorld(std::move(config), geometry, start_tick);
}

void TrafficWorld::preroll(const PedestrianState & ped)
{
  while (tick_ < 0) {
    step(ped);
  }
}

void TrafficWorld::place_vehicle(VehicleState vehicle)
{
  vehicle.length = vehicle.length > 0.0 ? vehicle.length : config_.vehicle_length;
  const auto pos = std::find_if(vehicles_.begin(), vehicles_.end(), [&](const VehicleState & v) {
    return v.x < vehicle.x;
  });
  vehicles_.insert(pos, vehicle);
  check_integrity();
}

TrafficEvents TrafficWorld::step(const PedestrianState & ped)
{
  const double dt = config_.tick_dt;
  const Rect zone = geometry_.conflict_zone();
  std::vector<VehicleState> next = vehicles_;

  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    const VehicleState & cur = vehicles_[i];
    const VehicleState * leader = i > 0 ? &vehicles_[i - 1] : nullptr;
    const double a_follow = car_following_accel(cur, leader, config_);
    const auto required = yield_decision(cur, ped, geometry_, config_);

    double a_cmd = a_follow;
    YieldState yield = YieldState::None;
    if (required) {
      const double a_yield = -std::min(*required, config_.b_max);
      if (a_yield < a_follow) {
        a_cmd = a_yield;
        yield = *required <= config_.b_max ? YieldState::Yielding : YieldState::Emergency;
      }
    }

    double v_new = std::clamp(cur.v + a_cmd * dt, 0.0, config_.v_max);
    if (required && cur.x <= zone.x_lo && cur.x + v_new * dt > zone.x_lo) {
      // Semi-implicit Euler can carry a braking vehicle a few centimetres past
      // its stop line on the final tick. Stop exactly at the line when the
      // braking that takes is within b_max.
      const double v_stop = std::max(0.0, (zone.x_lo - cur.x) / dt);
      if ((v_stop - cur.v) / dt >= -config_.b_max) {
        v_new = std::min(v_new, v_stop);
        yield = YieldState::Yielding;
      }
    }

    VehicleState & out = next[i];
    out.a = (v_new - cur.v) / dt;
    out.v = v_new;
    out.x = cur.x + v_new * dt;
    out.yield = yield;
  }

  vehicles_ = std::move(next);
  ++tick_;

  TrafficEvents events;
  const std::size_t before = vehicles_.size();
  spawn_due();
  for (std::size_t i = before; i < vehicles_.size(); ++i) {
    events.spawned.push_back(vehicles_[i].id);
  }
  const double despawn_x = geometry_.despawn_x();
  while (!vehicles_.empty() && vehicles_.front().rear() > despawn_x) {
    events.despawned.push_back(vehicles_.front().id);
    vehicles_.erase(vehicles_.begin());
  }
  check_integrity();
  return events;
}

void TrafficWorld::spawn_due()
{
  const double entry = -geometry_.vehicle_entry_offset;
  while (next_spawn_ < spawn_ticks_.size() && spawn_ticks_[next_spawn_] <= tick_) {
    if (!vehicles_.empty() && vehicles_.back().rear() - entry < config_.idm_min_spacing) {
      break;  // entry blocked; retry next tick
    }
    VehicleState v;
    v.id = static_cast<std::int64_t>(next_spawn_);
    v.x = entry;
    v.length = config_.vehicle_length;
    v.width = config_.vehicle_width;
    v.spawn_time = time();
    vehicles_.push_back(v);
    ++next_spawn_;
  }
}

void TrafficWorld::check_integrity() const
{
  for (std::size_t i = 1; i < vehicles_.size(); ++i) {
    const double gap = vehicles_[i - 1].rear() - vehicles_[i].x;
    if (gap < -kOverlapTolerance) {
      throw IntegrityError(fmt::format(
        "tick {}: vehicle {} overlaps vehicle {} by {:.6f} m", tick_, vehicles_[i].id,
        vehicles_[i - 1].id, -gap));
    }
  }
}

}  // namespace xwalk
