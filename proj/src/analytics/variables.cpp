#include "xwalk/analytics/variables.hpp"

#include <algorithm>

namespace xwalk
{

namespace
{
constexpr double kTimeSlack = 1e-9;

std::size_t initiation_index(const TrialRecord & record)
{
  for (std::size_t i = 0; i < record.ticks.size(); ++i) {
    if (record.ticks[i].ped.crossing_initiated) {
      return i;
    }
  }
  return record.ticks.size();
}
}  // namespace

std::vector<double> ped_acceleration(const TrialRecord & record)
{
  const auto & ticks = record.ticks;
  const std::size_t n = ticks.size();
  std::vector<double> a(n, 0.0);
  if (n < 2) {
    return a;
  }
  const double dt = record.dt();
  a.front() = (ticks[1].ped.speed - ticks[0].ped.speed) / dt;
  a.back() = (ticks[n - 1].ped.speed - ticks[n - 2].ped.speed) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    a[i] = (ticks[i + 1].ped.speed - ticks[i - 1].ped.speed) / (2.0 * dt);
  }
  return a;
}

CrossingVariables compute_crossing(const TrialRecord & record)
{
  CrossingVariables out;
  const std::size_t init = initiation_index(record);
  if (init == record.ticks.size()) {
    out.wait_time = record.duration();
    return out;
  }
  const double t0 = record.ticks[init].t;
  out.wait_time = t0;

  double peak = 0.0;
  for (std::size_t i = init; i < record.ticks.size(); ++i) {
    if (record.ticks[i].t > t0 + kInitialSpeedWindow + kTimeSlack) {
      break;
    }
    peak = std::max(peak, record.ticks[i].ped.speed);
  }
  out.initial_walking_speed = peak;

  if (record.cross_end_tick) {
    const double duration = record.tick_time(*record.cross_end_tick) - t0;
    out.crossing_duration = duration;
    if (duration > 0.0) {
      out.crossing_speed = record.geometry.crossing_length / duration;
    }
  }
  return out;
}

Kinematics compute_kinematics(const TrialRecord & record)
{
  Kinematics out;
  const auto a = ped_acceleration(record);
  for (const double v : a) {
    out.max_accel = std::max(out.max_accel, v);
    out.max_decel = std::max(out.max_decel, -v);
  }
  const std::size_t init = initiation_index(record);
  double sum_pos = 0.0;
  double sum_neg = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  for (std::size_t i = init; i < a.size(); ++i) {
    if (a[i] > 0.0) {
      sum_pos += a[i];
      ++n_pos;
    } else if (a[i] < 0.0) {
      sum_neg -= a[i];
      ++n_neg;
    }
  }
  out.avg_accel = n_pos > 0 ? sum_pos / static_cast<double>(n_pos) : 0.0;
  out.avg_decel = n_neg > 0 ? sum_neg / static_cast<double>(n_neg) : 0.0;
  return out;
}

DistractionAttributes compute_distraction(const TrialRecord & record)
{
  DistractionAttributes out;
  std::size_t wait_ticks = 0;
  std::size_t wait_phone = 0;
  std::size_t cross_ticks = 0;
  std::size_t cross_phone = 0;
  std::size_t to_phone = 0;
  std::size_t turns = 0;
  for (std::size_t i = 0; i < record.ticks.size(); ++i) {
    const PedestrianState & p = record.ticks[i].ped;
    const bool phone = p.head == Head::TowardPhone;
    if (p.crossing_initiated) {
      ++cross_ticks;
      cross_phone += phone ? 1 : 0;
    } else {
      ++wait_ticks;
      wait_phone += phone ? 1 : 0;
    }
    if (i > 0 && record.ticks[i - 1].ped.head != p.head) {
      ++turns;
      to_phone += phone ? 1 : 0;
    }
  }
  if (wait_ticks > 0) {
    out.pct_phone_wait = 100.0 * static_cast<double>(wait_phone) / static_cast<double>(wait_ticks);
  }
  if (cross_ticks > 0) {
    out.pct_phone_cross =
      100.0 * static_cast<double>(cross_phone) / static_cast<double>(cross_ticks);
  }
  const double duration = record.duration();
  if (duration > 0.0) {
    out.head_orientations_per_s = static_cast<double>(to_phone) / duration;
  }
  out.head_turned_any = turns > 0;
  return out;
}

}  // namespace xwalk
