#pragma once

#include "xwalk/trial/trial.hpp"

#include <optional>
#include <vector>

namespace xwalk
{

struct CrossingVariables
{
  double wait_time = 0.0;  // s; the full trial length when never initiated
  std::optional<double> crossing_duration;      // completed crossings only
  std::optional<double> crossing_speed;         // crossing_length / duration
  std::optional<double> initial_walking_speed;  // peak speed within 1 s of initiation
};

/// Pedestrian acceleration from central differences of the speed trace.
/// Maxima run over the whole trial; averages over the crossing only (mean of
/// the positive and of the negative samples, decelerations reported positive).
struct Kinematics
{
  double max_accel = 0.0;
  double max_decel = 0.0;
  double avg_accel = 0.0;
  double avg_decel = 0.0;
};

struct DistractionAttributes
{
  double pct_phone_wait = 0.0;
  std::optional<double> pct_phone_cross;  // undefined when there were no crossing ticks
  double head_orientations_per_s = 0.0;   // road -> phone turns per second of trial
  bool head_turned_any = false;           // any head turn at all
};

inline constexpr double kInitialSpeedWindow = 1.0;  // s

/// Central-difference acceleration per tick (one-sided at the ends).
std::vector<double> ped_acceleration(const TrialRecord & record);

CrossingVariables compute_crossing(const TrialRecord & record);
Kinematics compute_kinematics(const TrialRecord & record);
DistractionAttributes compute_distraction(const TrialRecord & record);

}  // namespace xwalk
