#pragma once

#include "xwalk/traffic/config.hpp"

#include <cstddef>
#include <vector>

namespace xwalk
{

/// Nominal arrival times of vehicles at the crosswalk, in trial seconds.
///
/// A vehicle with schedule time s enters the road at the spawn point so that,
/// travelling unimpeded, its front bumper reaches the crosswalk near edge at
/// trial time s. Differences between entries are therefore the headways a
/// pedestrian sees at the curb.
struct ArrivalSchedule
{
  std::vector<double> spawn_times;
  /// forced_gap_indices[k] = i means the headway spawn_times[i+1] - spawn_times[i]
  /// is exactly TrafficConfig::forced_safe_gaps[k].
  std::vector<std::size_t> forced_gap_indices;

  std::vector<double> headways() const;
};

/// Shifted-exponential headways (mean `mean_headway`, support starting at
/// `min_headway`) with the forced safe gaps injected once within the first
/// `forced_gap_window` seconds. Deterministic in `config.seed`.
ArrivalSchedule generate_arrival_schedule(const TrafficConfig & config, double horizon);

/// Headway between vehicle i and vehicle i + 1. Throws std::out_of_range.
double measured_gap(const ArrivalSchedule & schedule, std::size_t i);

}  // namespace xwalk
