#pragma once

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace xwalk
{

/// Vehicle arrival process and car-following parameters. SI units throughout.
struct TrafficConfig
{
  double mean_headway = 4.0;                     // s
  std::vector<double> forced_safe_gaps{5.0, 7.0};  // s, injected once per schedule
  double forced_gap_window = 60.0;               // s, forced gaps fall inside [0, window]
  double min_headway = 1.0;                      // s
  double v_max = 13.89;                          // m/s (50 km/h)
  double a_max = 2.5;                            // m/s^2
  double b_comf = 3.0;                           // m/s^2
  double b_max = 8.0;                            // m/s^2
  double idm_time_headway = 1.5;                 // s
  double idm_min_spacing = 2.0;                  // m
  double idm_exponent = 4.0;
  double vehicle_length = 4.5;                   // m
  double vehicle_width = 1.8;                    // m
  std::uint64_t seed = 0;
  double tick_dt = 1.0 / 60.0;                   // s

  /// Throws InvalidArgument naming the first violated invariant.
  void validate() const;
};

/// Axis-aligned rectangle in road coordinates: x along vehicle travel,
/// y along the pedestrian crossing axis.
struct Rect
{
  double x_lo;
  double x_hi;
  double y_lo;
  double y_hi;
};

/// Crossing geometry. The crosswalk near edge is x = 0; vehicles travel
/// toward +x. Curb B is y = 0 and curb A is y = crossing_length.
struct RoadGeometry
{
  double crossing_length = 5.0;        // m, pedestrian path B -> A
  double crosswalk_width = 2.5;        // m, along vehicle travel
  double lane_width = 3.5;             // m
  double lane_offset = 0.75;           // m, curb B to near lane edge
  double vehicle_entry_offset = 200.0; // m upstream of the crosswalk near edge
  double downstream_length = 30.0;     // m past the crosswalk far edge before despawn
  double ped_radius = 0.25;            // m

  Rect conflict_zone() const
  {
    return {0.0, crosswalk_width, lane_offset, lane_offset + lane_width};
  }
  double lane_center() const { return lane_offset + 0.5 * lane_width; }
  /// Pedestrians walk along the crosswalk centreline.
  double ped_x() const { return 0.5 * crosswalk_width; }
  double despawn_x() const { return crosswalk_width + downstream_length; }

  /// Checks the geometry on its own and against the vehicle dynamics (the
  /// spawn point must leave room to stop from v_max).
  void validate(const TrafficConfig & traffic) const;
};

void to_json(nlohmann::json & j, const TrafficConfig & c);
void from_json(const nlohmann::json & j, TrafficConfig & c);
void to_json(nlohmann::json & j, const RoadGeometry & g);
void from_json(const nlohmann::json & j, RoadGeometry & g);

}  // namespace xwalk
