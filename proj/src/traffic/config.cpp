#include "xwalk/traffic/config.hpp"

#include "xwalk/core/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace xwalk
{

namespace
{
void require(bool ok, const char * what)
{
  if (!ok) {
    throw InvalidArgument(what);
  }
}

template <typename T>
void read_opt(const nlohmann::json & j, const char * key, T & out)
{
  if (const auto it = j.find(key); it != j.end()) {
    it->get_to(out);
  }
}
}  // namespace

void TrafficConfig::validate() const
{
  require(std::isfinite(mean_headway) && mean_headway > 0.0, "mean_headway must be positive");
  require(min_headway > 0.0, "min_headway must be positive");
  require(min_headway < mean_headway, "min_headway must be below mean_headway");
  for (const double g : forced_safe_gaps) {
    if (!(g > mean_headway)) {
      throw InvalidArgument(
        fmt::format("forced gap {} s must exceed mean_headway {} s", g, mean_headway));
    }
  }
  double forced_total = 0.0;
  for (const double g : forced_safe_gaps) {
    forced_total += g;
  }
  require(forced_gap_window >= forced_total, "forced_gap_window too short for the forced gaps");
  require(tick_dt > 0.0 && std::isfinite(tick_dt), "tick_dt must be positive");
  require(v_max > 0.0 && a_max > 0.0 && b_comf > 0.0 && b_max > 0.0,
          "v_max, a_max, b_comf and b_max must be positive");
  require(b_comf <= b_max, "b_comf must not exceed b_max");
  require(idm_time_headway >= 0.0 && idm_min_spacing > 0.0 && idm_exponent > 0.0,
          "invalid IDM parameters");
  require(vehicle_length > 0.0 && vehicle_width > 0.0, "vehicle dimensions must be positive");
}

void RoadGeometry::validate(const TrafficConfig & traffic) const
{
  require(crossing_length > 0.0, "crossing_length must be positive");
  require(crosswalk_width > 0.0, "crosswalk_width must be positive");
  require(lane_width > 0.0 && lane_offset >= 0.0, "invalid lane placement");
  require(lane_offset + lane_width <= crossing_length,
          "conflict zone must lie within the crossing");
  require(traffic.vehicle_width <= lane_width, "vehicle wider than lane");
  require(ped_radius > 0.0, "ped_radius must be positive");
  require(downstream_length > 0.0, "downstream_length must be positive");
  const double stopping = traffic.v_max * traffic.v_max / (2.0 * traffic.b_comf);
  if (!(vehicle_entry_offset > stopping)) {
    throw InvalidArgument(fmt::format(
      "vehicle_entry_offset {} m must exceed the stopping distance {:.1f} m", vehicle_entry_offset,
      stopping));
  }
}

void to_json(nlohmann::json & j, const TrafficConfig & c)
{
  j = nlohmann::json{
    {"mean_headway", c.mean_headway},
    {"forced_safe_gaps", c.forced_safe_gaps},
    {"forced_gap_window", c.forced_gap_window},
    {"min_headway", c.min_headway},
    {"v_max", c.v_max},
    {"a_max", c.a_max},
    {"b_comf", c.b_comf},
    {"b_max", c.b_max},
    {"idm_time_headway", c.idm_time_headway},
    {"idm_min_spacing", c.idm_min_spacing},
    {"idm_exponent", c.idm_exponent},
    {"vehicle_length", c.vehicle_length},
    {"vehicle_width", c.vehicle_width},
    {"seed", c.seed},
    {"tick_dt", c.tick_dt},
  };
}

void from_json(const nlohmann::json & j, TrafficConfig & c)
{
  read_opt(j, "mean_headway", c.mean_headway);
  read_opt(j, "forced_safe_gaps", c.forced_safe_gaps);
  read_opt(j, "forced_gap_window", c.forced_gap_window);
  read_opt(j, "min_headway", c.min_headway);
  read_opt(j, "v_max", c.v_max);
  read_opt(j, "a_max", c.a_max);
  read_opt(j, "b_comf", c.b_comf);
  read_opt(j, "b_max", c.b_max);
  read_opt(j, "idm_time_headway", c.idm_time_headway);
  read_opt(j, "idm_min_spacing", c.idm_min_spacing);
  read_opt(j, "idm_exponent", c.idm_exponent);
  read_opt(j, "vehicle_length", c.vehicle_length);
  read_opt(j, "vehicle_width", c.vehicle_width);
  read_opt(j, "seed", c.seed);
  read_opt(j, "tick_dt", c.tick_dt);
}

void to_json(nlohmann::json & j, const RoadGeometry & g)
{
  j = nlohmann::json{
    {"crossing_length", g.crossing_length},
    {"crosswalk_width", g.crosswalk_width},
    {"lane_width", g.lane_width},
    {"lane_offset", g.lane_offset},
    {"vehicle_entry_offset", g.vehicle_entry_offset},
    {"downstream_length", g.downstream_length},
    {"ped_radius", g.ped_radius},
  };
}

void from_json(const nlohmann::json & j, RoadGeometry & g)
{
  read_opt(j, "crossing_length", g.crossing_length);
  read_opt(j, "crosswalk_width", g.crosswalk_width);
  read_opt(j, "lane_width", g.lane_width);
  read_opt(j, "lane_offset", g.lane_offset);
  read_opt(j, "vehicle_entry_offset", g.vehicle_entry_offset);
  read_opt(j, "downstream_length", g.downstream_length);
  read_opt(j, "ped_radius", g.ped_radius);
}

}  // namespace xwalk
