#pragma once

#include "xwalk/traffic/config.hpp"
#include "xwalk/traffic/vehicle.hpp"
#include "xwalk/trial/pedestrian.hpp"

#include <json.hpp>

#include <limits>
#include <optional>
#include <span>

namespace xwalk
{

/// Mean dwell times of the two-state phone/road glance process. Each dwell
/// is drawn uniformly on [0.5, 1.5] x mean.
struct GlanceCycle
{
  double phone_dwell = 3.6;  // s
  double road_dwell = 1.4;   // s

  bool operator==(const GlanceCycle &) const = default;
};

struct GapAcceptancePolicy
{
  double accept_threshold = 5.0;  // s, minimum perceived gap to commit
  double desired_speed = 1.4;     // m/s
  double reaction_delay = 0.3;    // s from commit to the first step
  double reaction_jitter = 0.0;   // log-sd, drawn at each commit
  std::optional<GlanceCycle> glance;  // none: eyes on the road throughout
  double patience = 60.0;         // s waited before the threshold starts to drop
  double threshold_decay = 0.0;   // s of threshold per s waited past patience
  double threshold_jitter = 0.0;  // s, sd of the per-trial threshold draw
  double threshold_floor = 0.0;   // s, decay stops here
  double speed_jitter = 0.0;      // log-sd of the per-trial walking speed
  double ramp_accel = 0.0;        // m/s^2, preferred speed-up; 0 walks off at the limit
  double ramp_jitter = 0.0;       // log-sd of the per-trial ramp

  /// Throws InvalidArgument.
  void validate(double speed_cap = 2.0) const;
  bool operator==(const GapAcceptancePolicy &) const = default;
};

void to_json(nlohmann::json & j, const GlanceCycle & g);
void from_json(const nlohmann::json & j, GlanceCycle & g);
void to_json(nlohmann::json & j, const GapAcceptancePolicy & p);
void from_json(const nlohmann::json & j, GapAcceptancePolicy & p);

inline constexpr double kNoVehicle = std::numeric_limits<double>::infinity();

/// Time until the nearest vehicle whose front bumper has not yet reached the
/// crosswalk near edge gets there at its current speed. kNoVehicle when no
/// such vehicle exists or it is stopped.
double perceived_gap(
  const PedestrianState & ped, std::span<const VehicleState> vehicles,
  const RoadGeometry & geometry);

}  // namespace xwalk
