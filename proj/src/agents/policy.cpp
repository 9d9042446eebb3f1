#include "xwalk/agents/policy.hpp"

#include "xwalk/core/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace xwalk
{

void GapAcceptancePolicy::validate(double speed_cap) const
{
  if (!(accept_threshold > 0.0)) {
    throw InvalidArgument(fmt::format("accept_threshold must be positive, got {}", accept_threshold));
  }
  if (!(desired_speed > 0.0 && desired_speed <= speed_cap)) {
    throw InvalidArgument(
      fmt::format("desired_speed {} outside (0, {}]", desired_speed, speed_cap));
  }
  if (!(reaction_delay >= 0.0)) {
    throw InvalidArgument("reaction_delay must be non-negative");
  }
  if (glance && !(glance->phone_dwell > 0.0 && glance->road_dwell > 0.0)) {
    throw InvalidArgument("glance dwell times must be positive");
  }
  if (!(patience >= 0.0) || !(threshold_decay >= 0.0) || !(threshold_jitter >= 0.0) ||
      !(threshold_floor >= 0.0) || !(speed_jitter >= 0.0) || !(ramp_accel >= 0.0) ||
      !(ramp_jitter >= 0.0) || !(reaction_jitter >= 0.0)) {
    throw InvalidArgument(
      "patience, threshold and walking jitter terms must be non-negative");
  }
}

void to_json(nlohmann::json & j, const GlanceCycle & g)
{
  j = {{"phone_dwell", g.phone_dwell}, {"road_dwell", g.road_dwell}};
}

void from_json(const nlohmann::json & j, GlanceCycle & g)
{
  g.phone_dwell = j.at("phone_dwell").get<double>();
  g.road_dwell = j.at("road_dwell").get<double>();
}

void to_json(nlohmann::json & j, const GapAcceptancePolicy & p)
{
  j = {
    {"accept_threshold", p.accept_threshold},
    {"desired_speed", p.desired_speed},
    {"reaction_delay", p.reaction_delay},
    {"reaction_jitter", p.reaction_jitter},
    {"glance", p.glance ? nlohmann::json(*p.glance) : nlohmann::json(nullptr)},
    {"patience", p.patience},
    {"threshold_decay", p.threshold_decay},
    {"threshold_jitter", p.threshold_jitter},
    {"threshold_floor", p.threshold_floor},
    {"speed_jitter", p.speed_jitter},
    {"ramp_accel", p.ramp_accel},
    {"ramp_jitter", p.ramp_jitter},
  };
}

void from_json(const nlohmann::json & j, GapAcceptancePolicy & p)
{
  p.accept_threshold = j.at("accept_threshold").get<double>();
  p.desired_speed = j.at("desired_speed").get<double>();
  p.reaction_delay = j.value("reaction_delay", p.reaction_delay);
  p.reaction_jitter = j.value("reaction_jitter", p.reaction_jitter);
  if (const auto it = j.find("glance"); it != j.end() && !it->is_null()) {
    p.glance = it->get<GlanceCycle>();
  } else {
    p.glance.reset();
  }
  p.patience = j.value("patience", p.patience);
  p.threshold_decay = j.value("threshold_decay", p.threshold_decay);
  p.threshold_jitter = j.value("threshold_jitter", p.threshold_jitter);
  p.threshold_floor = j.value("threshold_floor", p.threshold_floor);
  p.speed_jitter = j.value("speed_jitter", p.speed_jitter);
  p.ramp_accel = j.value("ramp_accel", p.ramp_accel);
  p.ramp_jitter = j.value("ramp_jitter", p.ramp_jitter);
}

double perceived_gap(
  const PedestrianState & /*ped*/, std::span<const VehicleState> vehicles,
  const RoadGeometry & geometry)
{
  const double line = geometry.conflict_zone().x_lo;
  const VehicleState * nearest = nullptr;
  for (const VehicleState & v : vehicles) {
    if (v.x < line && (nearest == nullptr || v.x > nearest->x)) {
      nearest = &v;
    }
  }
  if (nearest == nullptr || nearest->v <= 0.0) {
    return kNoVehicle;
  }
  return (line - nearest->x) / nearest->v;
}

}  // namespace xwalk
