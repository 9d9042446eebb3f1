#pragma once

#include "xwalk/agents/agent.hpp"
#include "xwalk/agents/policy.hpp"
#include "xwalk/trial/session.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace xwalk
{

struct PopulationMember
{
  std::string id;
  ParticipantTags tags;
  /// One policy per condition, indexed by index_of(Condition).
  std::array<GapAcceptancePolicy, 3> policies;

  const GapAcceptancePolicy & policy(Condition c) const { return policies[index_of(c)]; }
};

struct PolicyPopulation
{
  std::vector<PopulationMember> members;
  AgentTuning tuning;

  void validate() const;
};

void to_json(nlohmann::json & j, const PopulationMember & m);
void from_json(const nlohmann::json & j, PopulationMember & m);
void to_json(nlohmann::json & j, const PolicyPopulation & p);
void from_json(const nlohmann::json & j, PolicyPopulation & p);

/// Per-condition means a calibrated population should reproduce.
struct ConditionTargets
{
  double wait_time = 18.0;                // s
  double crossing_speed = 1.0;            // m/s
  std::optional<double> pct_phone_wait;   // %, distracted conditions only
};

struct CalibrationTargets
{
  std::array<ConditionTargets, 3> conditions;
  double female_share = 0.405;
  double older_share = 0.3;

  /// Wait 18.0 / 21.2 / 21.3 s, crossing speed 1.0 / 0.9 / 1.0 m/s and
  /// phone share while waiting 72.9 / 74.7 %.
  static CalibrationTargets behavioural_table();
};

void to_json(nlohmann::json & j, const CalibrationTargets & t);
void from_json(const nlohmann::json & j, CalibrationTargets & t);

/// Population shape and the simulation used to evaluate it.
struct CalibrationOptions
{
  TrafficConfig traffic;
  RoadGeometry geometry;
  TrialSettings settings;
  int successes_per_condition = 10; // per member, per bisection evaluation
  int bisection_steps = 14;
  int evaluation_budget = 40;       // trials per member before it counts as never crossing
  int rounds = 2;                   // alternations between threshold and dwell fits
  double threshold_sd = 1.0;        // s, between-member spread
  double speed_sd = 0.08;           // m/s
  double reaction_mean = 0.4;       // s
  double reaction_sd = 0.1;         // s
  double reaction_jitter = 0.5;     // log-sd, commit to commit
  double road_dwell = 1.4;          // s, mean road glance
  double patience = 15.0;           // s
  double threshold_decay = 0.2;     // s per s
  double threshold_jitter = 0.5;    // s
  double threshold_floor = 4.0;     // s
  double speed_jitter = 0.1;        // log-sd, trial to trial
  double ramp_accel = 1.0;          // m/s^2
  double ramp_jitter = 0.25;        // log-sd, trial to trial
};

/// Desired walking speed whose crossing (ramp at `ramp_accel`, capped by the
/// pedestrian acceleration limit, then constant speed) averages `crossing_speed`. Throws
/// InvalidArgument when no admissible speed achieves it.
double desired_speed_for(
  double crossing_speed, double crossing_length, const PedLimits & limits, double ramp_accel = 0.0);

/// Samples `n` members (fixed per-member latent draws) and fits the
/// per-condition threshold means and phone dwell times by bisection so the
/// simulated sessions hit the targets. Throws InvalidArgument on n == 0 or
/// infeasible targets.
PolicyPopulation calibrated_population(
  const CalibrationTargets & targets, std::size_t n, std::uint64_t seed,
  const CalibrationOptions & options = {});

InputSourceFactory agent_factory(const PopulationMember & member, const AgentTuning & tuning);

/// Session configuration for one member.
SessionConfig member_session(
  const PopulationMember & member, std::size_t index, std::uint64_t seed, const ConditionPlan & plan,
  const TrafficConfig & traffic, const RoadGeometry & geometry, const TrialSettings & settings);

/// Runs one session per member.
std::vector<SessionRecord> simulate_population(
  const PolicyPopulation & population, const ConditionPlan & plan, std::uint64_t seed,
  const TrafficConfig & traffic, const RoadGeometry & geometry, const TrialSettings & settings);

}  // namespace xwalk
