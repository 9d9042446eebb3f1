#pragma once

#include "xwalk/agents/policy.hpp"
#include "xwalk/core/rng.hpp"
#include "xwalk/trial/condition.hpp"
#include "xwalk/trial/trial.hpp"

#include <json.hpp>

#include <optional>

namespace xwalk
{

/// Behaviour constants shared by every synthetic participant.
struct AgentTuning
{
  double led_glance_latency = 0.2;  // s from a blue LED to looking up
  double led_recheck_window = 0.5;  // s after initiation in which a look-up can abort
  double maze_move_interval = 0.4;  // s between maze moves while on the phone
  int moves_per_maze = 12;

  bool operator==(const AgentTuning &) const = default;
};

void to_json(nlohmann::json & j, const AgentTuning & t);
void from_json(const nlohmann::json & j, AgentTuning & t);

/// Gap-accepting synthetic pedestrian.
///
/// Waits on the curb until a road glance shows a perceived gap of at least
/// the (possibly decayed) threshold, then walks off after the reaction delay.
/// In distracted conditions the head alternates between phone and road and
/// traffic is only visible during road glances; the cycle keeps running
/// through the reaction delay and the crossing. Under the LED treatment a
/// blue strip pulls the head up, and a look-up within the recheck window
/// that shows too short a gap makes the agent stop and wait again.
class PedestrianAgent : public InputSource
{
public:
  PedestrianAgent(
    GapAcceptancePolicy policy, Condition condition, std::uint64_t seed, AgentTuning tuning = {});

  std::optional<SourcedInput> next(const Observation & obs) override;

  /// Threshold in force at trial time t.
  double threshold_at(double t) const;
  double base_threshold() const noexcept { return threshold_; }

private:
  enum class Phase { Waiting, Reacting, Walking };

  double draw_dwell(Head head);
  std::optional<double> visible_gap(const Observation & obs) const;

  GapAcceptancePolicy policy_;
  Condition condition_;
  AgentTuning tuning_;
  Rng rng_;
  double threshold_;
  double speed_;  // this trial's walking speed and ramp
  double ramp_;

  Phase phase_ = Phase::Waiting;
  double commit_t_ = 0.0;
  double reaction_ = 0.0;  // drawn at each commit
  std::optional<double> initiation_t_;
  bool distracted_;
  Head head_ = Head::TowardRoad;
  double next_switch_t_ = 0.0;
  std::optional<double> led_pull_t_;
  bool led_handled_ = false;
  bool recheck_pending_ = false;
  double next_maze_t_ = 0.0;
  int maze_moves_ = 0;
};

}  // namespace xwalk
