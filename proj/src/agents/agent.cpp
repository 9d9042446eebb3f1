#include "xwalk/agents/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xwalk
{

namespace
{
constexpr double kTimeSlack = 1e-9;
constexpr double kMinThreshold = 0.05;
}  // namespace

void to_json(nlohmann::json & j, const AgentTuning & t)
{
  j = {
    {"led_glance_latency", t.led_glance_latency},
    {"led_recheck_window", t.led_recheck_window},
    {"maze_move_interval", t.maze_move_interval},
    {"moves_per_maze", t.moves_per_maze},
  };
}

void from_json(const nlohmann::json & j, AgentTuning & t)
{
  t.led_glance_latency = j.value("led_glance_latency", t.led_glance_latency);
  t.led_recheck_window = j.value("led_recheck_window", t.led_recheck_window);
  t.maze_move_interval = j.value("maze_move_interval", t.maze_move_interval);
  t.moves_per_maze = j.value("moves_per_maze", t.moves_per_maze);
}

PedestrianAgent::PedestrianAgent(
  GapAcceptancePolicy policy, Condition condition, std::uint64_t seed, AgentTuning tuning)
: policy_(std::move(policy)),
  condition_(condition),
  tuning_(tuning),
  rng_(seed),
  distracted_(has_phone(condition) && policy_.glance.has_value())
{
  policy_.validate();
  threshold_ =
    std::max(kMinThreshold, policy_.accept_threshold + policy_.threshold_jitter * rng_.normal());
  speed_ = policy_.desired_speed * std::exp(policy_.speed_jitter * rng_.normal());
  const double ramp_z = rng_.normal();
  ramp_ = policy_.ramp_accel > 0.0 ? policy_.ramp_accel * std::exp(policy_.ramp_jitter * ramp_z)
                                   : std::numeric_limits<double>::infinity();
  if (distracted_) {
    head_ = Head::TowardPhone;
    next_switch_t_ = draw_dwell(head_);
  }
}

double PedestrianAgent::threshold_at(double t) const
{
  const double overdue = std::max(0.0, t - policy_.patience);
  const double floor = std::min(threshold_, policy_.threshold_floor);
  return std::max(floor, threshold_ - policy_.threshold_decay * overdue);
}

double PedestrianAgent::draw_dwell(Head head)
{
  const double mean =
    head == Head::TowardPhone ? policy_.glance->phone_dwell : policy_.glance->road_dwell;
  return mean * (0.5 + rng_.uniform());
}

std::optional<double> PedestrianAgent::visible_gap(const Observation & obs) const
{
  if (obs.ped.head != Head::TowardRoad) {
    return std::nullopt;
  }
  return perceived_gap(obs.ped, obs.vehicles, *obs.geometry);
}

std::optional<SourcedInput> PedestrianAgent::next(const Observation & obs)
{
  const double t = obs.t;
  if (!initiation_t_ && obs.ped.crossing_initiated) {
    initiation_t_ = t;
  }

  if (distracted_) {
    bool pulled = false;
    if (condition_ == Condition::DistractedLed && !led_handled_) {
      if (obs.led.mode == LedMode::BlueFlashing && !led_pull_t_) {
        led_pull_t_ = t + tuning_.led_glance_latency;
      }
      if (led_pull_t_ && t + kTimeSlack >= *led_pull_t_) {
        led_handled_ = true;
        led_pull_t_.reset();
        pulled = true;
        if (head_ == Head::TowardPhone) {
          head_ = Head::TowardRoad;
          next_switch_t_ = t + draw_dwell(head_);
        }
        recheck_pending_ = true;
      }
    }
    if (!pulled && t + kTimeSlack >= next_switch_t_) {
      head_ = head_ == Head::TowardPhone ? Head::TowardRoad : Head::TowardPhone;
      next_switch_t_ = t + draw_dwell(head_);
    }
  }

  if (recheck_pending_ && obs.ped.head == Head::TowardRoad) {
    recheck_pending_ = false;
    if (initiation_t_ && t - *initiation_t_ <= tuning_.led_recheck_window + kTimeSlack) {
      const auto gap = visible_gap(obs);
      if (gap && *gap < threshold_at(t)) {
        phase_ = Phase::Waiting;
      }
    }
  }

  if (phase_ == Phase::Waiting) {
    // Sampling on the tick grid sees a gap up to one tick after it opened,
    // so a gap of exactly the threshold reads as up to dt short.
    const auto gap = visible_gap(obs);
    if (gap && *gap >= threshold_at(t) - obs.dt) {
      phase_ = Phase::Reacting;
      commit_t_ = t;
      reaction_ = policy_.reaction_delay * std::exp(policy_.reaction_jitter * rng_.normal());
    }
  }
  if (phase_ == Phase::Reacting && t - commit_t_ + kTimeSlack >= reaction_) {
    phase_ = Phase::Walking;
  }

  PedInput in;
  in.timestamp = obs.tick;
  in.walk = phase_ == Phase::Walking
              ? WalkCommand::walk(std::min(speed_, obs.ped.speed + ramp_ * obs.dt))
              : WalkCommand::stop();
  if (head_ != obs.ped.head) {
    in.head_toggle = head_;
  }
  if (
    distracted_ && head_ == Head::TowardPhone && obs.ped.head == Head::TowardPhone &&
    t + kTimeSlack >= next_maze_t_) {
    ++maze_moves_;
    in.maze_move = MazeMove{
      static_cast<MazeDirection>(rng_.below(4)), maze_moves_ % tuning_.moves_per_maze == 0};
    next_maze_t_ = t + tuning_.maze_move_interval;
  }
  return SourcedInput{in, false};
}

}  // namespace xwalk
