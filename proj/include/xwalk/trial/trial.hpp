#pragma once

#include "xwalk/traffic/config.hpp"
#include "xwalk/traffic/vehicle.hpp"
#include "xwalk/traffic/world.hpp"
#include "xwalk/trial/condition.hpp"
#include "xwalk/trial/led.hpp"
#include "xwalk/trial/pedestrian.hpp"
#include "xwalk/trial/yield_monitor.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xwalk
{

struct TrialSettings
{
  double duration = 60.0;            // s
  double yield_decel_threshold = 3.0;  // m/s^2
  double yield_speed_ratio = 0.5;
  double led_flash_hz = 2.0;
  PedLimits ped;

  /// Tick index at which an undecided trial times out.
  std::int64_t timeout_tick(double dt) const;
  void validate() const;
};

void to_json(nlohmann::json & j, const TrialSettings & s);
void from_json(const nlohmann::json & j, TrialSettings & s);

/// Bookkeeping carried with a trial. `seed` selects the scenario (the
/// arrival schedule); `attempt` counts re-presentations of that scenario.
struct TrialMeta
{
  std::string session_id;
  std::int64_t trial_index = 0;
  std::string participant_id;
  ParticipantTags participant;
  Condition condition = Condition::Control;
  std::uint64_t seed = 0;
  int scenario = 0;
  int attempt = 0;
  bool practice = false;

  bool operator==(const TrialMeta &) const = default;
};

struct TrialSetup
{
  TrafficConfig traffic;
  RoadGeometry geometry;
  TrialSettings settings;
  TrialMeta meta;
};

/// Seed for the behaviour of a synthetic participant in this trial. Differs
/// between attempts at the same scenario.
std::uint64_t agent_seed(const TrialMeta & meta) noexcept;

enum class Outcome : std::uint8_t { Success, Failed, TimeOut };
enum class FailureCause : std::uint8_t { Collision, SignificantYield };

std::string_view to_string(Outcome o) noexcept;
std::string_view to_string(FailureCause c) noexcept;
Outcome outcome_from_string(std::string_view s);
FailureCause failure_cause_from_string(std::string_view s);

struct TickRecord
{
  std::int64_t k = 0;
  double t = 0.0;
  PedestrianState ped;
  LedState led;
  std::vector<VehicleState> vehicles;
  /// Input that produced this tick from the previous one (absent at tick 0).
  std::optional<PedInput> input;
  /// The input was repeated because none arrived for this tick.
  bool held = false;

  bool operator==(const TickRecord &) const = default;
};

struct TrialRecord
{
  TrafficConfig traffic;
  RoadGeometry geometry;
  TrialSettings settings;
  TrialMeta meta;
  std::vector<TickRecord> ticks;
  std::optional<Outcome> outcome;
  std::optional<FailureCause> cause;
  std::optional<std::int64_t> wait_end_tick;
  std::optional<std::int64_t> cross_end_tick;

  double dt() const noexcept { return traffic.tick_dt; }
  Condition condition() const noexcept { return meta.condition; }
  double tick_time(std::int64_t k) const noexcept { return static_cast<double>(k) * dt(); }
  std::optional<double> wait_end_t() const;
  std::optional<double> cross_end_t() const;
  double duration() const;
};

/// What the pedestrian side sees before choosing the input for the next tick.
struct Observation
{
  std::int64_t tick = 0;
  double t = 0.0;
  double dt = 0.0;
  Condition condition = Condition::Control;
  PedestrianState ped;
  LedState led;
  std::span<const VehicleState> vehicles;
  const RoadGeometry * geometry = nullptr;
};

struct SourcedInput
{
  PedInput input;
  bool held = false;
};

/// Supplies one input per tick: a live client queue, a synthetic agent or a
/// recorded log. std::nullopt means the source is exhausted.
class InputSource
{
public:
  virtual ~InputSource() = default;
  virtual std::optional<SourcedInput> next(const Observation & obs) = 0;
};

/// Steps one trial tick by tick. Tick 0 is the initial state; every step()
/// applies the pedestrian input, steps the traffic against the new pedestrian
/// state, updates the LED, logs the tick and then checks the outcome in the
/// order collision, significant yield, completed crossing, timeout.
class TrialRunner
{
public:
  /// Builds the arrival schedule from `setup.meta.seed` and pre-rolls the road
  /// so traffic is flowing at tick 0.
  explicit TrialRunner(TrialSetup setup);
  /// Runs against a hand-staged world (no schedule, no pre-roll).
  TrialRunner(TrialSetup setup, TrafficWorld world);

  Observation observation() const;
  bool finished() const noexcept { return record_.outcome.has_value(); }
  const TickRecord & step(const SourcedInput & in);

  const TrialRecord & record() const noexcept { return record_; }
  TrialRecord take() && { return std::move(record_); }
  const TrafficWorld & world() const noexcept { return world_; }

private:
  void log_tick(std::optional<PedInput> input, bool held);
  void classify();

  TrialRecord record_;
  TrafficWorld world_;
  PedestrianState ped_;
  LedState led_;
  YieldMonitor yield_;
  std::int64_t timeout_tick_;
};

/// Pre-rolled worlds by scenario, so re-presented scenarios and repeated
/// runs over the same seeds skip building the arrival schedule. Not thread
/// safe; use one per thread.
class ScenarioCache
{
public:
  /// World for `setup`, pre-rolled to tick 0. Identical to the world
  /// TrialRunner(setup) builds.
  const TrafficWorld & world(const TrialSetup & setup);
  std::size_t size() const noexcept { return worlds_.size(); }

private:
  std::map<std::string, TrafficWorld> worlds_;
};

/// Runs a trial to its outcome. Throws ProtocolError when the source runs dry.
TrialRecord run_trial(const TrialSetup & setup, InputSource & source);
TrialRecord run_trial(const TrialSetup & setup, InputSource & source, ScenarioCache & cache);

TrialRecord run_trial(
  const TrafficConfig & config, const RoadGeometry & geometry, Condition condition,
  InputSource & source, std::uint64_t seed);

/// Replays the significant-yield rule over a finished or partial record.
bool classify_significant_yield(const TrialRecord & record);

/// Schedule horizon covering everything that can reach the crosswalk during a
/// trial, including vehicles already on the road at tick 0.
double schedule_horizon(
  const TrafficConfig & config, const RoadGeometry & geometry, const TrialSettings & settings);

}  // namespace xwalk
