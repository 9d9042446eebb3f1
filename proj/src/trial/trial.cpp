#include "xwalk/trial/trial.hpp"

#include "xwalk/core/errors.hpp"
#include "xwalk/core/rng.hpp"
#include "xwalk/traffic/arrivals.hpp"
#include "xwalk/traffic/collision.hpp"

#include <fmt/format.h>

#include <cmath>

namespace xwalk
{

namespace
{
constexpr std::uint64_t kAgentStream = 0xA6E47u;

TrafficWorld scheduled_world(const TrialSetup & setup)
{
  TrafficConfig traffic = setup.traffic;
  traffic.seed = setup.meta.seed;
  auto schedule = generate_arrival_schedule(
    traffic, schedule_horizon(traffic, setup.geometry, setup.settings));
  return TrafficWorld(traffic, setup.geometry, std::move(schedule));
}
}  // namespace

std::int64_t TrialSettings::timeout_tick(double dt) const
{
  return std::llround(duration / dt);
}

void TrialSettings::validate() const
{
  if (!(duration > 0.0)) {
    throw InvalidArgument("trial duration must be positive");
  }
  if (!(yield_decel_threshold > 0.0) || !(yield_speed_ratio > 0.0 && yield_speed_ratio < 1.0)) {
    throw InvalidArgument("significant-yield thresholds out of range");
  }
  if (!(led_flash_hz > 0.0)) {
    throw InvalidArgument("LED flash rate must be positive");
  }
  if (!(ped.speed_cap > 0.0) || !(ped.accel_limit > 0.0) || !(ped.crossing_length > 0.0)) {
    throw InvalidArgument("pedestrian limits must be positive");
  }
}

void to_json(nlohmann::json & j, const TrialSettings & s)
{
  j = nlohmann::json{
    {"duration", s.duration},
    {"yield_decel_threshold", s.yield_decel_threshold},
    {"yield_speed_ratio", s.yield_speed_ratio},
    {"led_flash_hz", s.led_flash_hz},
    {"ped_speed_cap", s.ped.speed_cap},
    {"ped_accel_limit", s.ped.accel_limit},
  };
}

void from_json(const nlohmann::json & j, TrialSettings & s)
{
  s.duration = j.value("duration", s.duration);
  s.yield_decel_threshold = j.value("yield_decel_threshold", s.yield_decel_threshold);
  s.yield_speed_ratio = j.value("yield_speed_ratio", s.yield_speed_ratio);
  s.led_flash_hz = j.value("led_flash_hz", s.led_flash_hz);
  s.ped.speed_cap = j.value("ped_speed_cap", s.ped.speed_cap);
  s.ped.accel_limit = j.value("ped_accel_limit", s.ped.accel_limit);
}

std::uint64_t agent_seed(const TrialMeta & meta) noexcept
{
  return derive_seed(meta.seed, kAgentStream, static_cast<std::uint64_t>(meta.attempt));
}

std::string_view to_string(Outcome o) noexcept
{
  switch (o) {
    case Outcome::Success:
      return "Success";
    case Outcome::Failed:
      return "Failed";
    case Outcome::TimeOut:
      return "TimeOut";
  }
  return "";
}

std::string_view to_string(FailureCause c) noexcept
{
  return c == FailureCause::Collision ? "Collision" : "SignificantYield";
}

Outcome outcome_from_string(std::string_view s)
{
  if (s == "Success") {
    return Outcome::Success;
  }
  if (s == "Failed") {
    return Outcome::Failed;
  }
  if (s == "TimeOut") {
    return Outcome::TimeOut;
  }
  throw InvalidArgument(fmt::format("unknown outcome '{}'", s));
}

FailureCause failure_cause_from_string(std::string_view s)
{
  if (s == "Collision") {
    return FailureCause::Collision;
  }
  if (s == "SignificantYield") {
    return FailureCause::SignificantYield;
  }
  throw InvalidArgument(fmt::format("unknown failure cause '{}'", s));
}

std::optional<double> TrialRecord::wait_end_t() const
{
  if (!wait_end_tick) {
    return std::nullopt;
  }
  return tick_time(*wait_end_tick);
}

std::optional<double> TrialRecord::cross_end_t() const
{
  if (!cross_end_tick) {
    return std::nullopt;
  }
  return tick_time(*cross_end_tick);
}

double TrialRecord::duration() const
{
  return ticks.empty() ? 0.0 : ticks.back().t;
}

double schedule_horizon(
  const TrafficConfig & config, const RoadGeometry & geometry, const TrialSettings & settings)
{
  const double lead = static_cast<double>(free_flow_lead_ticks(config, geometry)) * config.tick_dt;
  // Half a window of slack: the world may move the stream earlier to keep the
  // forced gaps inside the trial.
  const double span = std::max(settings.duration, config.forced_gap_window);
  return 1.5 * span + lead + config.mean_headway;
}

TrialRunner::TrialRunner(TrialSetup setup)
: TrialRunner(setup, scheduled_world(setup))
{
}

TrialRunner::TrialRunner(TrialSetup setup, TrafficWorld world)
: world_(std::move(world)),
  yield_({setup.settings.yield_decel_threshold, setup.settings.yield_speed_ratio})
{
  setup.settings.validate();
  setup.settings.ped.crossing_length = setup.geometry.crossing_length;
  setup.traffic.seed = setup.meta.seed;
  record_.traffic = setup.traffic;
  record_.geometry = setup.geometry;
  record_.settings = setup.settings;
  record_.meta = setup.meta;
  timeout_tick_ = setup.settings.timeout_tick(setup.traffic.tick_dt);

  world_.preroll(ped_);
  led_ = initial_led(setup.meta.condition);
  record_.ticks.reserve(static_cast<std::size_t>(timeout_tick_) + 1);
  log_tick(std::nullopt, false);
  yield_.observe(world_.vehicles(), ped_.crossing_initiated);
}

Observation TrialRunner::observation() const
{
  Observation obs;
  obs.tick = world_.tick();
  obs.t = world_.time();
  obs.dt = record_.dt();
  obs.condition = record_.meta.condition;
  obs.ped = ped_;
  obs.led = led_;
  obs.vehicles = world_.vehicles();
  obs.geometry = &record_.geometry;
  return obs;
}

const TickRecord & TrialRunner::step(const SourcedInput & in)
{
  if (finished()) {
    throw ProtocolError("trial already finished");
  }
  const Condition condition = record_.meta.condition;
  ped_ = apply_ped_input(ped_, in.input, record_.dt(), record_.settings.ped, has_phone(condition));
  world_.step(ped_);
  led_ = update_led(condition, ped_, led_);

  PedInput applied = in.input;
  applied.timestamp = world_.tick() - 1;
  log_tick(applied, in.held);
  classify();
  return record_.ticks.back();
}

void TrialRunner::log_tick(std::optional<PedInput> input, bool held)
{
  TickRecord tick;
  tick.k = world_.tick();
  tick.t = world_.time();
  tick.ped = ped_;
  tick.led = led_;
  tick.vehicles.assign(world_.vehicles().begin(), world_.vehicles().end());
  tick.input = std::move(input);
  tick.held = held;
  if (ped_.crossing_initiated && !record_.wait_end_tick) {
    record_.wait_end_tick = tick.k;
  }
  record_.ticks.push_back(std::move(tick));
}

void TrialRunner::classify()
{
  const std::int64_t k = world_.tick();
  for (const VehicleState & v : world_.vehicles()) {
    if (detect_collision(v, ped_, record_.geometry)) {
      record_.outcome = Outcome::Failed;
      record_.cause = FailureCause::Collision;
      return;
    }
  }
  if (yield_.observe(world_.vehicles(), ped_.crossing_initiated)) {
    record_.outcome = Outcome::Failed;
    record_.cause = FailureCause::SignificantYield;
    return;
  }
  if (ped_.y >= record_.geometry.crossing_length) {
    record_.outcome = Outcome::Success;
    record_.cross_end_tick = k;
    return;
  }
  if (k >= timeout_tick_) {
    record_.outcome = Outcome::TimeOut;
  }
}

namespace
{
TrialRecord drive(TrialRunner & runner, InputSource & source)
{
  while (!runner.finished()) {
    auto in = source.next(runner.observation());
    if (!in) {
      throw ProtocolError(fmt::format(
        "input source exhausted at tick {} before the trial ended", runner.world().tick()));
    }
    runner.step(*in);
  }
  return std::move(runner).take();
}
}  // namespace

const TrafficWorld & ScenarioCache::world(const TrialSetup & setup)
{
  TrafficConfig traffic = setup.traffic;
  traffic.seed = 0;
  const std::string key = fmt::format("{}|{}|{}|{}", setup.meta.seed, nlohmann::json(traffic).dump(),
    nlohmann::json(setup.geometry).dump(), nlohmann::json(setup.settings).dump());
  auto it = worlds_.find(key);
  if (it == worlds_.end()) {
    TrafficWorld w = scheduled_world(setup);
    w.preroll(PedestrianState{});
    it = worlds_.emplace(key, std::move(w)).first;
  }
  return it->second;
}

TrialRecord run_trial(const TrialSetup & setup, InputSource & source)
{
  TrialRunner runner(setup);
  return drive(runner, source);
}

TrialRecord run_trial(const TrialSetup & setup, InputSource & source, ScenarioCache & cache)
{
  TrialRunner runner(setup, cache.world(setup));
  return drive(runner, source);
}

TrialRecord run_trial(
  const TrafficConfig & config, const RoadGeometry & geometry, Condition condition,
  InputSource & source, std::uint64_t seed)
{
  TrialSetup setup;
  setup.traffic = config;
  setup.geometry = geometry;
  setup.meta.condition = condition;
  setup.meta.seed = seed;
  return run_trial(setup, source);
}

bool classify_significant_yield(const TrialRecord & record)
{
  YieldMonitor monitor({record.settings.yield_decel_threshold, record.settings.yield_speed_ratio});
  for (const TickRecord & tick : record.ticks) {
    if (monitor.observe(tick.vehicles, tick.ped.crossing_initiated)) {
      return true;
    }
  }
  return false;
}

}  // namespace xwalk
