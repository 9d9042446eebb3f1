#include "test_support.hpp"

#include "xwalk/agents/agent.hpp"
#include "xwalk/core/errors.hpp"
#include "xwalk/traffic/collision.hpp"
#include "xwalk/traffic/world.hpp"
#include "xwalk/trial/led.hpp"
#include "xwalk/trial/record_io.hpp"
#include "xwalk/trial/session.hpp"
#include "xwalk/trial/yield_monitor.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

using namespace xwalk;
using xwalk::test::ScriptedSource;

namespace
{

constexpr double kDt = 1.0 / 60.0;

TrialSetup control_setup(std::uint64_t seed, Condition c = Condition::Control)
{
  TrialSetup s;
  s.meta.seed = seed;
  s.meta.condition = c;
  s.meta.session_id = "s";
  return s;
}

// Trial time at which each vehicle's front bumper first reaches x = 0.
std::map<std::int64_t, double> arrivals_at_line(const TrialRecord & r)
{
  std::map<std::int64_t, double> out;
  for (const TickRecord & tick : r.ticks) {
    for (const VehicleState & v : tick.vehicles) {
      if (v.x >= 0.0 && !out.count(v.id)) {
        out[v.id] = tick.t;
      }
    }
  }
  return out;
}

bool disc_hits_box(double px, double py, double r, const VehicleState & v, const RoadGeometry & g)
{
  const double x_lo = v.x - v.length;
  const double y_lo = g.lane_center() - 0.5 * v.width;
  const double cx = std::clamp(px, x_lo, v.x);
  const double cy = std::clamp(py, y_lo, y_lo + v.width);
  return (px - cx) * (px - cx) + (py - cy) * (py - cy) < r * r;
}

GapAcceptancePolicy patient(double threshold)
{
  GapAcceptancePolicy p;
  p.accept_threshold = threshold;
  p.desired_speed = 1.4;
  return p;
}

InputSourceFactory policy_factory(const GapAcceptancePolicy & p)
{
  return [p](const TrialSetup & s) -> std::unique_ptr<InputSource> {
    return std::make_unique<PedestrianAgent>(p, s.meta.condition, agent_seed(s.meta));
  };
}

std::string serialize(const TrialRecord & r)
{
  std::ostringstream os;
  write_trial(os, r);
  return os.str();
}

}  // namespace

TEST(Pedestrian, WalkReachesAndHoldsTarget)
{
  PedLimits lim;
  PedestrianState p;
  PedInput in = test::walk_at(1.6);
  for (int k = 0; k < 120; ++k) {
    p = apply_ped_input(p, in, kDt, lim, false);
    EXPECT_LE(p.speed - 1.6, 1e-12);
  }
  EXPECT_DOUBLE_EQ(p.speed, 1.6);
  EXPECT_TRUE(p.crossing_initiated);
}

TEST(Pedestrian, RunningIsCapped)
{
  PedLimits lim;
  PedestrianState p;
  for (int k = 0; k < 240; ++k) {
    p = apply_ped_input(p, test::walk_at(5.0), kDt, lim, false);
    ASSERT_LE(p.speed, 2.0);
  }
  EXPECT_DOUBLE_EQ(p.speed, 2.0);
}

TEST(Pedestrian, StopDeceleratesToRest)
{
  PedLimits lim;
  PedestrianState p;
  p.speed = 1.0;
  double last_y = p.y;
  for (int k = 0; k < 120; ++k) {
    p = apply_ped_input(p, test::stand_still(), kDt, lim, false);
    ASSERT_GE(p.y, last_y);
    last_y = p.y;
  }
  EXPECT_EQ(p.speed, 0.0);
  const double y = p.y;
  p = apply_ped_input(p, test::stand_still(), kDt, lim, false);
  EXPECT_EQ(p.y, y);
}

TEST(Pedestrian, ControlIgnoresPhone)
{
  PedLimits lim;
  PedInput in;
  in.head_toggle = Head::TowardPhone;
  in.maze_move = MazeMove{MazeDirection::Left, true};
  const auto p = apply_ped_input(PedestrianState{}, in, kDt, lim, false);
  EXPECT_EQ(p.head, Head::TowardRoad);
  EXPECT_EQ(p.phone.mazes_solved, 0);
  const auto q = apply_ped_input(PedestrianState{}, in, kDt, lim, true);
  EXPECT_EQ(q.head, Head::TowardPhone);
  EXPECT_EQ(q.phone.mazes_solved, 1);
}

TEST(Led, ControlAndDistractedStayOff)
{
  PedestrianState p;
  p.head = Head::TowardPhone;
  p.crossing_initiated = true;
  for (const Condition c : {Condition::Control, Condition::Distracted}) {
    EXPECT_EQ(initial_led(c).mode, LedMode::Off);
    EXPECT_EQ(update_led(c, p, initial_led(c)).mode, LedMode::Off);
  }
}

TEST(Led, TurnsBlueOnDistractedInitiation)
{
  const Condition c = Condition::DistractedLed;
  PedestrianState p;
  p.head = Head::TowardPhone;
  LedState s = update_led(c, p, initial_led(c));
  EXPECT_EQ(s.mode, LedMode::White);
  p.crossing_initiated = true;
  s = update_led(c, p, s);
  EXPECT_EQ(s.mode, LedMode::BlueFlashing);
  p.head = Head::TowardRoad;
  for (int k = 0; k < 100; ++k) {
    s = update_led(c, p, s);
    ASSERT_EQ(s.mode, LedMode::BlueFlashing);
  }
}

TEST(Led, RoadInitiationStaysWhite)
{
  const Condition c = Condition::DistractedLed;
  PedestrianState p;
  p.crossing_initiated = true;
  LedState s = update_led(c, p, initial_led(c));
  EXPECT_EQ(s.mode, LedMode::White);
  p.head = Head::TowardPhone;
  s = update_led(c, p, s);
  EXPECT_EQ(s.mode, LedMode::White);
}

TEST(Led, FlashesAtTwoHertz)
{
  LedState s;
  s.mode = LedMode::BlueFlashing;
  int toggles = 0;
  bool prev = s.lit(kDt, 2.0);
  for (int k = 1; k <= 60; ++k) {
    s.phase = k;
    const bool now = s.lit(kDt, 2.0);
    toggles += now != prev ? 1 : 0;
    prev = now;
  }
  EXPECT_EQ(toggles, 4);
}

TEST(Trial, NeverWalkingTimesOutAtSixtySeconds)
{
  ScriptedSource src([](const Observation &) { return test::stand_still(); });
  const TrialRecord r = run_trial(control_setup(3), src);
  ASSERT_EQ(r.outcome, Outcome::TimeOut);
  EXPECT_DOUBLE_EQ(r.duration(), 60.0);
  EXPECT_EQ(r.ticks.size(), 3601u);
  EXPECT_FALSE(r.cross_end_tick.has_value());
  EXPECT_FALSE(r.wait_end_tick.has_value());
}

TEST(Trial, WalkingThroughSevenSecondGapSucceeds)
{
  ScriptedSource idle([](const Observation &) { return test::stand_still(); });
  const auto dry = run_trial(control_setup(8), idle);
  const auto at_line = arrivals_at_line(dry);
  std::optional<double> gap_start;
  for (auto it = at_line.begin(); std::next(it) != at_line.end(); ++it) {
    const double h = std::next(it)->second - it->second;
    if (std::abs(h - 7.0) < 0.05) {
      gap_start = it->second;
    }
  }
  ASSERT_TRUE(gap_start.has_value());

  const double go = *gap_start + 0.6;
  ScriptedSource walker([go](const Observation & o) {
    return o.t + 1e-9 >= go ? test::walk_at(1.0) : test::stand_still();
  });
  const auto r = run_trial(control_setup(8), walker);
  ASSERT_EQ(r.outcome, Outcome::Success);
  const double duration = *r.cross_end_t() - *r.wait_end_t();
  // 5 m at 1 m/s after a 1.5 m/s^2 ramp.
  EXPECT_NEAR(duration, 5.0 + 0.5 / 1.5, 2.0 * kDt);
  EXPECT_FALSE(classify_significant_yield(r));
}

TEST(Trial, SteppingInFrontOfFastVehicleCollides)
{
  TrialSetup s = control_setup(1);
  auto world = TrafficWorld::without_arrivals(s.traffic, s.geometry);
  VehicleState v;
  v.x = -15.4;
  v.v = s.traffic.v_max;
  world.place_vehicle(v);
  TrialRunner runner(s, std::move(world));
  while (!runner.finished()) {
    runner.step({test::walk_at(2.0), false});
  }
  const TrialRecord & r = runner.record();
  ASSERT_EQ(r.outcome, Outcome::Failed);
  EXPECT_EQ(r.cause, FailureCause::Collision);

  std::optional<std::int64_t> first;
  for (const TickRecord & tick : r.ticks) {
    for (const VehicleState & veh : tick.vehicles) {
      if (!first && disc_hits_box(s.geometry.ped_x(), tick.ped.y, s.geometry.ped_radius, veh, s.geometry)) {
        first = tick.k;
      }
    }
  }
  ASSERT_TRUE(first.has_value());
  EXPECT_EQ(*first, r.ticks.back().k);
}

TEST(Trial, ForcedStopIsSignificantYield)
{
  TrialSetup s = control_setup(1);
  auto world = TrafficWorld::without_arrivals(s.traffic, s.geometry);
  VehicleState v;
  v.x = -30.0;
  v.v = s.traffic.v_max;
  world.place_vehicle(v);
  TrialRunner runner(s, std::move(world));
  while (!runner.finished()) {
    runner.step({test::walk_at(1.0), false});
  }
  EXPECT_EQ(runner.record().outcome, Outcome::Failed);
  EXPECT_EQ(runner.record().cause, FailureCause::SignificantYield);
  EXPECT_TRUE(classify_significant_yield(runner.record()));
}

TEST(YieldMonitor, GentleEasingIsNotSignificant)
{
  YieldMonitor m;
  VehicleState v;
  v.id = 4;
  v.v = 13.89;
  EXPECT_FALSE(m.observe(std::span(&v, 1), false));
  for (int k = 0; k < 120; ++k) {
    v.a = -0.5;
    v.v += v.a * kDt;
    v.yield = YieldState::Yielding;
    ASSERT_FALSE(m.observe(std::span(&v, 1), true)) << k;
  }
  EXPECT_GT(v.v, 0.5 * 13.89);
}

TEST(YieldMonitor, HardBrakingOrFullStopIsSignificant)
{
  {
    YieldMonitor m;
    VehicleState v;
    v.id = 2;
    v.v = 10.0;
    m.observe(std::span(&v, 1), false);
    v.a = -4.0;
    v.v -= 4.0 * kDt;
    v.yield = YieldState::Yielding;
    EXPECT_EQ(m.observe(std::span(&v, 1), true), std::optional<std::int64_t>(2));
  }
  {
    YieldMonitor m;
    VehicleState v;
    v.id = 3;
    v.v = 13.89;
    m.observe(std::span(&v, 1), false);
    std::optional<std::int64_t> hit;
    while (v.v > 0.0 && !hit) {
      v.a = -2.5;
      v.v = std::max(0.0, v.v - 2.5 * kDt);
      v.yield = YieldState::Yielding;
      hit = m.observe(std::span(&v, 1), true);
    }
    EXPECT_TRUE(hit.has_value());
  }
  {
    YieldMonitor m;
    VehicleState v;
    v.v = 13.89;
    m.observe(std::span(&v, 1), false);
    v.a = -8.0;
    v.yield = YieldState::Emergency;
    EXPECT_FALSE(m.observe(std::span(&v, 1), true));
  }
}

TEST(Trial, AgentTrialsKeepInvariants)
{
  const std::array<double, 4> thresholds{0.5, 3.0, 5.0, 8.0};
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Condition c = kAllConditions[seed % 3];
    GapAcceptancePolicy p = patient(thresholds[seed % 4]);
    if (has_phone(c)) {
      p.glance = GlanceCycle{};
    }
    TrialSetup s = control_setup(seed, c);
    PedestrianAgent agent(p, c, seed);
    const TrialRecord r = run_trial(s, agent);
    ASSERT_TRUE(r.outcome.has_value());
    EXPECT_EQ(r.cause.has_value(), r.outcome == Outcome::Failed);
    if (r.outcome == Outcome::TimeOut) {
      EXPECT_EQ(r.ticks.size(), 3601u);
    }
    EXPECT_LE(r.ticks.size(), 3601u);
    bool blue = false;
    for (const TickRecord & tick : r.ticks) {
      ASSERT_LE(tick.ped.speed, 2.0);
      if (c != Condition::DistractedLed) {
        ASSERT_EQ(tick.led.mode, LedMode::Off);
      } else if (blue) {
        ASSERT_EQ(tick.led.mode, LedMode::BlueFlashing);
      }
      blue = blue || tick.led.mode == LedMode::BlueFlashing;
      if (c == Condition::Control) {
        ASSERT_EQ(tick.ped.head, Head::TowardRoad);
      }
      if (r.outcome == Outcome::Success) {
        for (const VehicleState & v : tick.vehicles) {
          ASSERT_FALSE(detect_collision(v, tick.ped, s.geometry));
        }
      }
    }
  }
}

TEST(RecordIo, RoundTripAndReplay)
{
  GapAcceptancePolicy p = patient(4.5);
  p.glance = GlanceCycle{};
  TrialSetup s = control_setup(19, Condition::DistractedLed);
  PedestrianAgent agent(p, s.meta.condition, 5);
  const TrialRecord r = run_trial(s, agent);
  const std::string text = serialize(r);
  std::istringstream is(text);
  const auto back = read_trials(is);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].ticks, r.ticks);
  EXPECT_EQ(back[0].outcome, r.outcome);
  EXPECT_EQ(back[0].meta, r.meta);
  EXPECT_EQ(serialize(back[0]), text);

  const auto report = replay_trial(back[0]);
  EXPECT_TRUE(report.identical) << report.detail;
}

TEST(RecordIo, MutatedVehicleReportsFirstDivergentTick)
{
  ScriptedSource idle([](const Observation &) { return test::stand_still(); });
  TrialRecord r = run_trial(control_setup(4), idle);
  auto & tick = r.ticks.at(900);
  ASSERT_FALSE(tick.vehicles.empty());
  tick.vehicles[0].x += 0.01;
  const auto report = replay_trial(r);
  EXPECT_FALSE(report.identical);
  EXPECT_EQ(report.first_divergent_tick, std::optional<std::int64_t>(900));
}

TEST(RecordIo, ForeignSchemaVersionRejected)
{
  ScriptedSource idle([](const Observation &) { return test::stand_still(); });
  TrialSetup s = control_setup(4);
  s.settings.duration = 1.0;
  std::string text = serialize(run_trial(s, idle));
  const auto pos = text.find("\"v\":1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 5, "\"v\":2");
  std::istringstream is(text);
  EXPECT_THROW(read_trials(is), SchemaMismatch);
}

TEST(Trial, ExhaustedSourceIsProtocolError)
{
  class Short : public InputSource
  {
  public:
    std::optional<SourcedInput> next(const Observation & obs) override
    {
      if (obs.tick >= 10) {
        return std::nullopt;
      }
      return SourcedInput{};
    }
  } src;
  EXPECT_THROW(run_trial(control_setup(2), src), ProtocolError);
}

TEST(Trial, SameSeedAndInputsAreBitIdentical)
{
  auto once = [] {
    GapAcceptancePolicy p = patient(5.0);
    PedestrianAgent agent(p, Condition::Control, 77);
    return serialize(run_trial(control_setup(31), agent));
  };
  EXPECT_EQ(once(), once());
}

TEST(Session, SevenSecondAgentAlwaysSucceeds)
{
  SessionConfig cfg;
  cfg.seed = 12;
  const auto rec = run_session(cfg, policy_factory(patient(7.0)));
  ASSERT_EQ(rec.trials.size(), 30u);
  for (const TrialRecord & r : rec.trials) {
    EXPECT_EQ(r.outcome, Outcome::Success) << r.meta.trial_index;
  }
}

TEST(Session, NeverCrossingExhaustsBudget)
{
  SessionConfig cfg;
  cfg.trial_budget = 4;
  cfg.settings.duration = 5.0;
  EXPECT_THROW(run_session(cfg, policy_factory(patient(1000.0))), SessionAbort);
}

TEST(Session, FailedScenarioIsRepresented)
{
  SessionConfig cfg;
  cfg.seed = 5;
  cfg.settings.duration = 8.0;
  cfg.plan.targets = {{Condition::Control, 3}};
  cfg.trial_budget = 200;
  GapAcceptancePolicy p = patient(3.0);
  p.threshold_jitter = 2.0;
  const auto rec = run_session(cfg, policy_factory(p));
  int retries = 0;
  int successes = 0;
  for (std::size_t i = 0; i < rec.trials.size(); ++i) {
    const TrialRecord & r = rec.trials[i];
    successes += r.outcome == Outcome::Success ? 1 : 0;
    if (i > 0 && rec.trials[i - 1].outcome != Outcome::Success) {
      EXPECT_EQ(r.meta.seed, rec.trials[i - 1].meta.seed);
      EXPECT_EQ(r.meta.attempt, rec.trials[i - 1].meta.attempt + 1);
      ++retries;
    }
  }
  EXPECT_EQ(successes, 3);
  EXPECT_GT(retries, 0);
  const double share = 100.0 * successes / static_cast<double>(rec.trials.size());
  EXPECT_GT(share, 0.0);
  EXPECT_LE(share, 100.0);
}

TEST(Session, ProtocolGuards)
{
  SessionConfig cfg;
  cfg.plan.targets = {{Condition::Distracted, 1}};
  SessionProtocol proto(cfg);
  EXPECT_EQ(proto.current_condition(), Condition::Distracted);
  const TrialSetup practice = proto.next_trial(true);
  EXPECT_TRUE(practice.meta.practice);
  TrialRecord r;
  r.meta = practice.meta;
  r.outcome = Outcome::Success;
  proto.record(r);
  EXPECT_EQ(proto.successes(Condition::Distracted), 0);
  r.meta = proto.next_trial().meta;
  proto.record(r);
  EXPECT_TRUE(proto.complete());
  EXPECT_THROW(proto.next_trial(), Conflict);

  nlohmann::json j = {{"control", 1}};
  const auto plan = j.get<ConditionPlan>();
  ASSERT_EQ(plan.targets.size(), 1u);
  EXPECT_EQ(plan.target(Condition::Control), 1);
  EXPECT_EQ(plan.target(Condition::Distracted), 0);
  EXPECT_THROW((nlohmann::json{{"control", 0}}.get<ConditionPlan>()), InvalidArgument);
}
