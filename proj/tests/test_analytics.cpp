#include "oracles.hpp"

#include "xwalk/analytics/conflict.hpp"
#include "xwalk/analytics/summary.hpp"
#include "xwalk/analytics/variables.hpp"
#include "xwalk/core/errors.hpp"
#include "xwalk/trial/record_io.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace xwalk;
using test::synthetic_record;

namespace
{

constexpr double kDt = 1.0 / 60.0;

PedestrianState at(double y, double speed = 0.0, Head head = Head::TowardRoad)
{
  PedestrianState p;
  p.y = y;
  p.speed = speed;
  p.head = head;
  p.crossing_initiated = y > 0.0;
  return p;
}

TrialMetrics metrics_with(
  Condition c, Outcome o, double wait, std::optional<double> pet, bool female = false)
{
  TrialMetrics m;
  m.meta.condition = c;
  m.meta.participant.female = female;
  m.outcome = o;
  m.crossing.wait_time = wait;
  m.conflict.min_pet = pet;
  return m;
}

}  // namespace

TEST(Ttc, StationaryPedestrianAndApproachingVehicle)
{
  RoadGeometry g;
  VehicleState v;
  v.x = g.ped_x() - g.ped_radius - 20.0;
  v.v = 10.0;
  const auto ttc = time_to_collision(g.lane_center(), 0.0, v, g);
  ASSERT_TRUE(ttc.has_value());
  EXPECT_NEAR(*ttc, 2.0, 1e-9);

  auto r = synthetic_record(
    121, [&](double) { return at(g.lane_center()); },
    [&](double t) { return std::vector<VehicleState>{test::cruising(0, v.x - 10.0, 10.0, t)}; });
  const auto series = compute_ttc_series(r, g);
  ASSERT_GE(series.size(), 2u);
  EXPECT_EQ(series[1].t, 1.0);
  EXPECT_NEAR(series[1].ttc, 2.0, 1e-9);
}

TEST(Ttc, CurbPedestrianHasNoSeries)
{
  RoadGeometry g;
  auto r = synthetic_record(
    601, [](double) { return at(0.0); },
    [](double t) { return std::vector<VehicleState>{test::cruising(0, -60.0, 13.89, t)}; });
  EXPECT_TRUE(compute_ttc_series(r, g).empty());
}

TEST(Ttc, AlreadyOverlappingIsZero)
{
  RoadGeometry g;
  VehicleState v;
  v.x = g.ped_x() + 1.0;
  v.v = 5.0;
  EXPECT_EQ(time_to_collision(g.lane_center(), 1.0, v, g), std::optional<double>(0.0));
}

TEST(Ttc, MatchesFrozenVelocityOracle)
{
  Rng rng(101);
  for (int i = 0; i < 150; ++i) {
    const auto s = test::random_scenario(rng);
    const auto got = compute_ttc_series(s.record, s.record.geometry);
    const auto want = test::ttc_series_oracle(s.record);
    ASSERT_EQ(got.size(), want.size()) << "scenario " << i;
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_EQ(got[k].t, want[k].t);
      EXPECT_NEAR(got[k].ttc, want[k].ttc, 0.002) << "scenario " << i << " t " << got[k].t;
    }
  }
}

TEST(Pet, PedestrianFirstHandBuilt)
{
  RoadGeometry g;
  const auto r = test::ped_first_record();
  const auto ped = ped_zone_interval(r, g);
  ASSERT_TRUE(ped && ped->exit_tick);
  EXPECT_EQ(*ped->exit_tick, 600);
  const auto pet = compute_pet(r, g);
  ASSERT_TRUE(pet.has_value());
  EXPECT_EQ(*pet, 1.2);
}

TEST(Pet, CurbPedestrianUndefined)
{
  auto r = synthetic_record(
    600, [](double) { return at(0.0); },
    [](double t) { return std::vector<VehicleState>{test::cruising(0, -40.0, 13.89, t)}; });
  EXPECT_FALSE(compute_pet(r, r.geometry).has_value());
}

TEST(Pet, OverlappingOccupancyIsZero)
{
  RoadGeometry g;
  auto r = synthetic_record(
    600, [&](double) { return at(g.lane_center()); },
    [](double t) { return std::vector<VehicleState>{test::cruising(0, -20.0, 10.0, t)}; });
  EXPECT_EQ(compute_pet(r, g), std::optional<double>(0.0));
}

TEST(Pet, MatchesIntervalScanOracle)
{
  Rng rng(202);
  int defined = 0;
  for (int i = 0; i < 300; ++i) {
    const auto s = test::random_scenario(rng);
    const auto got = compute_pet(s.record, s.record.geometry);
    const auto want = test::pet_oracle(s);
    ASSERT_EQ(got.has_value(), want.has_value()) << "scenario " << i;
    if (got) {
      ++defined;
      EXPECT_NEAR(*got, *want, kDt + test::kOracleStep + 1e-9) << "scenario " << i;
    }
  }
  EXPECT_GT(defined, 100);
}

TEST(Kinematics, ConstantSpeedCrossing)
{
  auto r = synthetic_record(601, [](double t) {
    return t < 2.0 ? at(0.0) : at(std::min(5.0, (t - 2.0 + kDt) * 1.0), t < 7.0 ? 1.0 : 0.0);
  });
  r.cross_end_tick = 420;  // y reaches 5 m
  const auto c = compute_crossing(r);
  ASSERT_TRUE(c.crossing_duration.has_value());
  EXPECT_NEAR(*c.crossing_duration, 5.0, kDt + 1e-9);
  EXPECT_NEAR(*c.crossing_speed, 1.0, 0.01);
  const auto a = ped_acceleration(r);
  for (std::size_t i = 130; i < 410; ++i) {
    EXPECT_EQ(a[i], 0.0);
  }
}

TEST(Kinematics, LimitedRampPeaksAtLimit)
{
  PedLimits lim;
  PedestrianState p;
  std::vector<PedestrianState> trace{p};
  for (int k = 0; k < 180; ++k) {
    p = apply_ped_input(p, test::walk_at(1.5), kDt, lim, false);
    trace.push_back(p);
  }
  auto r = synthetic_record(static_cast<std::int64_t>(trace.size()), [&](double t) {
    return trace[static_cast<std::size_t>(std::llround(t / kDt))];
  });
  const auto k = compute_kinematics(r);
  EXPECT_NEAR(k.max_accel, 1.5, 0.1);
  EXPECT_NEAR(k.max_decel, 0.0, 1e-9);
}

TEST(Kinematics, TimeOutWaitsWholeTrial)
{
  auto r = synthetic_record(3601, [](double) { return at(0.0); });
  r.outcome = Outcome::TimeOut;
  const auto c = compute_crossing(r);
  EXPECT_DOUBLE_EQ(c.wait_time, 60.0);
  EXPECT_FALSE(c.crossing_duration.has_value());
  EXPECT_FALSE(c.crossing_speed.has_value());
}

TEST(Distraction, PhoneShareAndTurnRate)
{
  auto all_phone = synthetic_record(
    1201, [](double) { return at(0.0, 0.0, Head::TowardPhone); });
  all_phone.meta.condition = Condition::Distracted;
  EXPECT_DOUBLE_EQ(compute_distraction(all_phone).pct_phone_wait, 100.0);

  // 3 s phone, 1 s road, repeated over a 20 s wait.
  auto cycle = synthetic_record(1200, [](double t) {
    const double phase = std::fmod(t + 1e-9, 4.0);
    return at(0.0, 0.0, phase < 3.0 ? Head::TowardPhone : Head::TowardRoad);
  });
  const auto d = compute_distraction(cycle);
  EXPECT_DOUBLE_EQ(d.pct_phone_wait, 75.0);
  EXPECT_FALSE(d.pct_phone_cross.has_value());

  // Road -> phone at t = 2, 6, 10, 14 in a 20 s trial.
  auto turns = synthetic_record(1201, [](double t) {
    const double phase = std::fmod(t + 1e-9, 4.0);
    return at(0.0, 0.0, t >= 2.0 - 1e-9 && t < 18.0 && phase >= 2.0 ? Head::TowardPhone : Head::TowardRoad);
  });
  const auto e = compute_distraction(turns);
  EXPECT_DOUBLE_EQ(e.head_orientations_per_s, 0.2);
  EXPECT_TRUE(e.head_turned_any);

  auto control = synthetic_record(600, [](double) { return at(0.0); });
  const auto z = compute_distraction(control);
  EXPECT_EQ(z.pct_phone_wait, 0.0);
  EXPECT_EQ(z.head_orientations_per_s, 0.0);
  EXPECT_FALSE(z.head_turned_any);
}

TEST(Summary, MeansAndOutcomeShares)
{
  std::vector<TrialMetrics> ms{
    metrics_with(Condition::Control, Outcome::Success, 16.0, 2.0),
    metrics_with(Condition::Control, Outcome::Success, 20.0, 1.2),
    metrics_with(Condition::Control, Outcome::Failed, 18.0, std::nullopt),
    metrics_with(Condition::Control, Outcome::TimeOut, 18.0, std::nullopt),
  };
  const auto table = summarize(ms, {});
  const GroupSummary * row = nullptr;
  for (const auto & g : table.rows) {
    if (g.group == "General" && g.condition == Condition::Control) {
      row = &g;
    }
  }
  ASSERT_NE(row, nullptr);
  EXPECT_EQ(row->trials, 4u);
  EXPECT_DOUBLE_EQ(*row->stat("wait_time")->mean, 18.0);
  EXPECT_DOUBLE_EQ(row->pct_success, 50.0);
  EXPECT_DOUBLE_EQ(row->pct_failed, 25.0);
  EXPECT_DOUBLE_EQ(row->pct_timeout, 25.0);
  EXPECT_NEAR(row->pct_success + row->pct_failed + row->pct_timeout, 100.0, 0.01);
  EXPECT_EQ(row->min_pet, std::optional<double>(1.2));

  const auto two = summarize(
    {metrics_with(Condition::Control, Outcome::Success, 16.0, 2.0),
     metrics_with(Condition::Control, Outcome::Success, 20.0, 2.0)},
    {});
  EXPECT_DOUBLE_EQ(*two.rows.at(0).stat("wait_time")->mean, 18.0);
}

TEST(Summary, EmptyGroupWarnsInsteadOfFailing)
{
  const auto table =
    summarize({metrics_with(Condition::Control, Outcome::Success, 16.0, 2.0, false)}, {"gender"});
  EXPECT_FALSE(table.warnings.empty());
  EXPECT_FALSE(summary_csv(table).empty());
  EXPECT_FALSE(summary_text(table).empty());
}

TEST(Summary, DangerFlagFollowsThreshold)
{
  ConflictMetrics m;
  for (const double ttc : {0.8, 1.2, 1.7, 2.5}) {
    for (const double pet : {0.9, 1.4, 1.8, 3.0}) {
      m.min_ttc = ttc;
      m.min_pet = pet;
      for (const double th : {1.0, 1.5, 2.0}) {
        EXPECT_EQ(is_dangerous(m, th), ttc < th || pet < th);
      }
    }
  }
  m.min_ttc.reset();
  m.min_pet.reset();
  EXPECT_FALSE(is_dangerous(m, 1.5));
}

TEST(Bins, SharesAndBruteForceCounts)
{
  std::vector<TrialMetrics> safe;
  for (int i = 0; i < 6; ++i) {
    safe.push_back(metrics_with(kAllConditions[i % 3], Outcome::Success, 10.0 + i, 2.5, i % 2));
  }
  for (const BinCell & c : sensitivity_bins(safe, make_segments({"gender"}))) {
    if (c.n > 0) {
      EXPECT_EQ(c.share, std::optional<double>(1.0));
    }
  }

  std::vector<TrialMetrics> half{
    metrics_with(Condition::Control, Outcome::Success, 12.0, 1.0),
    metrics_with(Condition::Control, Outcome::Success, 12.0, 2.0),
  };
  const auto h = sensitivity_bins(half, make_segments({"gender"}));
  for (const BinCell & c : h) {
    if (c.condition == Condition::Control && c.level == "male") {
      EXPECT_EQ(c.share, std::optional<double>(0.5));
    }
  }

  Rng rng(5);
  std::vector<TrialMetrics> mixed;
  for (int i = 0; i < 400; ++i) {
    std::optional<double> pet;
    if (!rng.bernoulli(0.2)) {
      pet = rng.uniform(0.0, 4.0);
    }
    mixed.push_back(metrics_with(
      kAllConditions[rng.below(3)], Outcome::Success, rng.uniform(5.0, 40.0), pet, rng.bernoulli(0.4)));
  }
  for (const BinCell & c : sensitivity_bins(mixed, make_segments({"wait_gt_20"}))) {
    std::size_t n = 0;
    std::size_t n_safe = 0;
    for (const TrialMetrics & m : mixed) {
      const bool over = m.crossing.wait_time > 20.0;
      if (m.meta.condition != c.condition || over != (c.level == "yes") || !m.conflict.min_pet) {
        continue;
      }
      ++n;
      n_safe += *m.conflict.min_pet > 1.5 ? 1 : 0;
    }
    EXPECT_EQ(c.n, n);
    EXPECT_EQ(c.n_safe, n_safe);
  }
  EXPECT_THROW(make_segments({"shoe_size"}), InvalidArgument);
}

TEST(Metrics, LogRoundTripPreservesMetrics)
{
  Rng rng(77);
  for (int i = 0; i < 20; ++i) {
    auto s = test::random_scenario(rng);
    s.record.outcome = Outcome::Success;
    std::ostringstream os;
    write_trial(os, s.record);
    std::istringstream is(os.str());
    const auto back = read_trials(is).at(0);
    const auto a = compute_metrics(s.record);
    const auto b = compute_metrics(back);
    EXPECT_EQ(a.conflict.min_pet, b.conflict.min_pet);
    EXPECT_EQ(a.conflict.min_ttc, b.conflict.min_ttc);
    EXPECT_EQ(a.crossing.wait_time, b.crossing.wait_time);
    EXPECT_EQ(a.kinematics.max_accel, b.kinematics.max_accel);
    EXPECT_EQ(a.distraction.pct_phone_wait, b.distraction.pct_phone_wait);
    for (const std::string & name : metric_names()) {
      EXPECT_EQ(metric_value(a, name), metric_value(b, name)) << name;
      const auto v = metric_value(a, name);
      if (v && name.rfind("pct_", 0) == 0) {
        EXPECT_GE(*v, 0.0);
        EXPECT_LE(*v, 100.0);
      }
    }
  }
}
