#include "xwalk/agents/population.hpp"

#include "xwalk/analytics/variables.hpp"
#include "xwalk/core/errors.hpp"
#include "xwalk/core/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace xwalk
{

namespace
{
constexpr std::uint64_t kMemberStream = 0x3E3B3Eu;
constexpr std::uint64_t kSessionStream = 0x5E5510u;
constexpr std::uint64_t kCalibrationStream = 0xCA11Bu;
constexpr double kDwellSpread = 0.15;  // log-sd of member dwell multipliers

struct Latent
{
  ParticipantTags tags;
  double z_threshold;
  double z_speed;
  double z_reaction;
  double z_phone;
  double z_road;
};

struct ConditionParams
{
  double threshold_mean = 5.0;
  double desired_speed = 1.4;
  double phone_dwell = 3.6;
};

GapAcceptancePolicy make_policy(
  const Latent & z, const ConditionParams & p, Condition c, const CalibrationOptions & o)
{
  GapAcceptancePolicy policy;
  policy.accept_threshold = std::clamp(p.threshold_mean + o.threshold_sd * z.z_threshold, 0.5, 20.0);
  policy.desired_speed =
    std::clamp(p.desired_speed + o.speed_sd * z.z_speed, 0.3, o.settings.ped.speed_cap);
  policy.reaction_delay = std::clamp(o.reaction_mean + o.reaction_sd * z.z_reaction, 0.05, 1.0);
  policy.patience = o.patience;
  policy.threshold_decay = o.threshold_decay;
  policy.threshold_jitter = o.threshold_jitter;
  policy.threshold_floor = o.threshold_floor;
  policy.reaction_jitter = o.reaction_jitter;
  policy.speed_jitter = o.speed_jitter;
  policy.ramp_accel = o.ramp_accel;
  policy.ramp_jitter = o.ramp_jitter;
  if (has_phone(c)) {
    policy.glance = GlanceCycle{
      p.phone_dwell * std::exp(kDwellSpread * z.z_phone),
      o.road_dwell * std::exp(kDwellSpread * z.z_road)};
  }
  return policy;
}

PolicyPopulation assemble(
  const std::vector<Latent> & latents, const std::array<ConditionParams, 3> & params,
  const CalibrationOptions & o)
{
  PolicyPopulation pop;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    PopulationMember m;
    m.id = fmt::format("agent-{:03d}", i);
    m.tags = latents[i].tags;
    for (const Condition c : kAllConditions) {
      m.policies[index_of(c)] = make_policy(latents[i], params[index_of(c)], c, o);
    }
    pop.members.push_back(std::move(m));
  }
  return pop;
}

struct ConditionMeans
{
  double wait_time = 0.0;
  double pct_phone_wait = 0.0;
};

ConditionMeans evaluate(
  const PolicyPopulation & pop, Condition c, std::uint64_t seed, const CalibrationOptions & o,
  ScenarioCache & cache)
{
  ConditionPlan plan{{{c, o.successes_per_condition}}};
  double wait = 0.0;
  double phone = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pop.members.size(); ++i) {
    const PopulationMember & m = pop.members[i];
    SessionConfig cfg = member_session(m, i, seed, plan, o.traffic, o.geometry, o.settings);
    cfg.trial_budget = o.evaluation_budget;
    try {
      const SessionRecord s = run_session(cfg, agent_factory(m, pop.tuning), &cache);
      for (const TrialRecord & r : s.trials) {
        wait += compute_crossing(r).wait_time;
        phone += compute_distraction(r).pct_phone_wait;
        ++n;
      }
    } catch (const SessionAbort &) {
      // Too picky to ever cross: counts as waiting out the whole trial.
      wait += o.settings.duration;
      phone += 100.0;
      ++n;
    }
  }
  const double dn = static_cast<double>(std::max<std::size_t>(n, 1));
  return {wait / dn, phone / dn};
}

/// Bisection for an increasing response: returns x in [lo, hi] with f(x) ~ 0.
template <typename F>
double bisect(double lo, double hi, int steps, F && f)
{
  for (int i = 0; i < steps; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void PolicyPopulation::validate() const
{
  if (members.empty()) {
    throw InvalidArgument("population has no members");
  }
  for (const PopulationMember & m : members) {
    for (const GapAcceptancePolicy & p : m.policies) {
      p.validate();
    }
  }
  if (tuning.moves_per_maze < 1 || !(tuning.maze_move_interval > 0.0)) {
    throw InvalidArgument("maze tuning must be positive");
  }
}

void to_json(nlohmann::json & j, const PopulationMember & m)
{
  nlohmann::json policies = nlohmann::json::object();
  for (const Condition c : kAllConditions) {
    policies[std::string(to_string(c))] = m.policy(c);
  }
  j = {
    {"id", m.id},
    {"female", m.tags.female},
    {"age_band", to_string(m.tags.age_band)},
    {"policies", std::move(policies)},
  };
}

void from_json(const nlohmann::json & j, PopulationMember & m)
{
  m.id = j.at("id").get<std::string>();
  m.tags.female = j.at("female").get<bool>();
  m.tags.age_band = age_band_from_string(j.value("age_band", std::string("18-30")));
  const auto & policies = j.at("policies");
  if (policies.contains("all")) {
    const auto p = policies.at("all").get<GapAcceptancePolicy>();
    m.policies = {p, p, p};
  }
  for (const Condition c : kAllConditions) {
    const std::string key(to_string(c));
    if (policies.contains(key)) {
      m.policies[index_of(c)] = policies.at(key).get<GapAcceptancePolicy>();
    } else if (!policies.contains("all")) {
      throw InvalidArgument(fmt::format("member {} has no policy for {}", m.id, key));
    }
  }
}

void to_json(nlohmann::json & j, const PolicyPopulation & p)
{
  j = {{"tuning", p.tuning}, {"members", p.members}};
}

void from_json(const nlohmann::json & j, PolicyPopulation & p)
{
  p.tuning = j.value("tuning", AgentTuning{});
  p.members = j.at("members").get<std::vector<PopulationMember>>();
  p.validate();
}

CalibrationTargets CalibrationTargets::behavioural_table()
{
  CalibrationTargets t;
  t.conditions[index_of(Condition::Control)] = {18.0, 1.0, std::nullopt};
  t.conditions[index_of(Condition::Distracted)] = {21.2, 0.9, 72.9};
  t.conditions[index_of(Condition::DistractedLed)] = {21.3, 1.0, 74.7};
  return t;
}

void to_json(nlohmann::json & j, const CalibrationTargets & t)
{
  j = nlohmann::json::object();
  for (const Condition c : kAllConditions) {
    const ConditionTargets & ct = t.conditions[index_of(c)];
    j[std::string(to_string(c))] = {
      {"wait_time", ct.wait_time},
      {"crossing_speed", ct.crossing_speed},
      {"pct_phone_wait", ct.pct_phone_wait ? nlohmann::json(*ct.pct_phone_wait) : nlohmann::json(nullptr)},
    };
  }
  j["female_share"] = t.female_share;
  j["older_share"] = t.older_share;
}

void from_json(const nlohmann::json & j, CalibrationTargets & t)
{
  t = CalibrationTargets::behavioural_table();
  for (const Condition c : kAllConditions) {
    const std::string key(to_string(c));
    if (!j.contains(key)) {
      continue;
    }
    const auto & cj = j.at(key);
    ConditionTargets & ct = t.conditions[index_of(c)];
    ct.wait_time = cj.value("wait_time", ct.wait_time);
    ct.crossing_speed = cj.value("crossing_speed", ct.crossing_speed);
    if (const auto it = cj.find("pct_phone_wait"); it != cj.end()) {
      ct.pct_phone_wait = it->is_null() ? std::nullopt : std::optional<double>(it->get<double>());
    }
  }
  t.female_share = j.value("female_share", t.female_share);
  t.older_share = j.value("older_share", t.older_share);
}

double desired_speed_for(
  double crossing_speed, double crossing_length, const PedLimits & limits, double ramp_accel)
{
  if (!(crossing_speed > 0.0)) {
    throw InvalidArgument("target crossing speed must be positive");
  }
  // Duration of a crossing that ramps up at a, then holds v: L/v + v/(2a).
  const double a = ramp_accel > 0.0 ? std::min(ramp_accel, limits.accel_limit) : limits.accel_limit;
  const double duration = crossing_length / crossing_speed;
  const double disc = duration * duration - 2.0 * crossing_length / a;
  if (disc < 0.0) {
    throw InvalidArgument(fmt::format(
      "crossing speed {} m/s is unreachable with acceleration {} m/s^2", crossing_speed, a));
  }
  const double v = a * (duration - std::sqrt(disc));
  if (v > limits.speed_cap || v * v / (2.0 * a) > crossing_length) {
    throw InvalidArgument(fmt::format(
      "crossing speed {} m/s needs walking speed {:.3f} m/s above the cap {} m/s", crossing_speed,
      v, limits.speed_cap));
  }
  return v;
}

PolicyPopulation calibrated_population(
  const CalibrationTargets & targets, std::size_t n, std::uint64_t seed,
  const CalibrationOptions & options)
{
  if (n == 0) {
    throw InvalidArgument("population size must be positive");
  }
  if (!(targets.female_share >= 0.0 && targets.female_share <= 1.0) ||
      !(targets.older_share >= 0.0 && targets.older_share <= 1.0)) {
    throw InvalidArgument("demographic shares must lie in [0, 1]");
  }
  PedLimits limits = options.settings.ped;
  limits.crossing_length = options.geometry.crossing_length;

  std::array<ConditionParams, 3> params;
  for (const Condition c : kAllConditions) {
    const ConditionTargets & t = targets.conditions[index_of(c)];
    if (!(t.wait_time > 0.0 && t.wait_time < options.settings.duration)) {
      throw InvalidArgument(fmt::format(
        "target wait {} s for {} must lie inside the trial length", t.wait_time, to_string(c)));
    }
    if (t.pct_phone_wait && !(*t.pct_phone_wait > 0.0 && *t.pct_phone_wait < 100.0)) {
      throw InvalidArgument("target phone share must lie in (0, 100)");
    }
    params[index_of(c)].desired_speed =
      desired_speed_for(t.crossing_speed, limits.crossing_length, limits, options.ramp_accel);
  }

  std::vector<Latent> latents;
  latents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, kMemberStream, i));
    Latent z;
    z.tags.female = rng.bernoulli(targets.female_share);
    z.tags.age_band = rng.bernoulli(targets.older_share) ? AgeBand::Age30Plus : AgeBand::Age18To30;
    z.z_threshold = rng.normal();
    z.z_speed = rng.normal();
    z.z_reaction = rng.normal();
    z.z_phone = rng.normal();
    z.z_road = rng.normal();
    latents.push_back(z);
  }

  const std::uint64_t eval_seed = derive_seed(seed, kCalibrationStream);
  ScenarioCache cache;
  for (const Condition c : kAllConditions) {
    const ConditionTargets & t = targets.conditions[index_of(c)];
    ConditionParams & p = params[index_of(c)];
    const bool fit_dwell = has_phone(c) && t.pct_phone_wait.has_value();
    const int rounds = fit_dwell ? std::max(1, options.rounds) : 1;
    for (int round = 0; round < rounds; ++round) {
      p.threshold_mean = bisect(0.5, 12.0, options.bisection_steps, [&](double x) {
        p.threshold_mean = x;
        return evaluate(assemble(latents, params, options), c, eval_seed, options, cache).wait_time -
               t.wait_time;
      });
      if (fit_dwell) {
        p.phone_dwell = bisect(0.3, 30.0, options.bisection_steps, [&](double x) {
          p.phone_dwell = x;
          return evaluate(assemble(latents, params, options), c, eval_seed, options, cache).pct_phone_wait -
                 *t.pct_phone_wait;
        });
      }
    }
  }
  return assemble(latents, params, options);
}

InputSourceFactory agent_factory(const PopulationMember & member, const AgentTuning & tuning)
{
  return [member, tuning](const TrialSetup & setup) -> std::unique_ptr<InputSource> {
    const Condition c = setup.meta.condition;
    return std::make_unique<PedestrianAgent>(member.policy(c), c, agent_seed(setup.meta), tuning);
  };
}

SessionConfig member_session(
  const PopulationMember & member, std::size_t index, std::uint64_t seed, const ConditionPlan & plan,
  const TrafficConfig & traffic, const RoadGeometry & geometry, const TrialSettings & settings)
{
  SessionConfig cfg;
  cfg.traffic = traffic;
  cfg.geometry = geometry;
  cfg.settings = settings;
  cfg.plan = plan;
  cfg.seed = derive_seed(seed, kSessionStream, index);
  cfg.session_id = fmt::format("session-{:03d}", index);
  cfg.participant_id = member.id;
  cfg.participant = member.tags;
  return cfg;
}

std::vector<SessionRecord> simulate_population(
  const PolicyPopulation & population, const ConditionPlan & plan, std::uint64_t seed,
  const TrafficConfig & traffic, const RoadGeometry & geometry, const TrialSettings & settings)
{
  std::vector<SessionRecord> out;
  out.reserve(population.members.size());
  for (std::size_t i = 0; i < population.members.size(); ++i) {
    const PopulationMember & m = population.members[i];
    ScenarioCache cache;
    out.push_back(run_session(
      member_session(m, i, seed, plan, traffic, geometry, settings),
      agent_factory(m, population.tuning), &cache));
  }
  return out;
}

}  // namespace xwalk
