#include "xwalk/trial/session.hpp"

#include "xwalk/core/errors.hpp"
#include "xwalk/core/rng.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace xwalk
{

namespace
{
constexpr std::uint64_t kPracticeStream = 0x9AC7u;
}

ConditionPlan ConditionPlan::standard()
{
  return {{{Condition::Control, 10}, {Condition::Distracted, 10}, {Condition::DistractedLed, 10}}};
}

int ConditionPlan::target(Condition c) const noexcept
{
  for (const auto & [cond, n] : targets) {
    if (cond == c) {
      return n;
    }
  }
  return 0;
}

void ConditionPlan::validate() const
{
  if (targets.empty()) {
    throw InvalidArgument("condition plan is empty");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].second < 1) {
      throw InvalidArgument(fmt::format(
        "condition plan target for {} must be at least 1", to_string(targets[i].first)));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (targets[j].first == targets[i].first) {
        throw InvalidArgument(
          fmt::format("condition {} listed twice in plan", to_string(targets[i].first)));
      }
    }
  }
}

void to_json(nlohmann::json & j, const ConditionPlan & p)
{
  j = nlohmann::json::object();
  for (const auto & [cond, n] : p.targets) {
    j[std::string(to_string(cond))] = n;
  }
}

void from_json(const nlohmann::json & j, ConditionPlan & p)
{
  if (!j.is_object()) {
    throw InvalidArgument("condition plan must be an object of condition -> count");
  }
  p.targets.clear();
  // Object keys come back sorted; restore the canonical condition order.
  for (const Condition c : kAllConditions) {
    for (const auto & [key, value] : j.items()) {
      if (condition_from_string(key) == c) {
        if (!value.is_number_integer()) {
          throw InvalidArgument(fmt::format("plan count for {} must be an integer", key));
        }
        p.targets.emplace_back(c, value.get<int>());
      }
    }
  }
  p.validate();
}

std::uint64_t scenario_seed(std::uint64_t session_seed, Condition condition, int scenario) noexcept
{
  return derive_seed(
    session_seed, static_cast<std::uint64_t>(index_of(condition)) + 1,
    static_cast<std::uint64_t>(scenario));
}

SessionProtocol::SessionProtocol(SessionConfig config) : config_(std::move(config))
{
  config_.plan.validate();
  config_.traffic.validate();
  config_.geometry.validate(config_.traffic);
  config_.settings.validate();
  if (config_.trial_budget < 1) {
    throw InvalidArgument("trial budget must be at least 1");
  }
}

bool SessionProtocol::complete() const noexcept
{
  return std::all_of(config_.plan.targets.begin(), config_.plan.targets.end(), [&](const auto & t) {
    return successes_[index_of(t.first)] >= t.second;
  });
}

Condition SessionProtocol::current_condition() const
{
  for (const auto & [cond, n] : config_.plan.targets) {
    if (successes_[index_of(cond)] < n) {
      return cond;
    }
  }
  throw Conflict("session complete");
}

TrialSetup SessionProtocol::next_trial(bool practice) const
{
  TrialSetup setup;
  setup.traffic = config_.traffic;
  setup.geometry = config_.geometry;
  setup.settings = config_.settings;
  TrialMeta & meta = setup.meta;
  meta.session_id = config_.session_id;
  meta.participant_id = config_.participant_id;
  meta.participant = config_.participant;
  meta.trial_index = next_index_;
  meta.practice = practice;

  if (practice) {
    meta.condition = complete() ? Condition::Control : current_condition();
    meta.scenario = practice_run_;
    meta.seed = derive_seed(config_.seed, kPracticeStream, static_cast<std::uint64_t>(practice_run_));
    return setup;
  }

  const Condition c = current_condition();
  if (trials_run_ >= config_.trial_budget) {
    throw SessionAbort(fmt::format(
      "trial budget of {} exhausted with {} of {} {} successes", config_.trial_budget,
      successes_[index_of(c)], config_.plan.target(c), to_string(c)));
  }
  meta.condition = c;
  meta.scenario = successes_[index_of(c)];
  meta.attempt = attempts_[index_of(c)];
  meta.seed = scenario_seed(config_.seed, c, meta.scenario);
  return setup;
}

void SessionProtocol::record(const TrialRecord & record)
{
  ++next_index_;
  if (record.meta.practice) {
    ++practice_run_;
    return;
  }
  ++trials_run_;
  const std::size_t c = index_of(record.meta.condition);
  if (record.outcome == Outcome::Success) {
    ++successes_[c];
    attempts_[c] = 0;
  } else {
    ++attempts_[c];
  }
}

SessionRecord run_session(
  const SessionConfig & config, const InputSourceFactory & factory, ScenarioCache * cache)
{
  SessionProtocol protocol(config);
  SessionRecord out;
  out.config = protocol.config();
  while (!protocol.complete()) {
    const TrialSetup setup = protocol.next_trial();
    auto source = factory(setup);
    TrialRecord record = cache ? run_trial(setup, *source, *cache) : run_trial(setup, *source);
    protocol.record(record);
    out.trials.push_back(std::move(record));
  }
  return out;
}

}  // namespace xwalk
