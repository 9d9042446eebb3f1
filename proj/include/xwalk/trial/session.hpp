#pragma once

#include "xwalk/trial/trial.hpp"

#include <json.hpp>

#include <array>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace xwalk
{

/// Successful crossings required per condition, run in the listed order.
struct ConditionPlan
{
  std::vector<std::pair<Condition, int>> targets;

  /// 10 / 10 / 10 over Control, Distracted, DistractedLed.
  static ConditionPlan standard();
  int target(Condition c) const noexcept;
  void validate() const;
};

void to_json(nlohmann::json & j, const ConditionPlan & p);
void from_json(const nlohmann::json & j, ConditionPlan & p);

struct SessionConfig
{
  TrafficConfig traffic;
  RoadGeometry geometry;
  TrialSettings settings;
  ConditionPlan plan = ConditionPlan::standard();
  std::uint64_t seed = 0;
  int trial_budget = 200;
  std::string session_id;
  std::string participant_id;
  ParticipantTags participant;
};

/// Bookkeeping shared by headless sessions and the live gateway: which
/// condition comes next, which scenario to present and when the session is
/// done.
///
/// Each condition walks through scenarios 0, 1, 2, ... A failed or timed-out
/// trial re-presents the same scenario (same seed, so the same traffic) with
/// the next attempt number until it is crossed successfully.
class SessionProtocol
{
public:
  explicit SessionProtocol(SessionConfig config);

  bool complete() const noexcept;
  /// Condition of the next counted trial. Throws Conflict when complete.
  Condition current_condition() const;
  /// Setup for the next trial. Throws Conflict when complete and SessionAbort
  /// when the trial budget is spent. Practice trials use their own scenarios.
  TrialSetup next_trial(bool practice = false) const;
  /// Books a finished trial produced from next_trial().
  void record(const TrialRecord & record);

  int successes(Condition c) const noexcept { return successes_[index_of(c)]; }
  int trials_run() const noexcept { return trials_run_; }
  const SessionConfig & config() const noexcept { return config_; }

private:
  SessionConfig config_;
  std::array<int, 3> successes_{};
  std::array<int, 3> attempts_{};  // failed attempts at the current scenario
  int trials_run_ = 0;
  int practice_run_ = 0;
  std::int64_t next_index_ = 0;
};

struct SessionRecord
{
  SessionConfig config;
  std::vector<TrialRecord> trials;
};

using InputSourceFactory = std::function<std::unique_ptr<InputSource>(const TrialSetup &)>;

/// Runs counted trials until every plan target is met. Throws SessionAbort
/// once the trial budget is exhausted.
SessionRecord run_session(
  const SessionConfig & config, const InputSourceFactory & factory, ScenarioCache * cache = nullptr);

/// Seed of scenario `scenario` of `condition` within a session.
std::uint64_t scenario_seed(std::uint64_t session_seed, Condition condition, int scenario) noexcept;

}  // namespace xwalk
