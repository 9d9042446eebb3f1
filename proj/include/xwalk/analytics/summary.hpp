#pragma once

#include "xwalk/analytics/conflict.hpp"
#include "xwalk/analytics/variables.hpp"
#include "xwalk/trial/trial.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace xwalk
{

inline constexpr double kDefaultDangerThreshold = 1.5;  // s

struct ConflictMetrics
{
  std::optional<double> min_ttc;
  std::optional<double> min_pet;
  double max_accel = 0.0;
  double max_decel = 0.0;
  bool dangerous = false;
};

/// Everything derived from one trial.
struct TrialMetrics
{
  TrialMeta meta;
  Outcome outcome = Outcome::TimeOut;
  std::optional<FailureCause> cause;
  CrossingVariables crossing;
  Kinematics kinematics;
  DistractionAttributes distraction;
  ConflictMetrics conflict;
};

ConflictMetrics compute_conflict(
  const TrialRecord & record, double threshold = kDefaultDangerThreshold);
TrialMetrics compute_metrics(const TrialRecord & record, double threshold = kDefaultDangerThreshold);
/// Re-derives the danger flag for another threshold.
bool is_dangerous(const ConflictMetrics & m, double threshold) noexcept;

/// Numeric value of a named per-trial variable. Used by the summary and by
/// the choice-model design matrix. std::nullopt when undefined for the trial.
std::optional<double> metric_value(const TrialMetrics & m, const std::string & name);
/// Names accepted by metric_value().
const std::vector<std::string> & metric_names();
/// Variables that only make sense with a phone in hand.
bool is_distraction_metric(const std::string & name);

struct Stat
{
  std::optional<double> mean;
  std::size_t n = 0;  // trials with a defined value
};

struct GroupSummary
{
  std::string group;  // "General", "Female", "Male", "18-30", "30+"
  Condition condition = Condition::Control;
  std::size_t trials = 0;
  std::vector<std::pair<std::string, Stat>> means;  // metric_names() order
  double pct_success = 0.0;
  double pct_timeout = 0.0;
  double pct_failed = 0.0;
  std::optional<double> min_pet;  // group minimum
  double pct_dangerous = 0.0;

  const Stat * stat(const std::string & name) const;
};

struct SummaryTable
{
  double threshold = kDefaultDangerThreshold;
  std::vector<GroupSummary> rows;
  std::vector<std::string> warnings;  // requested groups without trials
};

/// Groups by condition and, per key in `group_keys` ("gender", "age_band"),
/// by that key's levels next to the "General" pool. Practice trials are
/// skipped unless `include_practice`.
SummaryTable summarize(
  const std::vector<TrialMetrics> & metrics, const std::vector<std::string> & group_keys,
  double threshold = kDefaultDangerThreshold, bool include_practice = false);

std::string summary_csv(const SummaryTable & table);
nlohmann::json summary_json(const SummaryTable & table);
/// Plain-text layout following the behavioural-attributes table.
std::string summary_text(const SummaryTable & table);

struct Segment
{
  std::string name;   // e.g. "wait_gt_20"
  std::string level;  // e.g. "yes"
  std::function<bool(const TrialMetrics &)> member;
};

/// Segment definitions: "gender", "age_band", "wait_gt_20", "phone_wait_gt_75",
/// "phone_cross_gt_75". Each expands into its levels. Throws InvalidArgument.
std::vector<Segment> make_segments(const std::vector<std::string> & names);
const std::vector<std::string> & default_segment_names();

struct BinCell
{
  std::string segment;
  std::string level;
  Condition condition = Condition::Control;
  std::size_t n = 0;       // trials in the cell with a defined PET
  std::size_t n_safe = 0;  // of which PET > threshold
  std::optional<double> share;
};

std::vector<BinCell> sensitivity_bins(
  const std::vector<TrialMetrics> & metrics, const std::vector<Segment> & segments,
  double threshold = kDefaultDangerThreshold, bool include_practice = false);

std::string bins_csv(const std::vector<BinCell> & cells);

}  // namespace xwalk
