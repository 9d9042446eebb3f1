#pragma once

#include "xwalk/analytics/summary.hpp"
#include "xwalk/choice/mnl.hpp"
#include "xwalk/trial/condition.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace xwalk
{

struct Interaction
{
  std::string left;
  std::string right;

  /// Column name, "left*right".
  std::string name() const { return left + "*" + right; }
};

/// Binary safe/unsafe design. The unsafe alternative is alternative 0 with
/// all-zero utility; covariates enter the safe alternative (index 1).
struct DesignSpec
{
  double threshold = kDefaultDangerThreshold;  // s, safe iff min PET > threshold
  std::vector<std::string> covariates;
  std::vector<Interaction> interactions;
  std::optional<Condition> condition;  // empty pools every condition
  bool standardize = false;
  bool include_practice = false;

  /// Column names: covariates, then interactions.
  std::vector<std::string> columns() const;
  /// Throws InvalidSpec on unknown or duplicate names, and on phone-only
  /// variables requested for the Control condition.
  void validate() const;

  /// Behavioural covariates for one condition: female, wait time, initial
  /// walking speed, average acceleration and deceleration, plus the phone
  /// variables when the condition has a phone.
  static DesignSpec standard(Condition c);
};

void to_json(nlohmann::json & j, const Interaction & i);
void from_json(const nlohmann::json & j, Interaction & i);
void to_json(nlohmann::json & j, const DesignSpec & s);
void from_json(const nlohmann::json & j, DesignSpec & s);

/// JSON accepted by the estimate command: either one spec, or
/// {"conditions": {"control": spec, ...}} with a spec per condition.
std::vector<DesignSpec> design_specs_from_json(const nlohmann::json & j);

struct Design
{
  DesignSpec spec;
  std::vector<std::string> columns;
  std::vector<ChoiceObservation> observations;
  std::vector<std::string> participant_ids;  // per observation
  std::vector<Condition> conditions;         // per observation
  std::size_t excluded_undefined_pet = 0;
  std::size_t excluded_missing_covariate = 0;
  // Column means and standard deviations when standardized.
  std::vector<double> means;
  std::vector<double> sds;
};

/// One observation per trial matching the condition filter. Throws
/// InvalidSpec.
Design build_design(const std::vector<TrialMetrics> & metrics, const DesignSpec & spec);

/// Removes columns that take one value across every observation (such as
/// gender within a single participant) and returns their names.
std::vector<std::string> drop_constant_columns(Design & design);

/// Wide layout, one line per trial: k,participant,condition,safe,<columns>.
std::string design_csv(const Design & design);

}  // namespace xwalk
