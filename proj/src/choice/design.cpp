#include "xwalk/choice/design.hpp"

#include "xwalk/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace xwalk
{

namespace
{
bool known_metric(const std::string & name)
{
  const auto & names = metric_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

// min_pet is the dependent variable; the rest are outcomes of the same
// encounter and would leak it.
bool usable_covariate(const std::string & name)
{
  return known_metric(name) && name != "min_pet" && name != "min_ttc";
}

Interaction parse_interaction(const std::string & s)
{
  const auto star = s.find('*');
  if (star == std::string::npos || star == 0 || star + 1 == s.size()) {
    throw InvalidSpec(fmt::format("interaction '{}' must look like 'a*b'", s));
  }
  return {s.substr(0, star), s.substr(star + 1)};
}
}  // namespace

std::vector<std::string> DesignSpec::columns() const
{
  std::vector<std::string> out = covariates;
  for (const Interaction & i : interactions) {
    out.push_back(i.name());
  }
  return out;
}

void DesignSpec::validate() const
{
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw InvalidSpec(fmt::format("threshold must be positive, got {}", threshold));
  }
  if (covariates.empty() && interactions.empty()) {
    throw InvalidSpec("design has no covariates");
  }
  std::set<std::string> seen;
  auto check = [&](const std::string & name) {
    if (!usable_covariate(name)) {
      throw InvalidSpec(fmt::format("unknown covariate '{}'", name));
    }
    if (condition == Condition::Control && is_distraction_metric(name)) {
      throw InvalidSpec(
        fmt::format("covariate '{}' is undefined without a phone (condition Control)", name));
    }
  };
  for (const std::string & c : covariates) {
    check(c);
    if (!seen.insert(c).second) {
      throw InvalidSpec(fmt::format("duplicate covariate '{}'", c));
    }
  }
  for (const Interaction & i : interactions) {
    check(i.left);
    check(i.right);
    if (!seen.insert(i.name()).second) {
      throw InvalidSpec(fmt::format("duplicate interaction '{}'", i.name()));
    }
  }
}

DesignSpec DesignSpec::standard(Condition c)
{
  DesignSpec s;
  s.condition = c;
  s.covariates = {"female", "wait_time", "initial_walking_speed", "avg_accel", "avg_decel"};
  if (has_phone(c)) {
    s.covariates.insert(
      s.covariates.end(), {"head_turned_any", "head_orientations_per_s", "pct_phone_wait"});
  }
  return s;
}

void to_json(nlohmann::json & j, const Interaction & i)
{
  j = i.name();
}

void from_json(const nlohmann::json & j, Interaction & i)
{
  if (j.is_string()) {
    i = parse_interaction(j.get<std::string>());
  } else if (j.is_array() && j.size() == 2) {
    i = {j.at(0).get<std::string>(), j.at(1).get<std::string>()};
  } else {
    throw InvalidSpec(fmt::format("bad interaction {}", j.dump()));
  }
}

void to_json(nlohmann::json & j, const DesignSpec & s)
{
  j = {
    {"threshold", s.threshold},
    {"covariates", s.covariates},
    {"interactions", s.interactions},
    {"standardize", s.standardize},
    {"include_practice", s.include_practice},
  };
  if (s.condition) {
    j["condition"] = std::string(to_string(*s.condition));
  }
}

void from_json(const nlohmann::json & j, DesignSpec & s)
{
  if (!j.is_object()) {
    throw InvalidSpec("design spec must be a JSON object");
  }
  try {
    if (j.contains("threshold")) {
      s.threshold = j.at("threshold").get<double>();
    }
    if (j.contains("covariates")) {
      s.covariates = j.at("covariates").get<std::vector<std::string>>();
    }
    if (j.contains("interactions")) {
      s.interactions = j.at("interactions").get<std::vector<Interaction>>();
    }
    if (j.contains("standardize")) {
      s.standardize = j.at("standardize").get<bool>();
    }
    if (j.contains("include_practice")) {
      s.include_practice = j.at("include_practice").get<bool>();
    }
    if (j.contains("condition") && !j.at("condition").is_null()) {
      s.condition = condition_from_string(j.at("condition").get<std::string>());
    }
  } catch (const nlohmann::json::exception & e) {
    throw InvalidSpec(fmt::format("design spec: {}", e.what()));
  } catch (const InvalidArgument & e) {
    throw InvalidSpec(fmt::format("design spec: {}", e.what()));
  }
}

std::vector<DesignSpec> design_specs_from_json(const nlohmann::json & j)
{
  if (!j.is_object()) {
    throw InvalidSpec("design spec must be a JSON object");
  }
  if (!j.contains("conditions")) {
    DesignSpec s = j.get<DesignSpec>();
    s.validate();
    return {s};
  }
  const auto & per = j.at("conditions");
  if (!per.is_object() || per.empty()) {
    throw InvalidSpec("'conditions' must be a non-empty object");
  }
  nlohmann::json defaults = j;
  defaults.erase("conditions");
  std::vector<std::pair<Condition, DesignSpec>> specs;
  for (const auto & [key, value] : per.items()) {
    Condition c;
    try {
      c = condition_from_string(key);
    } catch (const InvalidArgument & e) {
      throw InvalidSpec(e.what());
    }
    nlohmann::json merged = defaults;
    merged.update(value);
    DesignSpec s = merged.get<DesignSpec>();
    s.condition = c;
    s.validate();
    specs.emplace_back(c, std::move(s));
  }
  std::sort(specs.begin(), specs.end(), [](const auto & a, const auto & b) {
    return index_of(a.first) < index_of(b.first);
  });
  std::vector<DesignSpec> out;
  for (auto & [c, s] : specs) {
    out.push_back(std::move(s));
  }
  return out;
}

Design build_design(const std::vector<TrialMetrics> & metrics, const DesignSpec & spec)
{
  spec.validate();
  Design d;
  d.spec = spec;
  d.columns = spec.columns();
  const auto K = static_cast<Eigen::Index>(d.columns.size());

  for (const TrialMetrics & m : metrics) {
    if (spec.condition && m.meta.condition != *spec.condition) {
      continue;
    }
    if (m.meta.practice && !spec.include_practice) {
      continue;
    }
    if (!m.conflict.min_pet) {
      ++d.excluded_undefined_pet;
      continue;
    }
    Eigen::RowVectorXd row(K);
    bool complete = true;
    Eigen::Index c = 0;
    for (const std::string & name : spec.covariates) {
      const auto v = metric_value(m, name);
      complete = complete && v.has_value();
      row(c++) = v.value_or(0.0);
    }
    for (const Interaction & i : spec.interactions) {
      const auto l = metric_value(m, i.left);
      const auto r = metric_value(m, i.right);
      complete = complete && l && r;
      row(c++) = l.value_or(0.0) * r.value_or(0.0);
    }
    if (!complete) {
      ++d.excluded_missing_covariate;
      continue;
    }
    ChoiceObservation o;
    o.k = fmt::format("{}/{}", m.meta.session_id, m.meta.trial_index);
    o.x = Eigen::MatrixXd::Zero(2, K);
    o.x.row(1) = row;
    o.chosen = *m.conflict.min_pet > spec.threshold ? 1 : 0;
    d.observations.push_back(std::move(o));
    d.participant_ids.push_back(m.meta.participant_id);
    d.conditions.push_back(m.meta.condition);
  }

  if (spec.standardize && !d.observations.empty()) {
    const auto n = static_cast<double>(d.observations.size());
    d.means.assign(d.columns.size(), 0.0);
    d.sds.assign(d.columns.size(), 1.0);
    for (Eigen::Index k = 0; k < K; ++k) {
      double sum = 0.0;
      double sq = 0.0;
      for (const auto & o : d.observations) {
        sum += o.x(1, k);
        sq += o.x(1, k) * o.x(1, k);
      }
      const double mean = sum / n;
      const double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
      d.means[static_cast<std::size_t>(k)] = mean;
      if (sd > 0.0) {
        d.sds[static_cast<std::size_t>(k)] = sd;
      }
      for (auto & o : d.observations) {
        o.x(1, k) = (o.x(1, k) - mean) / d.sds[static_cast<std::size_t>(k)];
      }
    }
  }
  return d;
}

std::vector<std::string> drop_constant_columns(Design & design)
{
  std::vector<std::string> kept;
  std::vector<std::string> dropped;
  std::vector<Eigen::Index> cols;
  std::vector<double> means;
  std::vector<double> sds;
  for (std::size_t i = 0; i < design.columns.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    bool varies = false;
    if (!design.observations.empty()) {
      const double first = design.observations.front().x(1, k);
      varies = std::any_of(design.observations.begin(), design.observations.end(),
        [&](const ChoiceObservation & o) { return o.x(1, k) != first; });
    }
    if (!varies) {
      dropped.push_back(design.columns[i]);
      continue;
    }
    kept.push_back(design.columns[i]);
    cols.push_back(k);
    if (!design.means.empty()) {
      means.push_back(design.means[i]);
      sds.push_back(design.sds[i]);
    }
  }
  if (dropped.empty()) {
    return dropped;
  }
  for (ChoiceObservation & o : design.observations) {
    o.x = Eigen::MatrixXd(o.x(Eigen::all, cols));
  }
  design.columns = std::move(kept);
  design.means = std::move(means);
  design.sds = std::move(sds);
  return dropped;
}

std::string design_csv(const Design & design)
{
  std::string out = "k,participant,condition,safe";
  for (const auto & c : design.columns) {
    out += ',' + c;
  }
  out += '\n';
  for (std::size_t i = 0; i < design.observations.size(); ++i) {
    const ChoiceObservation & o = design.observations[i];
    out += fmt::format("{},{},{},{}", o.k, design.participant_ids[i], to_string(design.conditions[i]),
      o.chosen);
    for (Eigen::Index k = 0; k < o.x.cols(); ++k) {
      out += fmt::format(",{}", o.x(1, k));
    }
    out += '\n';
  }
  return out;
}

}  // namespace xwalk
