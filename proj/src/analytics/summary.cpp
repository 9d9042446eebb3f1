#include "xwalk/analytics/summary.hpp"

#include "xwalk/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace xwalk
{

namespace
{

struct RowLabel
{
  const char * metric;
  const char * label;
  bool distraction_only;
};

// Text-table rows, in display order.
constexpr RowLabel kTextRows[] = {
  {"wait_time", "Wait time duration (s)", false},
  {"crossing_duration", "Crossing duration (s)", false},
  {"crossing_speed", "Crossing speed (m/s)", false},
  {"initial_walking_speed", "Initial walking speed (m/s)", false},
  {"pct_phone_wait", "% time head toward smartphone while waiting", true},
  {"pct_phone_cross", "% time head toward smartphone while crossing", true},
  {"head_orientations_per_s", "# head orientations to smartphone (N/s)", true},
  {"max_accel", "Maximum acceleration (m/s2)", false},
  {"max_decel", "Maximum deceleration (m/s2)", false},
  {"avg_accel", "Average acceleration (m/s2)", false},
  {"avg_decel", "Average deceleration (m/s2)", false},
};

const std::vector<std::string> kSummaryMetrics = {
  "wait_time",      "crossing_duration", "crossing_speed", "initial_walking_speed",
  "pct_phone_wait", "pct_phone_cross",   "head_orientations_per_s", "head_turned_any",
  "max_accel",      "max_decel",         "avg_accel",      "avg_decel",
  "min_ttc",        "min_pet",
};

std::string format_opt(const std::optional<double> & v)
{
  return v ? fmt::format("{:.6f}", *v) : std::string();
}

struct GroupDef
{
  std::string name;
  std::function<bool(const TrialMetrics &)> member;
};

std::vector<GroupDef> group_defs(const std::vector<std::string> & keys)
{
  std::vector<GroupDef> out{{"General", [](const TrialMetrics &) { return true; }}};
  for (const std::string & key : keys) {
    if (key == "condition" || key == "general") {
      continue;
    }
    if (key == "gender") {
      out.push_back({"Female", [](const TrialMetrics & m) { return m.meta.participant.female; }});
      out.push_back({"Male", [](const TrialMetrics & m) { return !m.meta.participant.female; }});
    } else if (key == "age_band" || key == "age") {
      out.push_back({"18-30", [](const TrialMetrics & m) {
                       return m.meta.participant.age_band == AgeBand::Age18To30;
                     }});
      out.push_back({"30+", [](const TrialMetrics & m) {
                       return m.meta.participant.age_band == AgeBand::Age30Plus;
                     }});
    } else {
      throw InvalidArgument(fmt::format("unknown group key '{}'", key));
    }
  }
  return out;
}

}  // namespace

bool is_dangerous(const ConflictMetrics & m, double threshold) noexcept
{
  return (m.min_ttc && *m.min_ttc < threshold) || (m.min_pet && *m.min_pet < threshold);
}

ConflictMetrics compute_conflict(const TrialRecord & record, double threshold)
{
  ConflictMetrics out;
  for (const TtcSample & s : compute_ttc_series(record, record.geometry)) {
    if (!out.min_ttc || s.ttc < *out.min_ttc) {
      out.min_ttc = s.ttc;
    }
  }
  out.min_pet = compute_pet(record, record.geometry);
  const Kinematics k = compute_kinematics(record);
  out.max_accel = k.max_accel;
  out.max_decel = k.max_decel;
  out.dangerous = is_dangerous(out, threshold);
  return out;
}

TrialMetrics compute_metrics(const TrialRecord & record, double threshold)
{
  TrialMetrics m;
  m.meta = record.meta;
  m.outcome = record.outcome.value_or(Outcome::TimeOut);
  m.cause = record.cause;
  m.crossing = compute_crossing(record);
  m.kinematics = compute_kinematics(record);
  m.distraction = compute_distraction(record);
  m.conflict = compute_conflict(record, threshold);
  return m;
}

const std::vector<std::string> & metric_names()
{
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = kSummaryMetrics;
    n.push_back("female");
    n.push_back("age_30_plus");
    return n;
  }();
  return names;
}

bool is_distraction_metric(const std::string & name)
{
  return name == "pct_phone_wait" || name == "pct_phone_cross" ||
         name == "head_orientations_per_s" || name == "head_turned_any";
}

std::optional<double> metric_value(const TrialMetrics & m, const std::string & name)
{
  if (name == "wait_time") return m.crossing.wait_time;
  if (name == "crossing_duration") return m.crossing.crossing_duration;
  if (name == "crossing_speed") return m.crossing.crossing_speed;
  if (name == "initial_walking_speed") return m.crossing.initial_walking_speed;
  if (name == "pct_phone_wait") return m.distraction.pct_phone_wait;
  if (name == "pct_phone_cross") return m.distraction.pct_phone_cross;
  if (name == "head_orientations_per_s") return m.distraction.head_orientations_per_s;
  if (name == "head_turned_any") return m.distraction.head_turned_any ? 1.0 : 0.0;
  if (name == "max_accel") return m.kinematics.max_accel;
  if (name == "max_decel") return m.kinematics.max_decel;
  if (name == "avg_accel") return m.kinematics.avg_accel;
  if (name == "avg_decel") return m.kinematics.avg_decel;
  if (name == "min_ttc") return m.conflict.min_ttc;
  if (name == "min_pet") return m.conflict.min_pet;
  if (name == "female") return m.meta.participant.female ? 1.0 : 0.0;
  if (name == "age_30_plus") return m.meta.participant.age_band == AgeBand::Age30Plus ? 1.0 : 0.0;
  throw InvalidArgument(fmt::format("unknown variable '{}'", name));
}

const Stat * GroupSummary::stat(const std::string & name) const
{
  for (const auto & [n, s] : means) {
    if (n == name) {
      return &s;
    }
  }
  return nullptr;
}

SummaryTable summarize(
  const std::vector<TrialMetrics> & metrics, const std::vector<std::string> & group_keys,
  double threshold, bool include_practice)
{
  SummaryTable table;
  table.threshold = threshold;
  const auto groups = group_defs(group_keys);

  for (const Condition c : kAllConditions) {
    for (const GroupDef & g : groups) {
      std::vector<const TrialMetrics *> members;
      for (const TrialMetrics & m : metrics) {
        if (m.meta.condition == c && (include_practice || !m.meta.practice) && g.member(m)) {
          members.push_back(&m);
        }
      }
      if (members.empty()) {
        table.warnings.push_back(
          fmt::format("no trials for group {} / {}", g.name, to_string(c)));
        continue;
      }
      GroupSummary row;
      row.group = g.name;
      row.condition = c;
      row.trials = members.size();
      for (const std::string & name : kSummaryMetrics) {
        Stat s;
        double sum = 0.0;
        for (const TrialMetrics * m : members) {
          if (const auto v = metric_value(*m, name)) {
            sum += *v;
            ++s.n;
          }
        }
        if (s.n > 0) {
          s.mean = sum / static_cast<double>(s.n);
        }
        row.means.emplace_back(name, s);
      }
      std::size_t success = 0;
      std::size_t timeout = 0;
      std::size_t failed = 0;
      std::size_t dangerous = 0;
      for (const TrialMetrics * m : members) {
        success += m->outcome == Outcome::Success;
        timeout += m->outcome == Outcome::TimeOut;
        failed += m->outcome == Outcome::Failed;
        dangerous += is_dangerous(m->conflict, threshold);
        if (m->conflict.min_pet && (!row.min_pet || *m->conflict.min_pet < *row.min_pet)) {
          row.min_pet = m->conflict.min_pet;
        }
      }
      const double n = static_cast<double>(members.size());
      row.pct_success = 100.0 * static_cast<double>(success) / n;
      row.pct_timeout = 100.0 * static_cast<double>(timeout) / n;
      row.pct_failed = 100.0 * static_cast<double>(failed) / n;
      row.pct_dangerous = 100.0 * static_cast<double>(dangerous) / n;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::string summary_csv(const SummaryTable & table)
{
  std::string out = "variable,condition,group,value,n\n";
  for (const GroupSummary & row : table.rows) {
    const auto cond = to_string(row.condition);
    for (const auto & [name, s] : row.means) {
      out += fmt::format("{},{},{},{},{}\n", name, cond, row.group, format_opt(s.mean), s.n);
    }
    out += fmt::format("min_pet_group,{},{},{},{}\n", cond, row.group, format_opt(row.min_pet), row.trials);
    out += fmt::format("pct_success,{},{},{:.6f},{}\n", cond, row.group, row.pct_success, row.trials);
    out += fmt::format("pct_timeout,{},{},{:.6f},{}\n", cond, row.group, row.pct_timeout, row.trials);
    out += fmt::format("pct_failed,{},{},{:.6f},{}\n", cond, row.group, row.pct_failed, row.trials);
    out += fmt::format(
      "pct_dangerous,{},{},{:.6f},{}\n", cond, row.group, row.pct_dangerous, row.trials);
  }
  return out;
}

nlohmann::json summary_json(const SummaryTable & table)
{
  nlohmann::json rows = nlohmann::json::array();
  for (const GroupSummary & row : table.rows) {
    nlohmann::json means = nlohmann::json::object();
    for (const auto & [name, s] : row.means) {
      means[name] = {{"mean", s.mean ? nlohmann::json(*s.mean) : nlohmann::json(nullptr)}, {"n", s.n}};
    }
    rows.push_back({
      {"group", row.group},
      {"condition", to_string(row.condition)},
      {"trials", row.trials},
      {"means", std::move(means)},
      {"pct_success", row.pct_success},
      {"pct_timeout", row.pct_timeout},
      {"pct_failed", row.pct_failed},
      {"min_pet", row.min_pet ? nlohmann::json(*row.min_pet) : nlohmann::json(nullptr)},
      {"pct_dangerous", row.pct_dangerous},
    });
  }
  return {{"threshold", table.threshold}, {"rows", std::move(rows)}, {"warnings", table.warnings}};
}

std::string summary_text(const SummaryTable & table)
{
  std::vector<std::string> groups;
  for (const GroupSummary & row : table.rows) {
    if (std::find(groups.begin(), groups.end(), row.group) == groups.end()) {
      groups.push_back(row.group);
    }
  }
  auto find_row = [&](Condition c, const std::string & g) -> const GroupSummary * {
    for (const GroupSummary & row : table.rows) {
      if (row.condition == c && row.group == g) {
        return &row;
      }
    }
    return nullptr;
  };

  std::string out = fmt::format("{:<46} {:<28}", "Variable", "Condition");
  for (const auto & g : groups) {
    out += fmt::format(" {:>8}", g);
  }
  out += '\n';

  auto emit = [&](const std::string & label, bool distraction_only, auto value_of) {
    bool first = true;
    for (const Condition c : kAllConditions) {
      if (distraction_only && !has_phone(c)) {
        continue;
      }
      bool any = false;
      std::string line =
        fmt::format("{:<46} {:<28}", first ? label : std::string(), display_name(c));
      for (const auto & g : groups) {
        const GroupSummary * row = find_row(c, g);
        const std::optional<double> v = row ? value_of(*row) : std::nullopt;
        line += v ? fmt::format(" {:>8.1f}", *v) : fmt::format(" {:>8}", "-");
        any = any || row != nullptr;
      }
      if (any) {
        out += line + '\n';
        first = false;
      }
    }
  };

  for (const RowLabel & r : kTextRows) {
    emit(r.label, r.distraction_only, [&](const GroupSummary & row) -> std::optional<double> {
      const Stat * s = row.stat(r.metric);
      return s ? s->mean : std::nullopt;
    });
  }
  emit("Successful (%)", false, [](const GroupSummary & row) -> std::optional<double> {
    return row.pct_success;
  });
  emit("Time-out (%)", false, [](const GroupSummary & row) -> std::optional<double> {
    return row.pct_timeout;
  });
  emit("Failed (%)", false, [](const GroupSummary & row) -> std::optional<double> {
    return row.pct_failed;
  });
  emit("Minimum PET (s)", false, [](const GroupSummary & row) { return row.min_pet; });
  emit(
    fmt::format("Dangerous, TTC or PET < {} s (%)", table.threshold), false,
    [](const GroupSummary & row) -> std::optional<double> { return row.pct_dangerous; });
  for (const auto & w : table.warnings) {
    out += "warning: " + w + '\n';
  }
  return out;
}

const std::vector<std::string> & default_segment_names()
{
  static const std::vector<std::string> names = {
    "gender", "age_band", "wait_gt_20", "phone_wait_gt_75", "phone_cross_gt_75"};
  return names;
}

std::vector<Segment> make_segments(const std::vector<std::string> & names)
{
  std::vector<Segment> out;
  auto threshold_segment = [&](const std::string & name, const char * metric, double cut) {
    out.push_back({name, "yes", [metric, cut](const TrialMetrics & m) {
                     const auto v = metric_value(m, metric);
                     return v && *v > cut;
                   }});
    out.push_back({name, "no", [metric, cut](const TrialMetrics & m) {
                     const auto v = metric_value(m, metric);
                     return v && *v <= cut;
                   }});
  };
  for (const std::string & name : names) {
    if (name == "gender") {
      out.push_back({name, "female", [](const TrialMetrics & m) { return m.meta.participant.female; }});
      out.push_back({name, "male", [](const TrialMetrics & m) { return !m.meta.participant.female; }});
    } else if (name == "age_band") {
      out.push_back({name, "18-30", [](const TrialMetrics & m) {
                       return m.meta.participant.age_band == AgeBand::Age18To30;
                     }});
      out.push_back({name, "30+", [](const TrialMetrics & m) {
                       return m.meta.participant.age_band == AgeBand::Age30Plus;
                     }});
    } else if (name == "wait_gt_20") {
      threshold_segment(name, "wait_time", 20.0);
    } else if (name == "phone_wait_gt_75") {
      threshold_segment(name, "pct_phone_wait", 75.0);
    } else if (name == "phone_cross_gt_75") {
      threshold_segment(name, "pct_phone_cross", 75.0);
    } else {
      throw InvalidArgument(fmt::format("unknown segment '{}'", name));
    }
  }
  return out;
}

std::vector<BinCell> sensitivity_bins(
  const std::vector<TrialMetrics> & metrics, const std::vector<Segment> & segments,
  double threshold, bool include_practice)
{
  std::vector<BinCell> out;
  for (const Segment & seg : segments) {
    for (const Condition c : kAllConditions) {
      BinCell cell;
      cell.segment = seg.name;
      cell.level = seg.level;
      cell.condition = c;
      for (const TrialMetrics & m : metrics) {
        if (m.meta.condition != c || (m.meta.practice && !include_practice) || !seg.member(m)) {
          continue;
        }
        if (!m.conflict.min_pet) {
          continue;
        }
        ++cell.n;
        cell.n_safe += *m.conflict.min_pet > threshold;
      }
      if (cell.n > 0) {
        cell.share = static_cast<double>(cell.n_safe) / static_cast<double>(cell.n);
      }
      out.push_back(std::move(cell));
    }
  }
  return out;
}

std::string bins_csv(const std::vector<BinCell> & cells)
{
  std::string out = "segment,level,condition,share,n,n_safe\n";
  for (const BinCell & c : cells) {
    out += fmt::format(
      "{},{},{},{},{},{}\n", c.segment, c.level, to_string(c.condition), format_opt(c.share), c.n,
      c.n_safe);
  }
  return out;
}

}  // namespace xwalk
