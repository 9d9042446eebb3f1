#include "xwalk/choice/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>

namespace xwalk
{

namespace
{
const std::map<std::string, std::string> & labels()
{
  static const std::map<std::string, std::string> m = {
    {"female", "Female"},
    {"age_30_plus", "Age 30+"},
    {"wait_time", "Wait time duration"},
    {"crossing_duration", "Crossing duration"},
    {"crossing_speed", "Crossing speed"},
    {"initial_walking_speed", "Initial walking speed"},
    {"avg_accel", "Average acceleration"},
    {"avg_decel", "Average deceleration"},
    {"max_accel", "Maximum acceleration"},
    {"max_decel", "Maximum deceleration"},
    {"head_turned_any", "Head turn during a trial"},
    {"head_orientations_per_s", "# of head orientations to smartphone (per s)"},
    {"pct_phone_wait", "% time head toward smartphone while waiting"},
    {"pct_phone_cross", "% time head toward smartphone while crossing"},
  };
  return m;
}

std::vector<std::string> row_order(const std::vector<ReportColumn> & columns)
{
  std::vector<std::string> rows;
  for (const ReportColumn & c : columns) {
    for (const std::string & n : c.fit.names) {
      if (std::find(rows.begin(), rows.end(), n) == rows.end()) {
        rows.push_back(n);
      }
    }
  }
  return rows;
}

std::optional<std::size_t> position(const MNLFit & fit, const std::string & name)
{
  const auto it = std::find(fit.names.begin(), fit.names.end(), name);
  if (it == fit.names.end()) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(it - fit.names.begin());
}
}  // namespace

std::string covariate_label(const std::string & column)
{
  const auto star = column.find('*');
  if (star != std::string::npos) {
    return covariate_label(column.substr(0, star)) + " * " +
           covariate_label(column.substr(star + 1));
  }
  const auto it = labels().find(column);
  return it == labels().end() ? column : it->second;
}

std::string coefficient_cell(double beta, double t)
{
  return fmt::format("{:.2f} ({:.2f})", beta, t);
}

std::string report_text(const std::vector<ReportColumn> & columns)
{
  const auto rows = row_order(columns);
  std::vector<std::vector<std::string>> table;
  table.push_back({"Variables"});
  for (const ReportColumn & c : columns) {
    table.back().push_back(c.label);
  }
  bool turned = false;
  for (const std::string & r : rows) {
    turned = turned || r.find("head_turned_any") != std::string::npos;
    std::vector<std::string> line{covariate_label(r)};
    for (const ReportColumn & c : columns) {
      const auto k = position(c.fit, r);
      line.push_back(
        k ? coefficient_cell(c.fit.beta(static_cast<Eigen::Index>(*k)),
                             c.fit.t_stats(static_cast<Eigen::Index>(*k)))
          : std::string("-"));
    }
    table.push_back(std::move(line));
  }
  std::vector<std::string> n_row{"N"};
  std::vector<std::string> rho_row{"rho^2"};
  for (const ReportColumn & c : columns) {
    n_row.push_back(fmt::format("{}", c.fit.n));
    rho_row.push_back(fmt::format("{:.2f}", c.fit.rho_sq));
  }
  table.push_back(std::move(n_row));
  table.push_back(std::move(rho_row));

  std::vector<std::size_t> width(columns.size() + 1, 0);
  for (const auto & line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      width[i] = std::max(width[i], line[i].size());
    }
  }
  std::string out;
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (r + 2 == table.size()) {
      std::size_t total = 0;
      for (const auto w : width) {
        total += w + 2;
      }
      out += std::string(total - 2, '-') + '\n';
    }
    const auto & line = table[r];
    for (std::size_t i = 0; i < line.size(); ++i) {
      out += i == 0 ? fmt::format("{:<{}}", line[i], width[i])
                    : fmt::format("  {:>{}}", line[i], width[i]);
    }
    out += '\n';
  }
  if (turned) {
    out += "Head turn during a trial: 1 when the head changed orientation at least once.\n";
  }
  return out;
}

std::string report_csv(const std::vector<ReportColumn> & columns)
{
  std::string out = "variable,column,beta,se,t\n";
  for (const ReportColumn & c : columns) {
    for (std::size_t i = 0; i < c.fit.names.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      out += fmt::format(
        "{},{},{},{},{}\n", c.fit.names[i], c.label, c.fit.beta(k), c.fit.se(k), c.fit.t_stats(k));
    }
  }
  for (const ReportColumn & c : columns) {
    out += fmt::format("rho_sq,{},{},,\n", c.label, c.fit.rho_sq);
    out += fmt::format("ll,{},{},,\n", c.label, c.fit.log_likelihood);
    out += fmt::format("ll0,{},{},,\n", c.label, c.fit.null_log_likelihood);
    out += fmt::format("n,{},{},,\n", c.label, c.fit.n);
  }
  return out;
}

nlohmann::json report_json(const std::vector<ReportColumn> & columns)
{
  nlohmann::json out = nlohmann::json::array();
  for (const ReportColumn & c : columns) {
    nlohmann::json j = fit_json(c.fit);
    j["label"] = c.label;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace xwalk
