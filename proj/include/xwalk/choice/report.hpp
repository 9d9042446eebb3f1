#pragma once

#include "xwalk/choice/mnl.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace xwalk
{

struct ReportColumn
{
  std::string label;  // e.g. "Not distracted"
  MNLFit fit;
};

/// Display label for a design column; interactions render as "A * B".
std::string covariate_label(const std::string & column);

/// "coef (t)" with two decimals, e.g. "-0.11 (-1.88)".
std::string coefficient_cell(double beta, double t);

/// Rows are the union of the columns' covariates in first-seen order, one
/// column per fit. Covariates absent from a fit show "-". Footer rows give
/// N and rho^2.
std::string report_text(const std::vector<ReportColumn> & columns);
/// Tidy rows: variable,column,beta,se,t plus rho_sq / ll / ll0 / n rows.
std::string report_csv(const std::vector<ReportColumn> & columns);
nlohmann::json report_json(const std::vector<ReportColumn> & columns);

}  // namespace xwalk
