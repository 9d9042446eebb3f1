#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace xwalk
{

/// One decision: J alternatives, each described by the same K covariates.
struct ChoiceObservation
{
  std::string k;      // decision-maker id
  Eigen::MatrixXd x;  // J x K, row j holds x_kj
  int chosen = 0;

  /// Throws InvalidArgument.
  void validate() const;
};

/// Softmax of x * beta with the maximum utility subtracted first.
/// Throws InvalidArgument on dimension mismatch or non-finite utilities.
Eigen::VectorXd probability(const Eigen::VectorXd & beta, const Eigen::MatrixXd & x);

double log_likelihood(const Eigen::VectorXd & beta, std::span<const ChoiceObservation> obs);
Eigen::VectorXd gradient(const Eigen::VectorXd & beta, std::span<const ChoiceObservation> obs);
Eigen::MatrixXd hessian(const Eigen::VectorXd & beta, std::span<const ChoiceObservation> obs);

enum class NullModel { EqualShares, ConstantsOnly };

struct EstimateOptions
{
  Eigen::VectorXd init;  // empty means zeros
  double tol = 1e-8;     // gradient infinity norm
  int max_iter = 100;
  NullModel null_model = NullModel::EqualShares;
};

struct IterationTrace
{
  int iteration = 0;
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;
  int halvings = 0;
};

struct MNLFit
{
  std::vector<std::string> names;
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd se;
  Eigen::VectorXd t_stats;
  double log_likelihood = 0.0;
  double null_log_likelihood = 0.0;
  double rho_sq = 0.0;
  bool converged = false;
  int iterations = 0;
  std::size_t n = 0;
  std::vector<IterationTrace> trace;
};

/// Newton-Raphson with step halving. Throws EstimationError naming the
/// columns involved when the design is collinear or the data are separated,
/// InvalidArgument on empty or malformed input.
MNLFit estimate(
  std::span<const ChoiceObservation> obs, const std::vector<std::string> & names,
  const EstimateOptions & options = {});

nlohmann::json fit_json(const MNLFit & fit);

/// Long format, one line per alternative: k,alt,chosen,<names...>.
void write_observations_csv(
  std::ostream & os, const std::vector<std::string> & names,
  std::span<const ChoiceObservation> obs);

struct ObservationTable
{
  std::vector<std::string> names;
  std::vector<ChoiceObservation> observations;
};

/// Reads the format written above. Throws InvalidArgument with the line
/// number on malformed input.
ObservationTable read_observations_csv(std::istream & is);

}  // namespace xwalk
