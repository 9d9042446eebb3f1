#include "xwalk/choice/mnl.hpp"

#include "xwalk/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace xwalk
{

namespace
{
constexpr int kMaxHalvings = 40;
constexpr double kLlSlack = 1e-12;
// Smallest eigenvalue of the column-scaled information matrix below which
// the design is treated as collinear (at beta = 0) or separated (at the
// optimum).
constexpr double kCollinearEigen = 1e-10;
constexpr double kSeparationEigen = 1e-6;
constexpr double kLoadingCutoff = 0.1;

struct Accum
{
  double ll = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

Accum accumulate(
  const Eigen::VectorXd & beta, std::span<const ChoiceObservation> obs, bool with_hessian)
{
  const Eigen::Index K = beta.size();
  Accum a;
  a.grad = Eigen::VectorXd::Zero(K);
  if (with_hessian) {
    a.hess = Eigen::MatrixXd::Zero(K, K);
  }
  for (const ChoiceObservation & o : obs) {
    const Eigen::VectorXd p = probability(beta, o.x);
    a.ll += std::log(p(o.chosen));
    const Eigen::RowVectorXd xbar = p.transpose() * o.x;
    a.grad += (o.x.row(o.chosen) - xbar).transpose();
    if (with_hessian) {
      const Eigen::MatrixXd centred = o.x.rowwise() - xbar;
      a.hess.noalias() -= centred.transpose() * p.asDiagonal() * centred;
    }
  }
  return a;
}

void check_dims(const Eigen::VectorXd & beta, std::span<const ChoiceObservation> obs)
{
  for (const ChoiceObservation & o : obs) {
    if (o.x.cols() != beta.size()) {
      throw InvalidArgument(fmt::format(
        "observation '{}' has {} covariates, beta has {}", o.k, o.x.cols(), beta.size()));
    }
  }
}

std::vector<std::string> loaded_columns(
  const Eigen::VectorXd & v, const std::vector<std::string> & names)
{
  std::vector<std::string> out;
  const double norm = v.norm();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (norm > 0.0 && std::abs(v(i)) / norm > kLoadingCutoff) {
      out.push_back(names[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

std::string join(const std::vector<std::string> & parts)
{
  std::string out;
  for (const auto & p : parts) {
    out += out.empty() ? p : ", " + p;
  }
  return out;
}

// Smallest eigenpair of D^-1 M D^-1; the eigenvector stays in scaled units.
std::pair<double, Eigen::VectorXd> smallest_scaled(
  const Eigen::MatrixXd & info, const Eigen::VectorXd & scale)
{
  const Eigen::VectorXd inv = scale.cwiseInverse();
  const Eigen::MatrixXd s = inv.asDiagonal() * info * inv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s + s.transpose()));
  return {eig.eigenvalues()(0), eig.eigenvectors().col(0)};
}

double null_log_likelihood(std::span<const ChoiceObservation> obs, NullModel model)
{
  if (model == NullModel::EqualShares) {
    double ll = 0.0;
    for (const ChoiceObservation & o : obs) {
      ll -= std::log(static_cast<double>(o.x.rows()));
    }
    return ll;
  }
  const Eigen::Index J = obs.front().x.rows();
  std::vector<double> counts(static_cast<std::size_t>(J), 0.0);
  for (const ChoiceObservation & o : obs) {
    if (o.x.rows() != J) {
      throw InvalidArgument("constants-only null needs a fixed choice-set size");
    }
    counts[static_cast<std::size_t>(o.chosen)] += 1.0;
  }
  const auto n = static_cast<double>(obs.size());
  double ll = 0.0;
  for (const double c : counts) {
    if (c > 0.0) {
      ll += c * std::log(c / n);
    }
  }
  return ll;
}

std::vector<std::string> split(const std::string & line)
{
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

double parse_double(const std::string & s, std::size_t line)
{
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch (const std::exception &) {
    throw InvalidArgument(fmt::format("line {}: '{}' is not a number", line, s));
  }
}
}  // namespace

void ChoiceObservation::validate() const
{
  if (x.rows() < 2) {
    throw InvalidArgument(fmt::format("observation '{}' needs at least two alternatives", k));
  }
  if (chosen < 0 || chosen >= x.rows()) {
    throw InvalidArgument(
      fmt::format("observation '{}' chose {} of {} alternatives", k, chosen, x.rows()));
  }
  if (!x.allFinite()) {
    throw InvalidArgument(fmt::format("observation '{}' has non-finite covariates", k));
  }
}

Eigen::VectorXd probability(const Eigen::VectorXd & beta, const Eigen::MatrixXd & x)
{
  if (x.cols() != beta.size()) {
    throw InvalidArgument(
      fmt::format("{} covariates against {} coefficients", x.cols(), beta.size()));
  }
  const Eigen::VectorXd u = x * beta;
  if (!u.allFinite()) {
    throw InvalidArgument("non-finite utility");
  }
  const Eigen::VectorXd e = (u.array() - u.maxCoeff()).exp();
  return e / e.sum();
}

double log_likelihood(const Eigen::VectorXd & beta, std::span<const ChoiceObservation> obs)
{
  check_dims(beta, obs);
  double ll = 0.0;
  for (const ChoiceObservation & o : obs) {
    ll += std::log(probability(beta, o.x)(o.chosen));
  }
  return ll;
}

Eigen::VectorXd gradient(const Eigen::VectorXd & beta, std::span<const ChoiceObservation> obs)
{
  check_dims(beta, obs);
  return accumulate(beta, obs, false).grad;
}

Eigen::MatrixXd hessian(const Eigen::VectorXd & beta, std::span<const ChoiceObservation> obs)
{
  check_dims(beta, obs);
  return accumulate(beta, obs, true).hess;
}

MNLFit estimate(
  std::span<const ChoiceObservation> obs, const std::vector<std::string> & names,
  const EstimateOptions & options)
{
  if (obs.empty()) {
    throw InvalidArgument("estimation needs at least one observation");
  }
  const auto K = static_cast<Eigen::Index>(names.size());
  if (K == 0) {
    throw InvalidArgument("estimation needs at least one covariate");
  }
  for (const ChoiceObservation & o : obs) {
    o.validate();
  }
  Eigen::VectorXd beta = options.init.size() == 0 ? Eigen::VectorXd::Zero(K) : options.init;
  if (beta.size() != K) {
    throw InvalidArgument(
      fmt::format("initial beta has {} entries for {} covariates", beta.size(), K));
  }
  check_dims(beta, obs);

  // Identification at beta = 0: the information there is the unweighted
  // within-choice-set covariance of the covariates.
  const Eigen::MatrixXd info0 = -accumulate(Eigen::VectorXd::Zero(K), obs, true).hess;
  Eigen::VectorXd scale = info0.diagonal().cwiseMax(0.0).cwiseSqrt();
  std::vector<std::string> constant;
  for (Eigen::Index i = 0; i < K; ++i) {
    if (!(scale(i) > 0.0)) {
      constant.push_back(names[static_cast<std::size_t>(i)]);
    }
  }
  if (!constant.empty()) {
    throw EstimationError(
      fmt::format("collinear design: no variation within choice sets in {}", join(constant)),
      constant);
  }
  {
    const auto [lambda, v] = smallest_scaled(info0, scale);
    if (lambda < kCollinearEigen) {
      const auto cols = loaded_columns(v, names);
      throw EstimationError(fmt::format("collinear design: {}", join(cols)), cols);
    }
  }

  MNLFit fit;
  fit.names = names;
  fit.n = obs.size();
  Accum a = accumulate(beta, obs, true);
  fit.trace.push_back({0, a.ll, a.grad.lpNorm<Eigen::Infinity>(), 0});
  for (int it = 1; it <= options.max_iter; ++it) {
    if (a.grad.lpNorm<Eigen::Infinity>() < options.tol) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd step = (-a.hess).ldlt().solve(a.grad);
    if (!step.allFinite()) {
      break;
    }
    double s = 1.0;
    int halvings = 0;
    bool improved = false;
    Eigen::VectorXd cand;
    double ll_cand = -std::numeric_limits<double>::infinity();
    for (; halvings <= kMaxHalvings; ++halvings, s *= 0.5) {
      cand = beta + s * step;
      ll_cand = log_likelihood(cand, obs);
      // Near the optimum the gain is below rounding noise in the summed
      // log-likelihood; do not mistake that for a worse point.
      if (ll_cand >= a.ll - kLlSlack * (1.0 + std::abs(a.ll))) {
        improved = true;
        break;
      }
    }
    if (!improved) {
      break;
    }
    beta = cand;
    a = accumulate(beta, obs, true);
    fit.iterations = it;
    fit.trace.push_back({it, a.ll, a.grad.lpNorm<Eigen::Infinity>(), halvings});
  }
  if (!fit.converged && a.grad.lpNorm<Eigen::Infinity>() < options.tol) {
    fit.converged = true;
  }

  const Eigen::MatrixXd info = -a.hess;
  {
    const auto [lambda, v] = smallest_scaled(info, scale);
    if (lambda < kSeparationEigen) {
      const auto cols = loaded_columns(v, names);
      throw EstimationError(
        fmt::format("separated data, likelihood has no finite maximum along {}", join(cols)), cols);
    }
  }

  fit.beta = beta;
  fit.log_likelihood = a.ll;
  Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(K, K));
  fit.covariance = 0.5 * (cov + cov.transpose());
  fit.se = fit.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.t_stats = beta.cwiseQuotient(fit.se);
  fit.null_log_likelihood = null_log_likelihood(obs, options.null_model);
  fit.rho_sq = fit.null_log_likelihood < 0.0 ? 1.0 - fit.log_likelihood / fit.null_log_likelihood : 0.0;
  return fit;
}

nlohmann::json fit_json(const MNLFit & fit)
{
  nlohmann::json coefs = nlohmann::json::array();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    coefs.push_back(
      {{"name", fit.names[i]}, {"beta", fit.beta(k)}, {"se", fit.se(k)}, {"t", fit.t_stats(k)}});
  }
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) {
      row.push_back(fit.covariance(r, c));
    }
    cov.push_back(std::move(row));
  }
  nlohmann::json trace = nlohmann::json::array();
  for (const IterationTrace & t : fit.trace) {
    trace.push_back(
      {{"iteration", t.iteration}, {"ll", t.log_likelihood}, {"grad_norm", t.gradient_norm},
       {"halvings", t.halvings}});
  }
  return {
    {"n", fit.n},
    {"coefficients", std::move(coefs)},
    {"covariance", std::move(cov)},
    {"ll", fit.log_likelihood},
    {"ll0", fit.null_log_likelihood},
    {"rho_sq", fit.rho_sq},
    {"converged", fit.converged},
    {"iterations", fit.iterations},
    {"trace", std::move(trace)},
  };
}

void write_observations_csv(
  std::ostream & os, const std::vector<std::string> & names,
  std::span<const ChoiceObservation> obs)
{
  os << "k,alt,chosen";
  for (const auto & n : names) {
    os << ',' << n;
  }
  os << '\n';
  for (const ChoiceObservation & o : obs) {
    for (Eigen::Index j = 0; j < o.x.rows(); ++j) {
      os << o.k << ',' << j << ',' << (j == o.chosen ? 1 : 0);
      for (Eigen::Index c = 0; c < o.x.cols(); ++c) {
        os << ',' << fmt::format("{}", o.x(j, c));
      }
      os << '\n';
    }
  }
}

ObservationTable read_observations_csv(std::istream & is)
{
  ObservationTable out;
  std::string line;
  if (!std::getline(is, line)) {
    throw InvalidArgument("empty observation table");
  }
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "k" || header[1] != "alt" || header[2] != "chosen") {
    throw InvalidArgument("line 1: expected header k,alt,chosen,<covariates>");
  }
  out.names.assign(header.begin() + 3, header.end());
  const std::size_t K = out.names.size();

  struct Pending
  {
    std::string k;
    std::vector<std::vector<double>> rows;
    int chosen = -1;
    std::size_t first_line = 0;
  };
  Pending cur;
  auto flush = [&]() {
    if (cur.rows.empty()) {
      return;
    }
    if (cur.chosen < 0) {
      throw InvalidArgument(fmt::format("line {}: '{}' has no chosen alternative", cur.first_line, cur.k));
    }
    ChoiceObservation o;
    o.k = cur.k;
    o.chosen = cur.chosen;
    o.x.resize(static_cast<Eigen::Index>(cur.rows.size()), static_cast<Eigen::Index>(K));
    for (std::size_t j = 0; j < cur.rows.size(); ++j) {
      for (std::size_t c = 0; c < K; ++c) {
        o.x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = cur.rows[j][c];
      }
    }
    o.validate();
    out.observations.push_back(std::move(o));
    cur = Pending{};
  };

  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) {
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != K + 3) {
      throw InvalidArgument(fmt::format("line {}: {} cells, expected {}", n, cells.size(), K + 3));
    }
    const auto alt = static_cast<long>(parse_double(cells[1], n));
    if (alt == 0) {
      flush();
      cur.k = cells[0];
      cur.first_line = n;
    } else if (cells[0] != cur.k || alt != static_cast<long>(cur.rows.size())) {
      throw InvalidArgument(fmt::format("line {}: alternatives out of order", n));
    }
    const double chosen = parse_double(cells[2], n);
    if (chosen == 1.0) {
      if (cur.chosen >= 0) {
        throw InvalidArgument(fmt::format("line {}: second chosen alternative", n));
      }
      cur.chosen = static_cast<int>(alt);
    } else if (chosen != 0.0) {
      throw InvalidArgument(fmt::format("line {}: chosen must be 0 or 1", n));
    }
    std::vector<double> row(K);
    for (std::size_t c = 0; c < K; ++c) {
      row[c] = parse_double(cells[c + 3], n);
    }
    cur.rows.push_back(std::move(row));
  }
  flush();
  return out;
}

}  // namespace xwalk
