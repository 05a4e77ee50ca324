#include "modeshift/logit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "modeshift/error.hpp"

namespace modeshift {

namespace {

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out += (i ? ", " : "") + names[i];
  }
  return out;
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - softplus(eta(i));
  return ll;
}

double clamp_open(double p) {
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(p, lo, hi);
}

}  // namespace

CollinearityError::CollinearityError(std::vector<std::string> columns)
    : EstimationError("collinear covariates: " + join(columns)), columns_(std::move(columns)) {}

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

LogitModel fit_logit(const Eigen::MatrixXd& rows, const Eigen::VectorXd& labels,
                     const LogitOptions& options, std::vector<std::string> covariate_names) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index k = rows.cols();
  if (labels.size() != n) throw ValidationError("label count does not match row count");
  if (covariate_names.empty()) {
    for (Eigen::Index j = 0; j < k; ++j) covariate_names.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(covariate_names.size()) != k) {
    throw ValidationError("covariate name count does not match column count");
  }
  bool has_zero = false, has_one = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) == 0.0) {
      has_zero = true;
    } else if (labels(i) == 1.0) {
      has_one = true;
    } else {
      throw ValidationError("labels must be 0 or 1");
    }
  }
  if (!has_zero || !has_one) throw EstimationError("labels need both 0 and 1 values");
  if (!rows.allFinite()) throw ValidationError("covariate matrix has missing or non-finite entries");

  Eigen::MatrixXd x(n, k + 1);
  x.col(0).setOnes();
  x.rightCols(k) = rows;

  std::vector<std::string> all_names{"(intercept)"};
  all_names.insert(all_names.end(), covariate_names.begin(), covariate_names.end());

  // Rank check on unit-norm columns so the threshold is scale free.
  {
    Eigen::MatrixXd scaled = x;
    for (Eigen::Index j = 0; j <= k; ++j) {
      const double norm = scaled.col(j).norm();
      if (norm > 0.0) scaled.col(j) /= norm;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(1e-10);
    if (qr.rank() < k + 1) {
      std::vector<std::string> dependent;
      const auto& perm = qr.colsPermutation().indices();
      for (Eigen::Index j = qr.rank(); j <= k; ++j) dependent.push_back(all_names[perm(j)]);
      std::sort(dependent.begin(), dependent.end());
      throw CollinearityError(std::move(dependent));
    }
  }

  // Standardized-scale norm: slopes times column sd, intercept at the means.
  Eigen::VectorXd col_mean = rows.colwise().mean();
  Eigen::VectorXd col_sd(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    col_sd(j) = std::sqrt((rows.col(j).array() - col_mean(j)).square().sum() /
                          std::max<double>(1.0, static_cast<double>(n - 1)));
  }
  auto standardized_norm = [&](const Eigen::VectorXd& beta) {
    double centered_intercept = beta(0) + col_mean.dot(beta.tail(k));
    double ss = centered_intercept * centered_intercept;
    for (Eigen::Index j = 0; j < k; ++j) ss += std::pow(beta(j + 1) * col_sd(j), 2);
    return std::sqrt(ss);
  };

  LogitModel model;
  model.covariate_names = std::move(covariate_names);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k + 1);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = log_likelihood(eta, labels);
  model.log_likelihood_trace.push_back(ll);

  Eigen::VectorXd p(n), w(n), grad(k + 1);
  Eigen::MatrixXd hessian(k + 1, k + 1);
  auto evaluate = [&] {
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = logistic(eta(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    grad = x.transpose() * (labels - p);
    hessian = x.transpose() * w.asDiagonal() * x;
  };

  bool converged = false;
  int iteration = 0;
  evaluate();
  while (iteration < options.max_iterations) {
    if (grad.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 0.0) {
      if (standardized_norm(beta) > options.separation_norm) {
        throw SeparationError("complete or quasi-complete separation: coefficients diverge");
      }
      throw CollinearityError(all_names);
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    double t = 1.0;
    Eigen::VectorXd candidate = beta + step;
    Eigen::VectorXd candidate_eta = x * candidate;
    double candidate_ll = log_likelihood(candidate_eta, labels);
    while (!(candidate_ll >= ll) && t > 1e-12) {
      t *= 0.5;
      candidate = beta + t * step;
      candidate_eta = x * candidate;
      candidate_ll = log_likelihood(candidate_eta, labels);
    }
    ++iteration;
    if (!(candidate_ll >= ll)) {
      // No ascent along the Newton direction: already at the optimum numerically.
      converged = true;
      break;
    }
    beta = candidate;
    eta = candidate_eta;
    ll = candidate_ll;
    model.log_likelihood_trace.push_back(ll);
    evaluate();
    const double grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (grad_norm < options.gradient_tolerance) {
      converged = true;
      break;
    }
    if (standardized_norm(beta) > options.separation_norm) {
      throw SeparationError("complete or quasi-complete separation: coefficients diverge");
    }
    if ((t * step).lpNorm<Eigen::Infinity>() < options.step_tolerance) {
      converged = true;
      break;
    }
  }

  model.coefficients = beta;
  model.converged = converged;
  model.log_likelihood = ll;
  model.iterations = iteration;
  Eigen::LDLT<Eigen::MatrixXd> final_ldlt(hessian);
  model.covariance = final_ldlt.solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
  return model;
}

double predict_proba(const LogitModel& model, std::span<const double> row) {
  const std::size_t k = model.covariate_count();
  if (row.size() != k) {
    throw ValidationError("row has " + std::to_string(row.size()) + " covariates, model expects " +
                          std::to_string(k));
  }
  double eta = model.coefficients(0);
  for (std::size_t j = 0; j < k; ++j) {
    eta += model.coefficients(static_cast<Eigen::Index>(j + 1)) * row[j];
  }
  return clamp_open(logistic(eta));
}

Eigen::VectorXd predict_proba(const LogitModel& model, const Eigen::MatrixXd& rows) {
  if (static_cast<std::size_t>(rows.cols()) != model.covariate_count()) {
    throw ValidationError("row has " + std::to_string(rows.cols()) +
                          " covariates, model expects " +
                          std::to_string(model.covariate_count()));
  }
  const Eigen::VectorXd eta =
      (rows * model.coefficients.tail(rows.cols())).array() + model.coefficients(0);
  Eigen::VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) p(i) = clamp_open(logistic(eta(i)));
  return p;
}

}  // namespace modeshift
