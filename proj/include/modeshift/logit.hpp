#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace modeshift {

struct LogitOptions {
  double gradient_tolerance = 1e-8;  // on the score max-norm
  double step_tolerance = 1e-10;     // on the Newton step max-norm
  int max_iterations = 100;
  // Separation is declared once the coefficient norm on the standardized
  // covariate scale exceeds this while the score is still nonzero.
  double separation_norm = 30.0;
};

// Fitted Pr(D = 1 | x) = logistic(b0 + x'b).
struct LogitModel {
  Eigen::VectorXd coefficients;  // intercept first
  std::vector<std::string> covariate_names;
  bool converged = false;
  double log_likelihood = 0.0;
  int iterations = 0;
  Eigen::MatrixXd covariance;  // inverse observed information at the optimum
  std::vector<double> log_likelihood_trace;  // one entry per accepted iterate

  std::size_t covariate_count() const { return covariate_names.size(); }
};

double logistic(double eta);

// Maximum-likelihood logit by iteratively reweighted least squares with
// step halving. Throws SeparationError or CollinearityError.
LogitModel fit_logit(const Eigen::MatrixXd& rows, const Eigen::VectorXd& labels,
                     const LogitOptions& options = {},
                     std::vector<std::string> covariate_names = {});

// Strictly inside (0, 1). Throws ValidationError on a dimension mismatch.
double predict_proba(const LogitModel& model, std::span<const double> row);
Eigen::VectorXd predict_proba(const LogitModel& model, const Eigen::MatrixXd& rows);

}  // namespace modeshift
