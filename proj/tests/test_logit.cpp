#include <chrono>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "modeshift/error.hpp"
#include "modeshift/logit.hpp"
#include "modeshift/rng.hpp"

using namespace modeshift;

namespace {

double log_lik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double b0, double b1) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double eta = b0 + (x.cols() ? b1 * x(i, 0) : 0.0);
    ll += y(i) * eta - std::log1p(std::exp(eta));
  }
  return ll;
}

// Coarse-to-fine grid search over (b0, b1), each pass shrinking the box
// around the best point.
std::pair<double, double> grid_mle(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  double c0 = 0.0, c1 = 0.0, half = 8.0;
  const int steps = 40;
  while (half > 1e-6) {
    double best = -INFINITY, b0 = c0, b1 = c1;
    for (int i = -steps; i <= steps; ++i) {
      for (int j = -steps; j <= steps; ++j) {
        const double t0 = c0 + half * i / steps;
        const double t1 = x.cols() ? c1 + half * j / steps : 0.0;
        const double ll = log_lik(x, y, t0, t1);
        if (ll > best) {
          best = ll;
          b0 = t0;
          b1 = t1;
        }
      }
    }
    c0 = b0;
    c1 = b1;
    half *= 0.2;
  }
  return {c0, c1};
}

}  // namespace

TEST_SUITE("logit") {
  TEST_CASE("six-point fixture matches the grid search") {
    const auto t0 = std::chrono::steady_clock::now();
    Eigen::MatrixXd x(6, 1);
    x << 0, 1, 2, 3, 4, 5;
    Eigen::VectorXd y(6);
    y << 0, 0, 1, 0, 1, 1;
    const auto m = fit_logit(x, y);
    const auto [b0, b1] = grid_mle(x, y);
    CHECK(m.converged);
    CHECK(std::abs(m.coefficients(0) - b0) < 1e-3);
    CHECK(std::abs(m.coefficients(1) - b1) < 1e-3);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 1.0);
  }

  TEST_CASE("random two-parameter fixtures match the grid search") {
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 30 + static_cast<int>(uniform_index(rng, 40));
      Eigen::MatrixXd x(n, 1);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        x(i, 0) = 2.0 * standard_normal(rng);
        y(i) = uniform01(rng) < logistic(-0.4 + 0.7 * x(i, 0)) ? 1.0 : 0.0;
      }
      const auto m = fit_logit(x, y);
      const auto [b0, b1] = grid_mle(x, y);
      CHECK(std::abs(m.coefficients(0) - b0) < 1e-3);
      CHECK(std::abs(m.coefficients(1) - b1) < 1e-3);
    }
  }

  TEST_CASE("intercept-only model recovers the label mean") {
    Eigen::MatrixXd x(8, 0);
    Eigen::VectorXd y(8);
    y << 1, 0, 0, 0, 1, 0, 0, 0;
    const auto m = fit_logit(x, y);
    CHECK(std::abs(m.coefficients(0) - std::log(0.25 / 0.75)) < 1e-8);
    const auto p = predict_proba(m, x);
    for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(std::abs(p(i) - 0.25) < 1e-8);
    CHECK(std::abs(predict_proba(m, std::span<const double>{}) - 0.25) < 1e-8);
    const auto [b0, b1] = grid_mle(x, y);
    CHECK(std::abs(m.coefficients(0) - b0) < 1e-3);
  }

  TEST_CASE("symmetric covariate gets a zero slope") {
    Eigen::MatrixXd x(8, 1);
    x << 1, 2, 3, 4, 1, 2, 3, 4;
    Eigen::VectorXd y(8);
    y << 0, 0, 0, 0, 1, 1, 1, 1;
    const auto m = fit_logit(x, y);
    CHECK(std::abs(m.coefficients(1)) < 1e-8);
  }

  TEST_CASE("predict_proba") {
    LogitModel m;
    m.coefficients = Eigen::Vector2d(0.0, 0.0);
    m.covariate_names = {"x"};
    const double row[] = {123.0};
    CHECK(predict_proba(m, row) == 0.5);
    m.coefficients = Eigen::Vector2d(0.5, 0.25);
    const double two[] = {2.0};
    CHECK(std::abs(predict_proba(m, two) - 0.7310586) < 1e-6);
    const double bad[] = {1.0, 2.0};
    CHECK_THROWS_AS(predict_proba(m, bad), ValidationError);
    const double far[] = {1e6};
    const double p = predict_proba(m, far);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }

  TEST_CASE("separation is an error") {
    Eigen::MatrixXd x(6, 1);
    x << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd y(6);
    y << 0, 0, 0, 1, 1, 1;
    CHECK_THROWS_AS(fit_logit(x, y), SeparationError);
  }

  TEST_CASE("collinear columns are named") {
    Eigen::MatrixXd x(6, 2);
    x << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10, 6, 12;
    Eigen::VectorXd y(6);
    y << 0, 1, 0, 1, 1, 0;
    try {
      fit_logit(x, y, {}, {"a", "b"});
      FAIL("expected collinearity");
    } catch (const CollinearityError& e) {
      REQUIRE(e.columns().size() == 1);
      CHECK((e.columns()[0] == "a" || e.columns()[0] == "b"));
    }
  }

  TEST_CASE("single-class labels are rejected") {
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    CHECK_THROWS_AS(fit_logit(x, Eigen::VectorXd::Ones(3)), EstimationError);
  }

  TEST_CASE("property: likelihood trace, score identity, affine invariance") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 60 + static_cast<int>(uniform_index(rng, 200));
      const int k = 1 + static_cast<int>(uniform_index(rng, 3));
      Eigen::MatrixXd x(n, k);
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) {
        double eta = -0.3;
        for (int j = 0; j < k; ++j) {
          x(i, j) = standard_normal(rng) * (1.0 + j);
          eta += 0.4 * x(i, j) / (1.0 + j);
        }
        y(i) = uniform01(rng) < logistic(eta) ? 1.0 : 0.0;
      }
      const auto m = fit_logit(x, y);
      for (std::size_t t = 1; t < m.log_likelihood_trace.size(); ++t) {
        CHECK(m.log_likelihood_trace[t] >= m.log_likelihood_trace[t - 1] - 1e-12);
      }
      const auto p = predict_proba(m, x);
      CHECK(std::abs(p.mean() - y.mean()) < 1e-8);

      const int col = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
      const double a = 0.01 + 100.0 * uniform01(rng);
      const double b = 50.0 * (uniform01(rng) - 0.5);
      Eigen::MatrixXd x2 = x;
      x2.col(col) = (x.col(col).array() * a + b).matrix();
      const auto m2 = fit_logit(x2, y);
      const auto p2 = predict_proba(m2, x2);
      CHECK((p - p2).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(std::abs(m2.coefficients(col + 1) * a - m.coefficients(col + 1)) < 1e-6);
    }
  }
}
