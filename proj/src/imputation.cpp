#include "modeshift/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "modeshift/error.hpp"
#include "modeshift/logit.hpp"
#include "modeshift/parallel.hpp"
#include "modeshift/rng.hpp"
#include "modeshift/stats.hpp"

namespace modeshift {

void validate(const ImputationConfig& c) {
  if (c.imputations < 1) throw ValidationError("imputations must be at least 1");
  if (c.donors < 1) throw ValidationError("donors must be at least 1");
  if (c.sweeps < 1) throw ValidationError("sweeps must be at least 1");
}

namespace {

struct Target {
  Field field;
  std::vector<std::size_t> observed;
  std::vector<std::size_t> missing;
  std::vector<Field> predictors;
};

std::vector<Field> predictors_for(Field target) {
  std::vector<Field> p;
  for (Field f : default_covariates()) {
    if (f != target) p.push_back(f);
  }
  p.push_back(Field::kInformed);
  p.push_back(Field::kUsedPt);
  return p;
}

Eigen::MatrixXd design(const std::vector<GuestRecord>& records,
                       const std::vector<std::size_t>& rows, const std::vector<Field>& fields) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(fields.size()) + 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      x(r, static_cast<Eigen::Index>(j) + 1) = *field_value(records[rows[i]], fields[j]);
    }
  }
  return x;
}

Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index k = 0; k < n; ++k) z(k) = standard_normal(rng);
  return z;
}

// Bayesian linear regression draw followed by predictive mean matching
// (observed cells matched on their fitted mean under the point estimate).
void impute_continuous(std::vector<GuestRecord>& records, const Target& t, int donors,
                       Rng& rng) {
  const Eigen::MatrixXd xo = design(records, t.observed, t.predictors);
  Eigen::VectorXd yo(static_cast<Eigen::Index>(t.observed.size()));
  for (std::size_t i = 0; i < t.observed.size(); ++i) {
    yo(static_cast<Eigen::Index>(i)) = *field_value(records[t.observed[i]], t.field);
  }
  Eigen::MatrixXd xtx = xo.transpose() * xo;
  // Small ridge keeps constant or duplicated predictors from breaking the solve.
  for (Eigen::Index k = 0; k < xtx.rows(); ++k) xtx(k, k) += 1e-5 * std::max(xtx(k, k), 1.0);
  const Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  const Eigen::VectorXd beta_hat = llt.solve(xo.transpose() * yo);
  const Eigen::VectorXd residual = yo - xo * beta_hat;
  const double df = std::max(1.0, static_cast<double>(xo.rows() - xo.cols()));
  const double sigma_star =
      std::sqrt(residual.squaredNorm() / (2.0 * standard_gamma(rng, df / 2.0)));
  // beta* = beta_hat + sigma* L^{-T} z, so cov(beta*) = sigma*^2 (X'X)^{-1}.
  const Eigen::MatrixXd l = llt.matrixL();
  const Eigen::VectorXd z = normal_vector(rng, xo.cols());
  const Eigen::VectorXd beta_star =
      beta_hat + sigma_star * l.transpose().triangularView<Eigen::Upper>().solve(z);

  const Eigen::VectorXd fitted = xo * beta_hat;
  std::vector<std::size_t> order(t.observed.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fitted(static_cast<Eigen::Index>(a)) < fitted(static_cast<Eigen::Index>(b));
  });
  std::vector<double> sorted_fit(order.size()), sorted_y(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    sorted_fit[k] = fitted(static_cast<Eigen::Index>(order[k]));
    sorted_y[k] = yo(static_cast<Eigen::Index>(order[k]));
  }
  const std::size_t pool = std::min(static_cast<std::size_t>(donors), order.size());

  const Eigen::MatrixXd xm = design(records, t.missing, t.predictors);
  const Eigen::VectorXd target = xm * beta_star;
  for (std::size_t i = 0; i < t.missing.size(); ++i) {
    const double eta = target(static_cast<Eigen::Index>(i));
    // Grow a window of the `pool` closest fitted values around eta.
    std::size_t hi = static_cast<std::size_t>(
        std::lower_bound(sorted_fit.begin(), sorted_fit.end(), eta) - sorted_fit.begin());
    std::size_t lo = hi;
    while (hi - lo < pool) {
      if (lo == 0) {
        ++hi;
      } else if (hi == sorted_fit.size()) {
        --lo;
      } else if (eta - sorted_fit[lo - 1] <= sorted_fit[hi] - eta) {
        --lo;
      } else {
        ++hi;
      }
    }
    const std::size_t donor = lo + uniform_index(rng, hi - lo);
    set_field(records[t.missing[i]], t.field, sorted_y[donor]);
  }
}

void impute_binary(std::vector<GuestRecord>& records, const Target& t, Rng& rng) {
  const Eigen::MatrixXd xo_full = design(records, t.observed, t.predictors);
  Eigen::VectorXd yo(static_cast<Eigen::Index>(t.observed.size()));
  for (std::size_t i = 0; i < t.observed.size(); ++i) {
    yo(static_cast<Eigen::Index>(i)) = *field_value(records[t.observed[i]], t.field);
  }
  const Eigen::MatrixXd xm_full = design(records, t.missing, t.predictors);
  const Eigen::Index p = xo_full.cols() - 1;

  std::optional<Eigen::VectorXd> beta_star;
  try {
    const LogitModel model = fit_logit(xo_full.rightCols(p), yo);
    Eigen::VectorXd beta = model.coefficients;
    const Eigen::LLT<Eigen::MatrixXd> llt(model.covariance);
    const Eigen::VectorXd z = normal_vector(rng, beta.size());
    if (llt.info() == Eigen::Success) beta += llt.matrixL() * z;
    beta_star = beta;
  } catch (const EstimationError&) {
    // Separation or collinear predictors; fall back to the observed share.
  }
  const double share = yo.mean();
  for (std::size_t i = 0; i < t.missing.size(); ++i) {
    const double prob = beta_star
                            ? logistic(xm_full.row(static_cast<Eigen::Index>(i)).dot(*beta_star))
                            : share;
    set_field(records[t.missing[i]], t.field, uniform01(rng) < prob ? 1.0 : 0.0);
  }
}

Dataset run_chain(const Dataset& data, const std::vector<Target>& targets,
                  const ImputationConfig& config, std::size_t chain) {
  Rng rng = make_rng(config.seed, Stream::kImputation, chain);
  std::vector<GuestRecord> records = data.records();
  for (const auto& t : targets) {
    for (std::size_t i : t.missing) {
      const std::size_t donor = t.observed[uniform_index(rng, t.observed.size())];
      set_field(records[i], t.field, field_value(records[donor], t.field));
    }
  }
  for (int sweep = 0; sweep < config.sweeps; ++sweep) {
    for (const auto& t : targets) {
      if (is_binary(t.field)) {
        impute_binary(records, t, rng);
      } else {
        impute_continuous(records, t, config.donors, rng);
      }
    }
  }
  return data.with_records(std::move(records));
}

}  // namespace

std::vector<Dataset> impute_chained(const Dataset& data, const ImputationConfig& config) {
  validate(config);
  std::vector<Target> targets;
  for (Field f : nullable_fields()) {
    Target t{f, {}, {}, predictors_for(f)};
    for (std::size_t i = 0; i < data.size(); ++i) {
      (field_value(data[i], f) ? t.observed : t.missing).push_back(i);
    }
    if (t.missing.empty()) continue;
    const std::string name(field_name(f));
    if (t.observed.empty()) throw ValidationError("all values of " + name + " are missing");
    if (2 * t.observed.size() < data.size()) {
      throw ValidationError("fewer than half the values of " + name + " are observed");
    }
    targets.push_back(std::move(t));
  }
  const auto m = static_cast<std::size_t>(config.imputations);
  if (targets.empty()) return std::vector<Dataset>(m, data);

  std::vector<Dataset> out(m);
  parallel_for(m, config.workers,
               [&](std::size_t chain) { out[chain] = run_chain(data, targets, config, chain); });
  return out;
}

EffectEstimate pool_rubin(std::span<const EffectEstimate> estimates) {
  if (estimates.size() < 2) throw ValidationError("pooling needs at least two estimates");
  const EffectEstimate& first = estimates.front();
  std::vector<double> q, u;
  for (const auto& e : estimates) {
    if (e.method != first.method || e.estimand != first.estimand) {
      throw ValidationError("cannot pool estimates from different estimators (" + first.method +
                            "/" + std::string(estimand_name(first.estimand)) + " vs " +
                            e.method + "/" + std::string(estimand_name(e.estimand)) + ")");
    }
    if (!e.standard_error) throw ValidationError("pooling needs a standard error per estimate");
    q.push_back(e.estimate);
    u.push_back(*e.standard_error * *e.standard_error);
  }
  const double m = static_cast<double>(estimates.size());
  const double within = stats::mean(u);
  const double sd = stats::sample_sd(q);
  const double between = sd * sd;
  EffectEstimate pooled;
  pooled.method = first.method;
  pooled.estimand = first.estimand;
  pooled.seed = first.seed;
  pooled.n_used = first.n_used;
  pooled.estimate = stats::mean(q);
  pooled.set_standard_error(std::sqrt(within + (1.0 + 1.0 / m) * between));
  return pooled;
}

}  // namespace modeshift
