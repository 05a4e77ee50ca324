#include "modeshift/psm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <numeric>

#include "modeshift/error.hpp"
#include "modeshift/parallel.hpp"
#include "modeshift/rng.hpp"
#include "modeshift/stats.hpp"

namespace modeshift {

namespace {

void check_scores(std::span<const double> scores) {
  for (double s : scores) {
    if (!(s > 0.0 && s < 1.0)) {
      throw ValidationError("propensity score outside (0, 1): " + std::to_string(s));
    }
  }
}

// Per-unit contributions Y(1) - Y(0) with the unobserved side imputed from
// the matches.
std::vector<double> matched_differences(std::span<const bool> treated,
                                        std::span<const double> outcome,
                                        const MatchSet& matches) {
  std::vector<double> diff(treated.size());
  for (std::size_t i = 0; i < treated.size(); ++i) {
    const auto& m = matches.matches[i];
    double imputed = 0.0;
    for (std::size_t j : m) imputed += outcome[j];
    imputed /= static_cast<double>(m.size());
    diff[i] = treated[i] ? outcome[i] - imputed : imputed - outcome[i];
  }
  return diff;
}

double ordered_mean(const std::vector<double>& values, std::span<const std::size_t> order) {
  double sum = 0.0;
  for (std::size_t i : order) sum += values[i];
  return sum / static_cast<double>(values.size());
}

}  // namespace

MatchSet match_nearest(std::span<const bool> treated, std::span<const double> scores) {
  if (treated.size() != scores.size()) throw ValidationError("score count mismatch");
  std::vector<std::size_t> group[2];
  for (std::size_t i = 0; i < treated.size(); ++i) group[treated[i] ? 1 : 0].push_back(i);
  if (group[0].empty()) throw EstimationError("control group is empty");
  if (group[1].empty()) throw EstimationError("treated group is empty");
  for (auto& g : group) {
    std::sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
      return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
    });
  }

  MatchSet out;
  out.matches.resize(treated.size());
  for (std::size_t i = 0; i < treated.size(); ++i) {
    const auto& pool = group[treated[i] ? 0 : 1];
    const double s = scores[i];
    auto it = std::lower_bound(pool.begin(), pool.end(), s,
                               [&](std::size_t j, double v) { return scores[j] < v; });
    double best = INFINITY;
    double left_value = NAN, right_value = NAN;
    if (it != pool.end()) {
      right_value = scores[*it];
      best = right_value - s;
    }
    if (it != pool.begin()) {
      left_value = scores[*std::prev(it)];
      best = std::min(best, s - left_value);
    }
    auto& m = out.matches[i];
    auto take_equal = [&](double value) {
      auto lo = std::lower_bound(pool.begin(), pool.end(), value,
                                 [&](std::size_t j, double v) { return scores[j] < v; });
      auto hi = std::upper_bound(lo, pool.end(), value,
                                 [&](double v, std::size_t j) { return v < scores[j]; });
      m.insert(m.end(), lo, hi);
    };
    if (!std::isnan(left_value) && s - left_value == best) take_equal(left_value);
    if (!std::isnan(right_value) && right_value - s == best && right_value != left_value) {
      take_equal(right_value);
    }
    std::sort(m.begin(), m.end());
  }
  return out;
}

EffectEstimate estimate_ate_psm(const Dataset& data, std::span<const double> scores) {
  if (scores.size() != data.size()) throw ValidationError("one score per record required");
  check_scores(scores);
  std::vector<bool> treated_bits(data.size());
  std::vector<double> outcome(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    treated_bits[i] = data[i].informed;
    outcome[i] = data[i].used_pt;
  }
  // std::vector<bool> has no contiguous storage; copy into a bool array.
  std::unique_ptr<bool[]> treated(new bool[data.size()]);
  for (std::size_t i = 0; i < data.size(); ++i) treated[i] = treated_bits[i];
  const std::span<const bool> treated_span(treated.get(), data.size());

  const MatchSet matches = match_nearest(treated_span, scores);
  const auto diff = matched_differences(treated_span, outcome, matches);

  // Sum in id order so record order cannot change the result.
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data[a].id < data[b].id; });

  EffectEstimate est;
  est.estimate = ordered_mean(diff, order);
  est.estimand = Estimand::kAte;
  est.method = "psm";
  est.n_used = data.size();
  return est;
}

PropensityFit fit_propensity(const Dataset& data, std::span<const Field> covariates,
                             const LogitOptions& options) {
  PropensityFit fit;
  const Eigen::MatrixXd x = covariate_matrix(data, covariates);
  fit.model = fit_logit(x, treatment_vector(data), options, field_names(covariates));
  const Eigen::VectorXd p = predict_proba(fit.model, x);
  fit.scores.assign(p.data(), p.data() + p.size());
  return fit;
}

BootstrapResult bootstrap_psm(const Dataset& data, const PsmOptions& psm,
                              const BootstrapOptions& options) {
  if (options.replications < 2) throw ValidationError("bootstrap needs at least 2 replications");
  BootstrapResult result;
  {
    const PropensityFit fit = fit_propensity(data, psm.covariates, psm.logit);
    result.estimate = estimate_ate_psm(data, fit.scores);
  }
  result.estimate.seed = options.seed;

  const std::size_t n = data.size();
  const Eigen::MatrixXd x = covariate_matrix(data, psm.covariates);
  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < n; ++i) strata[data[i].informed ? 1 : 0].push_back(i);
  const auto names = field_names(psm.covariates);

  const std::size_t reps = static_cast<std::size_t>(options.replications);
  const std::size_t redraw_cap = 10 * reps;
  std::vector<double> estimates(reps);
  std::atomic<std::size_t> redraws{0};

  parallel_for(reps, options.workers, [&](std::size_t r) {
    Rng rng = make_rng(options.seed, Stream::kBootstrap, r);
    std::vector<std::size_t> sample(n);
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(n), x.cols());
    Eigen::VectorXd ds(static_cast<Eigen::Index>(n));
    std::unique_ptr<bool[]> treated(new bool[n]);
    std::vector<double> outcome(n);
    for (;;) {
      std::size_t pos = 0;
      for (const auto& stratum : strata) {
        for (std::size_t k = 0; k < stratum.size(); ++k) {
          sample[pos++] = stratum[uniform_index(rng, stratum.size())];
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto src = static_cast<Eigen::Index>(sample[i]);
        xs.row(static_cast<Eigen::Index>(i)) = x.row(src);
        treated[i] = data[sample[i]].informed;
        ds(static_cast<Eigen::Index>(i)) = treated[i] ? 1.0 : 0.0;
        outcome[i] = data[sample[i]].used_pt;
      }
      try {
        const LogitModel model = fit_logit(xs, ds, psm.logit, names);
        const Eigen::VectorXd p = predict_proba(model, xs);
        const std::span<const double> scores(p.data(), n);
        const std::span<const bool> tspan(treated.get(), n);
        const auto diff = matched_differences(tspan, outcome, match_nearest(tspan, scores));
        double sum = 0.0;
        for (double v : diff) sum += v;
        estimates[r] = sum / static_cast<double>(n);
        return;
      } catch (const EstimationError&) {
        if (redraws.fetch_add(1) + 1 > redraw_cap) {
          throw EstimationError("bootstrap exceeded " + std::to_string(redraw_cap) +
                                " redraws of failed resamples");
        }
      }
    }
  });

  result.redraws = redraws.load();
  result.replicates = std::move(estimates);
  result.estimate.set_standard_error(stats::sample_sd(result.replicates));
  return result;
}

EffectEstimate bootstrap_inference(const Dataset& data, const PsmOptions& psm,
                                   const BootstrapOptions& options) {
  return bootstrap_psm(data, psm, options).estimate;
}

std::vector<std::size_t> common_support_indices(const Dataset& data,
                                                std::span<const double> scores) {
  if (scores.size() != data.size()) throw ValidationError("one score per record required");
  double max_control = -INFINITY;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].informed) max_control = std::max(max_control, scores[i]);
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].informed || scores[i] <= max_control) keep.push_back(i);
  }
  return keep;
}

Dataset trim_common_support(const Dataset& data, std::span<const double> scores) {
  return data.retain(common_support_indices(data, scores), std::string(kRuleCommonSupport));
}

}  // namespace modeshift
