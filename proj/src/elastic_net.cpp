#include "qrf/elastic_net.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "qrf/errors.hpp"
#include "qrf/kernels.hpp"
#include "qrf/rng.hpp"

namespace qrf {

double ElasticNetModel::predict(std::span<const double> x) const {
  double acc = intercept;
  for (std::size_t j = 0; j < coefficients.size(); ++j) {
    if (coefficients[j] == 0.0) continue;
    acc += coefficients[j] * (x[j] - feature_means[j]) / feature_scales[j];
  }
  return acc;
}

std::vector<double> predict(const ElasticNetModel& model, const Matrix& x) {
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = model.predict(x.row(i));
  return out;
}

namespace {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

}  // namespace

ElasticNetModel fit_elastic_net(const Dataset& ds, double lambda,
                                double l1_ratio, double tol, long max_iter) {
  const std::size_t n = ds.n();
  const std::size_t p = ds.p();
  if (n < 2) throw ConfigError("elastic net fit needs at least 2 rows");
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (!(l1_ratio >= 0.0 && l1_ratio <= 1.0)) {
    throw ConfigError("l1_ratio must lie in [0, 1]");
  }

  ElasticNetModel model;
  model.lambda = lambda;
  model.l1_ratio = l1_ratio;
  model.feature_means.resize(p);
  model.feature_scales.assign(p, 1.0);
  model.coefficients.assign(p, 0.0);

  // Standardize columns (population std); near-constant columns are dropped.
  Matrix z(n, p);
  std::vector<bool> active(p, true);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.x.at(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = ds.x.at(i, j) - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    model.feature_means[j] = mean;
    if (sd < 1e-12) {
      active[j] = false;
      model.dropped_columns.push_back(ds.feature_names.empty()
                                          ? "column " + std::to_string(j)
                                          : ds.feature_names[j]);
      continue;
    }
    model.feature_scales[j] = sd;
    for (std::size_t i = 0; i < n; ++i) {
      z.at(i, j) = (ds.x.at(i, j) - mean) / sd;
    }
  }

  const double y_mean = kern::sum(ds.y) / static_cast<double>(n);
  model.intercept = y_mean;
  std::vector<double> residual(n);  // y - intercept - Z * beta
  for (std::size_t i = 0; i < n; ++i) residual[i] = ds.y[i] - y_mean;

  // Column views for the coordinate loop.
  std::vector<std::vector<double>> cols(p);
  std::vector<double> col_sq_mean(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    if (!active[j]) continue;
    cols[j].resize(n);
    for (std::size_t i = 0; i < n; ++i) cols[j][i] = z.at(i, j);
    col_sq_mean[j] = kern::dot(cols[j], cols[j]) / static_cast<double>(n);
  }

  const double l1_pen = lambda * l1_ratio;
  const double l2_pen = lambda * (1.0 - l1_ratio);

  const auto objective = [&] {
    double fit = kern::dot(residual, residual) / (2.0 * static_cast<double>(n));
    double pen = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      pen += l1_pen * std::fabs(model.coefficients[j]) +
             0.5 * l2_pen * model.coefficients[j] * model.coefficients[j];
    }
    return fit + pen;
  };

  double previous = objective();
  model.objective_history.push_back(previous);

  for (long iter = 0; iter < max_iter; ++iter) {
    double max_delta = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (!active[j]) continue;
      const double old = model.coefficients[j];
      // Partial residual correlation with this coordinate removed.
      const double rho =
          kern::dot(cols[j], residual) / static_cast<double>(n) +
          col_sq_mean[j] * old;
      const double updated =
          soft_threshold(rho, l1_pen) / (col_sq_mean[j] + l2_pen);
      if (updated != old) {
        kern::axpy(old - updated, cols[j], residual);
        model.coefficients[j] = updated;
        max_delta = std::max(max_delta, std::fabs(updated - old));
      }
    }

    const double current = objective();
    // Exact coordinate minimization cannot increase the objective beyond
    // floating-point noise.
    if (current > previous + 1e-10 * (1.0 + std::fabs(previous))) {
      throw Error("coordinate descent objective increased");
    }
    previous = current;
    model.objective_history.push_back(current);

    if (max_delta < tol) return model;
  }
  throw ConvergenceError(
      "elastic net did not converge in " + std::to_string(max_iter) +
          " cycles (tol " + std::to_string(tol) + ")",
      model.coefficients);
}

EnetSearchResult tune_elastic_net(const Dataset& ds, int n_trials,
                                  std::uint64_t seed) {
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (ds.n() < 3) throw ConfigError("tuning needs at least 3 rows");

  Rng rng(seed);
  EnetSearchResult result;
  result.rmse_cv = 0.0;
  bool have_best = false;

  std::vector<std::size_t> keep(ds.n() - 1);
  for (int trial = 0; trial < n_trials; ++trial) {
    const double lambda = std::pow(10.0, rng.uniform(-3.0, 3.0));
    const double l1_ratio = rng.uniform();
    const auto start = std::chrono::steady_clock::now();

    double sq_err = 0.0;
    bool ok = true;
    for (std::size_t held = 0; held < ds.n(); ++held) {
      std::size_t w = 0;
      for (std::size_t i = 0; i < ds.n(); ++i) {
        if (i != held) keep[w++] = i;
      }
      try {
        const ElasticNetModel m =
            fit_elastic_net(ds.subset(std::span(keep)), lambda, l1_ratio);
        const double err = ds.y[held] - m.predict(ds.x.row(held));
        sq_err += err * err;
      } catch (const Error&) {
        ok = false;
        break;
      }
    }
    const double cv_rmse =
        ok ? std::sqrt(sq_err / static_cast<double>(ds.n()))
           : std::numeric_limits<double>::infinity();
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    result.trials.push_back(
        EnetTrial{trial, lambda, l1_ratio, cv_rmse, elapsed});
    if (!have_best || cv_rmse < result.rmse_cv) {
      have_best = true;
      result.lambda = lambda;
      result.l1_ratio = l1_ratio;
      result.rmse_cv = cv_rmse;
    }
  }
  return result;
}

}  // namespace qrf
