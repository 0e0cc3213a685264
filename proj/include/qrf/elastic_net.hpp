#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrf/types.hpp"

namespace qrf {

// Coefficients live in standardized feature space; predictions map back to
// raw units through the stored means and scales.
struct ElasticNetModel {
  std::vector<double> coefficients;
  double intercept = 0.0;  // mean of y
  double lambda = 0.0;
  double l1_ratio = 1.0;
  std::vector<double> feature_means;
  std::vector<double> feature_scales;       // population std; 1 for dropped cols
  std::vector<std::string> dropped_columns;  // zero-variance columns, coef 0
  std::vector<double> objective_history;     // objective after each full cycle

  double predict(std::span<const double> x) const;
};

// Objective: (1/2N) * ||y - Xb||^2 + lambda * (l1*|b|_1 + (1-l1)/2*|b|_2^2)
// on standardized columns, minimized by cyclic coordinate descent with
// soft-thresholding. Stops when the largest coordinate change in a full cycle
// drops below tol; throws ConvergenceError (carrying the last iterate) after
// max_iter cycles.
ElasticNetModel fit_elastic_net(const Dataset& ds, double lambda,
                                double l1_ratio, double tol = 1e-7,
                                long max_iter = 100000);

std::vector<double> predict(const ElasticNetModel& model, const Matrix& x);

struct EnetTrial {
  int trial_index = 0;
  double lambda = 0.0;
  double l1_ratio = 0.0;
  double rmse_cv = 0.0;
  double wall_time_s = 0.0;
};

struct EnetSearchResult {
  double lambda = 0.0;
  double l1_ratio = 0.0;
  double rmse_cv = 0.0;
  std::vector<EnetTrial> trials;
};

// Seeded random search (lambda log-uniform over [1e-3, 1e3], l1_ratio uniform
// over [0, 1]) scored by leave-one-out RMSE.
EnetSearchResult tune_elastic_net(const Dataset& ds, int n_trials,
                                  std::uint64_t seed);

}  // namespace qrf
