#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qrf/forest.hpp"
#include "qrf/types.hpp"

namespace qrf {

struct PredictionInterval {
  double lower = 0.0;
  double upper = 0.0;
  double nominal_coverage = 0.0;
};

struct CellPrediction {
  std::string cell_id;
  double mean = 0.0;
  double median = 0.0;
  PredictionInterval interval;
  double interval_length = 0.0;
};

// Empirical conditional CDF at y: sum of forest weights over y_i <= y.
double conditional_cdf(const Forest& forest, std::span<const double> x,
                       double y);

// Smallest observed y_i with positive weight whose cumulative weight reaches
// alpha. No interpolation between support points.
double predict_quantile(const Forest& forest, std::span<const double> x,
                        double alpha);

// Batch version sharing one weight computation and one sweep; alphas may be
// in any order, each must lie in (0, 1).
std::vector<double> predict_quantiles(const Forest& forest,
                                      std::span<const double> x,
                                      std::span<const double> alphas);

// Same sweep on a precomputed weight vector (weights aligned with y_train).
std::vector<double> quantiles_from_weights(const Forest& forest,
                                           std::span<const double> weights,
                                           std::span<const double> alphas);
double cdf_from_weights(const Forest& forest, std::span<const double> weights,
                        double y);

// Equal-tailed interval: [Q_{(1-c)/2}, Q_{(1+c)/2}].
PredictionInterval prediction_interval(const Forest& forest,
                                       std::span<const double> x,
                                       double coverage);

std::vector<CellPrediction> predict_cells(const Forest& forest,
                                          const Dataset& ds, double coverage);

// predictions.csv: cell_id,mean,median,lower,upper,interval_length,
// nominal_coverage  (+ a trailing `model` column when `model` is nonempty)
void save_predictions_csv(std::span<const CellPrediction> preds,
                          const std::filesystem::path& path,
                          const std::string& model = "");

}  // namespace qrf
