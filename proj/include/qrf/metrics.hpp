#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qrf/quantiles.hpp"
#include "qrf/types.hpp"

namespace qrf {

struct CalibrationCurve {
  std::vector<double> nominal;  // strictly increasing, in (0,1)
  std::vector<double> actual;   // same length, in [0,1]
};

struct MetricReport {
  double r2 = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
  std::size_t n = 0;
};

double r2(std::span<const double> y, std::span<const double> yhat);
double rmse(std::span<const double> y, std::span<const double> yhat);
double mape(std::span<const double> y, std::span<const double> yhat);
MetricReport point_metrics(std::span<const double> y,
                           std::span<const double> yhat);

// Fraction of y_i with lower_i <= y_i <= upper_i (closed bounds).
double picp(std::span<const double> y, std::span<const double> lower,
            std::span<const double> upper);
double picp(std::span<const double> y,
            std::span<const PredictionInterval> intervals);

// 0.01, 0.02, ..., 0.99
std::vector<double> default_nominal_grid();

// interval_at(i, coverage) supplies the interval for observation i at the
// given nominal coverage; actual[k] is the PICP at nominal[k].
CalibrationCurve calibration_curve(
    const std::function<PredictionInterval(std::size_t, double)>& interval_at,
    std::span<const double> y, std::span<const double> nominal_grid);

// Forest fast path: one weight computation and one quantile sweep per row.
CalibrationCurve forest_calibration_curve(const Forest& forest,
                                          const Dataset& ds,
                                          std::span<const double> nominal_grid);

// Area between the calibration curve and the identity line, normalized by the
// area under the identity over the curve's nominal span, in percent.
// With signed_area the integrand keeps its sign (over-coverage negative
// regions cancel under-coverage); default is the absolute area.
double abes(const CalibrationCurve& curve, bool signed_area = false);

}  // namespace qrf
