#include "qrf/metrics.hpp"

#include <cmath>

#include "qrf/errors.hpp"
#include "qrf/kernels.hpp"

namespace qrf {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw DomainError("metric inputs have different lengths (" +
                      std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

double r2(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y.size(), yhat.size());
  if (y.size() < 2) throw DomainError("r2 needs at least 2 observations");
  const double mean = kern::sum(y) / static_cast<double>(y.size());
  double ss_tot = 0.0;
  for (double v : y) {
    const double d = v - mean;
    ss_tot += d * d;
  }
  if (ss_tot == 0.0) {
    throw UndefinedMetricError("r2 undefined: response has zero variance");
  }
  const double ss_res = kern::sq_diff_sum(y, yhat);
  return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y.size(), yhat.size());
  if (y.empty()) throw DomainError("rmse needs at least 1 observation");
  return std::sqrt(kern::sq_diff_sum(y, yhat) / static_cast<double>(y.size()));
}

double mape(std::span<const double> y, std::span<const double> yhat) {
  check_lengths(y.size(), yhat.size());
  if (y.empty()) throw DomainError("mape needs at least 1 observation");
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) throw DomainError("mape undefined: observed value is 0");
    acc += std::fabs((y[i] - yhat[i]) / y[i]);
  }
  return acc / static_cast<double>(y.size());
}

MetricReport point_metrics(std::span<const double> y,
                           std::span<const double> yhat) {
  return MetricReport{r2(y, yhat), rmse(y, yhat), mape(y, yhat), y.size()};
}

double picp(std::span<const double> y, std::span<const double> lower,
            std::span<const double> upper) {
  check_lengths(y.size(), lower.size());
  check_lengths(y.size(), upper.size());
  if (y.empty()) throw DomainError("picp needs at least 1 observation");
  return static_cast<double>(kern::count_within(y, lower, upper)) /
         static_cast<double>(y.size());
}

double picp(std::span<const double> y,
            std::span<const PredictionInterval> intervals) {
  check_lengths(y.size(), intervals.size());
  std::vector<double> lo(y.size()), hi(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    lo[i] = intervals[i].lower;
    hi[i] = intervals[i].upper;
  }
  return picp(y, lo, hi);
}

std::vector<double> default_nominal_grid() {
  std::vector<double> grid(99);
  for (int k = 1; k <= 99; ++k) {
    grid[static_cast<std::size_t>(k - 1)] = static_cast<double>(k) / 100.0;
  }
  return grid;
}

namespace {

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw DomainError("nominal grid is empty");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0 && grid[k] < 1.0)) {
      throw DomainError("nominal coverages must lie in (0, 1)");
    }
    if (k > 0 && !(grid[k] > grid[k - 1])) {
      throw DomainError("nominal grid must be strictly increasing");
    }
  }
}

}  // namespace

CalibrationCurve calibration_curve(
    const std::function<PredictionInterval(std::size_t, double)>& interval_at,
    std::span<const double> y, std::span<const double> nominal_grid) {
  check_grid(nominal_grid);
  if (y.empty()) throw DomainError("calibration needs at least 1 observation");
  CalibrationCurve curve;
  curve.nominal.assign(nominal_grid.begin(), nominal_grid.end());
  curve.actual.resize(nominal_grid.size());
  std::vector<double> lo(y.size()), hi(y.size());
  for (std::size_t k = 0; k < nominal_grid.size(); ++k) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const PredictionInterval p = interval_at(i, nominal_grid[k]);
      lo[i] = p.lower;
      hi[i] = p.upper;
    }
    curve.actual[k] = picp(y, lo, hi);
  }
  return curve;
}

CalibrationCurve forest_calibration_curve(
    const Forest& forest, const Dataset& ds,
    std::span<const double> nominal_grid) {
  check_grid(nominal_grid);
  if (ds.n() == 0) throw DomainError("calibration needs at least 1 row");

  // One weight computation and one quantile sweep per row covers every level.
  std::vector<double> alphas;
  alphas.reserve(2 * nominal_grid.size());
  for (double c : nominal_grid) alphas.push_back((1.0 - c) / 2.0);
  for (double c : nominal_grid) alphas.push_back((1.0 + c) / 2.0);

  CalibrationCurve curve;
  curve.nominal.assign(nominal_grid.begin(), nominal_grid.end());
  curve.actual.assign(nominal_grid.size(), 0.0);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const std::vector<double> w = forest_weights(forest, ds.x.row(i));
    const std::vector<double> q = quantiles_from_weights(forest, w, alphas);
    for (std::size_t k = 0; k < nominal_grid.size(); ++k) {
      const double lo = q[k];
      const double hi = q[nominal_grid.size() + k];
      if (lo <= ds.y[i] && ds.y[i] <= hi) curve.actual[k] += 1.0;
    }
  }
  for (double& a : curve.actual) a /= static_cast<double>(ds.n());
  return curve;
}

double abes(const CalibrationCurve& curve, bool signed_area) {
  const std::size_t m = curve.nominal.size();
  if (m == 0 || curve.actual.size() != m) {
    throw DomainError("calibration curve is empty or ragged");
  }
  check_grid(curve.nominal);
  if (m == 1) throw DomainError("abes needs at least 2 nominal levels");

  // Trapezoid of (actual - nominal) over the curve's nominal span, normalized
  // by the area under the reference line over the same span. No synthetic
  // anchor points: the normalizer shrinks with the span, so the all-zero
  // curve scores exactly 100%.
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double d0 = curve.actual[k] - curve.nominal[k];
    const double d1 = curve.actual[k + 1] - curve.nominal[k + 1];
    const double i0 = signed_area ? d0 : std::fabs(d0);
    const double i1 = signed_area ? d1 : std::fabs(d1);
    area += 0.5 * (i0 + i1) * (curve.nominal[k + 1] - curve.nominal[k]);
  }
  const double lo = curve.nominal.front();
  const double hi = curve.nominal.back();
  const double reference = 0.5 * (hi * hi - lo * lo);
  return 100.0 * area / reference;
}

}  // namespace qrf
