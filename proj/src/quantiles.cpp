#include "qrf/quantiles.hpp"

#include <algorithm>
#include <numeric>

#include "qrf/csv.hpp"
#include "qrf/errors.hpp"
#include "qrf/kernels.hpp"

namespace qrf {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("quantile level must lie in (0, 1)");
  }
}

}  // namespace

// Both the CDF and the quantile sweep accumulate weights in the same order
// (y ascending, index ascending on ties), so F(Q(alpha)) >= alpha holds
// exactly, not just up to summation noise.
double cdf_from_weights(const Forest& forest, std::span<const double> weights,
                        double y) {
  double acc = 0.0;
  for (std::uint32_t idx : forest.y_sorted_order) {
    if (forest.y_train[idx] > y) break;
    acc += weights[idx];
  }
  return std::min(acc, 1.0);
}

std::vector<double> quantiles_from_weights(const Forest& forest,
                                           std::span<const double> weights,
                                           std::span<const double> alphas) {
  for (double a : alphas) check_alpha(a);

  // Sweep in ascending alpha order, restoring caller order at the end.
  std::vector<std::size_t> order(alphas.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return alphas[a] < alphas[b];
  });

  std::vector<double> out(alphas.size(), 0.0);
  const auto& sorted = forest.y_sorted_order;
  const std::size_t n = sorted.size();

  double acc = 0.0;
  double last_support = 0.0;
  bool any_support = false;
  std::size_t next = 0;

  std::size_t i = 0;
  while (i < n && next < order.size()) {
    // Group equal response values so the CDF jumps once per support point.
    const double value = forest.y_train[sorted[i]];
    double group_w = 0.0;
    while (i < n && forest.y_train[sorted[i]] == value) {
      group_w += weights[sorted[i]];
      ++i;
    }
    if (group_w <= 0.0) continue;
    acc += group_w;
    last_support = value;
    any_support = true;
    while (next < order.size() && acc >= alphas[order[next]]) {
      out[order[next]] = value;
      ++next;
    }
  }
  // Cumulative weight can fall a few ulps short of 1; the top of the support
  // answers any remaining levels.
  if (next < order.size() && !any_support) {
    throw DomainError("weight vector has no positive entries");
  }
  for (; next < order.size(); ++next) out[order[next]] = last_support;
  return out;
}

double conditional_cdf(const Forest& forest, std::span<const double> x,
                       double y) {
  return cdf_from_weights(forest, forest_weights(forest, x), y);
}

double predict_quantile(const Forest& forest, std::span<const double> x,
                        double alpha) {
  const double a[1] = {alpha};
  return predict_quantiles(forest, x, a)[0];
}

std::vector<double> predict_quantiles(const Forest& forest,
                                      std::span<const double> x,
                                      std::span<const double> alphas) {
  return quantiles_from_weights(forest, forest_weights(forest, x), alphas);
}

PredictionInterval prediction_interval(const Forest& forest,
                                       std::span<const double> x,
                                       double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) {
    throw DomainError("coverage must lie in (0, 1)");
  }
  const double a[2] = {(1.0 - coverage) / 2.0, (1.0 + coverage) / 2.0};
  const std::vector<double> q = predict_quantiles(forest, x, a);
  return PredictionInterval{q[0], q[1], coverage};
}

std::vector<CellPrediction> predict_cells(const Forest& forest,
                                          const Dataset& ds, double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) {
    throw DomainError("coverage must lie in (0, 1)");
  }
  const double alphas[3] = {(1.0 - coverage) / 2.0, 0.5,
                            (1.0 + coverage) / 2.0};
  std::vector<CellPrediction> preds;
  preds.reserve(ds.n());
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    try {
      const std::vector<double> w = forest_weights(forest, ds.x.row(i));
      const std::vector<double> q =
          quantiles_from_weights(forest, w, alphas);
      CellPrediction p;
      p.cell_id = ds.cell_ids[i];
      p.mean = kern::dot(w, forest.y_train);
      p.median = q[1];
      p.interval = PredictionInterval{q[0], q[2], coverage};
      p.interval_length = q[2] - q[0];
      preds.push_back(std::move(p));
    } catch (const Error& e) {
      failures.emplace_back(ds.cell_ids[i] + ": " + e.what());
    }
  }
  if (!failures.empty()) {
    std::string msg =
        "prediction failed for " + std::to_string(failures.size()) + " row(s):";
    for (const std::string& s : failures) msg += "\n  " + s;
    throw DomainError(msg);
  }
  return preds;
}

void save_predictions_csv(std::span<const CellPrediction> preds,
                          const std::filesystem::path& path,
                          const std::string& model) {
  AtomicFile out(path);
  std::string header =
      "cell_id,mean,median,lower,upper,interval_length,nominal_coverage";
  if (!model.empty()) header += ",model";
  out.write(header + "\n");
  for (const CellPrediction& p : preds) {
    std::vector<std::string> row = {p.cell_id,
                                    format_double(p.mean),
                                    format_double(p.median),
                                    format_double(p.interval.lower),
                                    format_double(p.interval.upper),
                                    format_double(p.interval_length),
                                    format_double(p.interval.nominal_coverage)};
    if (!model.empty()) row.push_back(model);
    out.write_row(row);
  }
  out.commit();
}

}  // namespace qrf
