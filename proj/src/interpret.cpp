#include "qrf/interpret.hpp"

#include <algorithm>
#include <cmath>

#include "qrf/errors.hpp"
#include "qrf/kernels.hpp"
#include "qrf/metrics.hpp"
#include "qrf/quantiles.hpp"
#include "qrf/rng.hpp"

namespace qrf {

namespace {

double score_of(ScoreKind kind, std::span<const double> y,
                std::span<const double> yhat) {
  switch (kind) {
    case ScoreKind::neg_rmse:
      return -rmse(y, yhat);
    default:
      return r2(y, yhat);
  }
}

const char* score_name_of(ScoreKind kind) {
  return kind == ScoreKind::neg_rmse ? "neg_rmse" : "r2";
}

}  // namespace

ImportanceReport permutation_importance(const BatchPredictFn& predict_fn,
                                        const Dataset& ds, ScoreKind score,
                                        int repeats, std::uint64_t seed) {
  if (ds.n() == 0) throw DomainError("importance needs a nonempty dataset");
  if (repeats < 1) throw DomainError("repeats must be >= 1");

  ImportanceReport report;
  report.repeats = repeats;
  report.score_name = score_name_of(score);
  report.reference_score = score_of(score, ds.y, predict_fn(ds.x));

  Matrix corrupted = ds.x;
  std::vector<double> column(ds.n());
  for (std::size_t j = 0; j < ds.p(); ++j) {
    ImportanceEntry entry;
    entry.feature_index = j;
    entry.feature_name =
        j < ds.feature_names.size() ? ds.feature_names[j] : std::to_string(j);

    double drop_sum = 0.0;
    for (int m = 0; m < repeats; ++m) {
      for (std::size_t i = 0; i < ds.n(); ++i) column[i] = ds.x.at(i, j);
      Rng rng(derive_seed(derive_seed(seed, j), static_cast<std::uint64_t>(m)));
      rng.shuffle(column);
      for (std::size_t i = 0; i < ds.n(); ++i) corrupted.at(i, j) = column[i];
      const double s = score_of(score, ds.y, predict_fn(corrupted));
      entry.repeat_scores.push_back(s);
      // Accumulating the per-repeat drops keeps a no-op shuffle at exactly 0.
      drop_sum += report.reference_score - s;
    }
    entry.importance = drop_sum / static_cast<double>(repeats);

    for (std::size_t i = 0; i < ds.n(); ++i) {
      corrupted.at(i, j) = ds.x.at(i, j);
    }
    report.entries.push_back(std::move(entry));
  }

  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const ImportanceEntry& a, const ImportanceEntry& b) {
                     return a.importance > b.importance;
                   });
  return report;
}

namespace {

std::vector<double> quantile_spaced_grid(std::span<const double> column,
                                         int n_points) {
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n_points));
  const std::size_t n = sorted.size();
  for (int k = 0; k < n_points; ++k) {
    const double level =
        n_points == 1 ? 0.5
                      : static_cast<double>(k) / static_cast<double>(n_points - 1);
    const double pos = level * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double t = pos - static_cast<double>(lo);
    grid.push_back(sorted[lo] + t * (sorted[hi] - sorted[lo]));
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

Histogram histogram_of(std::span<const double> column, int bins) {
  Histogram h;
  const double lo = kern::min(column);
  const double hi = kern::max(column);
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int b = 0; b < bins; ++b) {
    h.bin_left.push_back(lo + width * b);
    h.bin_right.push_back(b + 1 == bins ? hi : lo + width * (b + 1));
  }
  for (double v : column) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    h.counts[static_cast<std::size_t>(b)] += 1;
  }
  return h;
}

}  // namespace

PDPResult pdp(const Forest& forest, const Dataset& ds, std::size_t feature,
              std::span<const double> grid_spec,
              std::span<const double> alphas, int hist_bins) {
  if (feature >= ds.p()) throw DomainError("pdp feature index out of range");
  if (ds.n() == 0) throw DomainError("pdp needs a nonempty dataset");

  std::vector<double> column(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) column[i] = ds.x.at(i, feature);

  PDPResult result;
  result.feature_index = feature;
  result.feature_name = feature < ds.feature_names.size()
                            ? ds.feature_names[feature]
                            : std::to_string(feature);
  if (grid_spec.empty()) {
    result.grid = quantile_spaced_grid(column, 50);
  } else {
    result.grid.assign(grid_spec.begin(), grid_spec.end());
    if (result.grid.empty()) throw DomainError("pdp grid is empty");
    if (!std::is_sorted(result.grid.begin(), result.grid.end())) {
      throw DomainError("pdp grid must be ascending");
    }
  }

  const std::vector<double> default_alphas = {0.075, 0.5, 0.925};
  result.quantile_levels = alphas.empty()
                               ? default_alphas
                               : std::vector<double>(alphas.begin(), alphas.end());
  std::sort(result.quantile_levels.begin(), result.quantile_levels.end());

  result.mean_curve.assign(result.grid.size(), 0.0);
  result.quantile_curves.assign(result.quantile_levels.size(),
                                std::vector<double>(result.grid.size(), 0.0));

  Matrix substituted = ds.x;
  const double inv_n = 1.0 / static_cast<double>(ds.n());
  for (std::size_t g = 0; g < result.grid.size(); ++g) {
    for (std::size_t i = 0; i < ds.n(); ++i) {
      substituted.at(i, feature) = result.grid[g];
    }
    for (std::size_t i = 0; i < ds.n(); ++i) {
      const std::vector<double> w =
          forest_weights(forest, substituted.row(i));
      result.mean_curve[g] += kern::dot(w, forest.y_train) * inv_n;
      const std::vector<double> q =
          quantiles_from_weights(forest, w, result.quantile_levels);
      for (std::size_t a = 0; a < q.size(); ++a) {
        result.quantile_curves[a][g] += q[a] * inv_n;
      }
    }
  }

  result.histogram = histogram_of(column, hist_bins);
  return result;
}

}  // namespace qrf
