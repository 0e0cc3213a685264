#include "qrf/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "qrf/elastic_net.hpp"
#include "qrf/errors.hpp"
#include "qrf/kernels.hpp"
#include "qrf/parallel.hpp"
#include "qrf/quantiles.hpp"
#include "qrf/rng.hpp"

namespace qrf {

LooResult loo_xve_calibration(const Dataset& ds, const Hyperparameters& hp,
                              std::span<const double> nominal_grid,
                              int threads) {
  const std::size_t n = ds.n();
  if (n < 3) throw ConfigError("leave-one-out needs at least 3 rows");
  if (nominal_grid.empty()) throw ConfigError("nominal grid is empty");

  std::vector<double> alphas;
  alphas.reserve(2 * nominal_grid.size() + 1);
  for (double c : nominal_grid) alphas.push_back((1.0 - c) / 2.0);
  for (double c : nominal_grid) alphas.push_back((1.0 + c) / 2.0);
  alphas.push_back(0.5);

  LooResult result;
  result.curve.nominal.assign(nominal_grid.begin(), nominal_grid.end());
  result.curve.actual.assign(nominal_grid.size(), 0.0);
  result.oof_mean.assign(n, 0.0);
  result.oof_median.assign(n, 0.0);

  std::vector<std::vector<char>> covered(
      n, std::vector<char>(nominal_grid.size(), 0));

  parallel_for(n, threads, [&](std::size_t held) {
    std::vector<std::size_t> keep;
    keep.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (i != held) keep.push_back(i);
    }
    Hyperparameters fold_hp = hp;
    fold_hp.seed = derive_seed(hp.seed, held);
    Forest forest;
    try {
      forest = fit_forest(ds.subset(keep), fold_hp, 1);
    } catch (const Error& e) {
      throw ConfigError("leave-one-out fold " + std::to_string(held) + ": " +
                        e.what());
    }
    const std::vector<double> w = forest_weights(forest, ds.x.row(held));
    const std::vector<double> q = quantiles_from_weights(forest, w, alphas);
    result.oof_mean[held] = kern::dot(w, forest.y_train);
    result.oof_median[held] = q.back();
    for (std::size_t k = 0; k < nominal_grid.size(); ++k) {
      const double lo = q[k];
      const double hi = q[nominal_grid.size() + k];
      covered[held][k] = lo <= ds.y[held] && ds.y[held] <= hi;
    }
  });

  for (std::size_t k = 0; k < nominal_grid.size(); ++k) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) count += covered[i][k];
    result.curve.actual[k] =
        static_cast<double>(count) / static_cast<double>(n);
  }
  return result;
}

SearchResult random_search(const Dataset& ds, const SearchSpace& space,
                           int n_trials, std::uint64_t seed,
                           std::span<const double> nominal_grid, int threads) {
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  const int p = static_cast<int>(ds.p());
  const int mtry_hi = space.mtry_max > 0 ? std::min(space.mtry_max, p) : p;

  Rng rng(seed);
  SearchResult result;
  bool have_best = false;

  for (int trial = 0; trial < n_trials; ++trial) {
    Hyperparameters hp;
    hp.n_trees =
        static_cast<int>(rng.uniform_int(space.n_trees_min, space.n_trees_max));
    hp.mtry = static_cast<int>(rng.uniform_int(space.mtry_min, mtry_hi));
    hp.min_leaf =
        static_cast<int>(rng.uniform_int(space.min_leaf_min, space.min_leaf_max));
    // Depth option 0 is "unlimited"; the rest map onto [depth_min, depth_max].
    const long long depth_pick =
        rng.uniform_int(0, space.depth_max - space.depth_min + 1);
    hp.max_depth =
        depth_pick == 0 ? -1 : space.depth_min + static_cast<int>(depth_pick) - 1;
    hp.sample_fraction =
        rng.uniform(space.sample_fraction_min, space.sample_fraction_max);
    hp.bootstrap_with_replacement = rng.bernoulli();
    hp.seed = derive_seed(seed, static_cast<std::uint64_t>(trial));

    const auto start = std::chrono::steady_clock::now();
    const LooResult loo = loo_xve_calibration(ds, hp, nominal_grid, threads);
    const double score = abes(loo.curve);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    result.trials.push_back(TrialResult{trial, hp, score, elapsed});
    if (!have_best || score < result.best_abes) {
      have_best = true;
      result.best = hp;
      result.best_abes = score;
    }
  }
  return result;
}

Forest refit_final(const Dataset& ds, const Hyperparameters& hp, int threads) {
  return fit_forest(ds, hp, threads);
}

SweepResult sweep_early_cycles(const std::vector<LabeledCell>& cells,
                               std::span<const int> w_values,
                               const SweepConfig& cfg) {
  SweepResult result;

  for (int w : w_values) {
    if (cfg.r >= w) {
      result.notes.push_back("w=" + std::to_string(w) +
                             ": skipped, reference cycle " +
                             std::to_string(cfg.r) + " is not below w");
      continue;
    }
    try {
      std::vector<LabeledCell> eligible;
      std::size_t dropped = 0;
      for (const LabeledCell& lc : cells) {
        if (lc.cell.max_cycle_index() >= w) {
          eligible.push_back(lc);
        } else {
          ++dropped;
        }
      }
      if (dropped > 0) {
        result.notes.push_back("w=" + std::to_string(w) + ": dropped " +
                               std::to_string(dropped) +
                               " cell(s) with fewer cycles");
      }

      std::vector<LabeledCell> truncated;
      truncated.reserve(eligible.size());
      for (const LabeledCell& lc : eligible) {
        truncated.push_back(
            LabeledCell{truncate_to_early_cycles(lc.cell, w), lc.cycle_life});
      }

      FeatureConfig fc;
      fc.r = cfg.r;
      fc.w = w;
      fc.grid = cfg.grid;
      fc.drop_ir_features = cfg.drop_ir_features;
      const Dataset all = build_matrix(truncated, fc);
      const Dataset train = all.subset_ids(cfg.split.train_ids);
      const Dataset test = all.subset_ids(cfg.split.test_ids);
      if (train.n() < 3 || test.n() < 1) {
        result.notes.push_back("w=" + std::to_string(w) +
                               ": skipped, not enough cells after dropping");
        continue;
      }

      const std::vector<double> grid = default_nominal_grid();
      const SearchSpace space;
      const SearchResult search =
          random_search(train, space, cfg.n_trials,
                        derive_seed(cfg.seed, static_cast<std::uint64_t>(w)),
                        grid, cfg.threads);
      const Forest forest = refit_final(train, search.best, cfg.threads);
      std::vector<double> qrf_pred(test.n());
      for (std::size_t i = 0; i < test.n(); ++i) {
        qrf_pred[i] = predict_mean(forest, test.x.row(i));
      }
      result.rows.push_back(SweepRow{w, "qrf", rmse(test.y, qrf_pred),
                                     mape(test.y, qrf_pred)});

      const EnetSearchResult enet = tune_elastic_net(
          train, cfg.n_trials,
          derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(w) + 1));
      const ElasticNetModel model =
          fit_elastic_net(train, enet.lambda, enet.l1_ratio);
      const std::vector<double> en_pred = predict(model, test.x);
      result.rows.push_back(SweepRow{w, "elastic_net", rmse(test.y, en_pred),
                                     mape(test.y, en_pred)});
    } catch (const Error& e) {
      result.notes.push_back("w=" + std::to_string(w) +
                             ": failed: " + e.what());
    }
  }
  return result;
}

}  // namespace qrf
