#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "qrf/errors.hpp"
#include "qrf/forest.hpp"
#include "qrf/interpret.hpp"
#include "qrf/rng.hpp"
#include "qrf/synth.hpp"

using namespace qrf;

namespace {

BatchPredictFn forest_predictor(const Forest& forest) {
  return [&forest](const Matrix& x) {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
      out[i] = predict_mean(forest, x.row(i));
    }
    return out;
  };
}

double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> rank(v.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      rank[order[r]] = static_cast<double>(r);
    }
    return rank;
  };
  const std::vector<double> ra = ranks(a);
  const std::vector<double> rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("constant column has importance exactly zero") {
  HeteroscedasticData gen = gen_heteroscedastic(60, 5);
  for (std::size_t i = 0; i < gen.data.n(); ++i) gen.data.x.at(i, 3) = 1.0;
  Hyperparameters hp;
  hp.n_trees = 15;
  hp.min_leaf = 3;
  hp.seed = 6;
  const Forest forest = fit_forest(gen.data, hp);

  const ImportanceReport report = permutation_importance(
      forest_predictor(forest), gen.data, ScoreKind::r2, 5, 123);
  for (const ImportanceEntry& e : report.entries) {
    if (e.feature_index == 3) {
      CHECK(e.importance == 0.0);
      for (double s : e.repeat_scores) CHECK(s == report.reference_score);
    }
  }
}

TEST_CASE("a feature no split ever uses has importance exactly zero") {
  // Force the forest to see every feature at every split (mtry = p); with a
  // constant column it can never be chosen, so shuffling it later cannot
  // change any prediction even though the shuffled values differ.
  HeteroscedasticData gen = gen_heteroscedastic(50, 15);
  for (std::size_t i = 0; i < gen.data.n(); ++i) {
    gen.data.x.at(i, 5) = 3.25;
  }
  Hyperparameters hp;
  hp.n_trees = 10;
  hp.mtry = static_cast<int>(gen.data.p());
  hp.seed = 44;
  const Forest forest = fit_forest(gen.data, hp);

  Dataset shuffled_domain = gen.data;  // give the column distinct values
  Rng rng(7);
  for (std::size_t i = 0; i < shuffled_domain.n(); ++i) {
    shuffled_domain.x.at(i, 5) = rng.uniform();
  }
  const ImportanceReport report = permutation_importance(
      forest_predictor(forest), shuffled_domain, ScoreKind::r2, 4, 9);
  for (const ImportanceEntry& e : report.entries) {
    if (e.feature_index == 5) CHECK(e.importance == 0.0);
  }
}

TEST_CASE("informative feature outranks pure noise") {
  int wins = 0;
  const int runs = 30;
  for (int run = 0; run < runs; ++run) {
    const HeteroscedasticData gen =
        gen_heteroscedastic(150, 1000 + static_cast<std::uint64_t>(run));
    Hyperparameters hp;
    hp.n_trees = 20;
    hp.min_leaf = 3;
    hp.seed = 2000 + static_cast<std::uint64_t>(run);
    const Forest forest = fit_forest(gen.data, hp);
    const ImportanceReport report = permutation_importance(
        forest_predictor(forest), gen.data, ScoreKind::r2, 3,
        3000 + static_cast<std::uint64_t>(run));
    double im_x1 = 0.0, im_noise = 0.0;
    for (const ImportanceEntry& e : report.entries) {
      if (e.feature_index == 0) im_x1 = e.importance;
      if (e.feature_index == 4) im_noise = e.importance;
    }
    wins += im_x1 > im_noise;
  }
  CHECK(wins >= runs - 1);
}

TEST_CASE("importance report structure") {
  const HeteroscedasticData gen = gen_heteroscedastic(40, 21);
  Hyperparameters hp;
  hp.n_trees = 8;
  hp.seed = 22;
  const Forest forest = fit_forest(gen.data, hp);

  const ImportanceReport train_report = permutation_importance(
      forest_predictor(forest), gen.data, ScoreKind::r2, 4, 1);
  const HeteroscedasticData test_gen = gen_heteroscedastic(30, 77);
  const ImportanceReport test_report = permutation_importance(
      forest_predictor(forest), test_gen.data, ScoreKind::r2, 4, 1);

  // Same schema on train and test; entries are a permutation of features.
  for (const ImportanceReport* rep : {&train_report, &test_report}) {
    CHECK(rep->entries.size() == gen.data.p());
    CHECK(rep->repeats == 4);
    CHECK(rep->score_name == "r2");
    std::vector<std::size_t> idx;
    for (const ImportanceEntry& e : rep->entries) {
      idx.push_back(e.feature_index);
      CHECK(e.repeat_scores.size() == 4);
    }
    std::sort(idx.begin(), idx.end());
    for (std::size_t j = 0; j < idx.size(); ++j) CHECK(idx[j] == j);
  }

  // Sorted descending.
  for (std::size_t k = 1; k < train_report.entries.size(); ++k) {
    CHECK(train_report.entries[k - 1].importance >=
          train_report.entries[k].importance);
  }

  // neg_rmse score name propagates.
  const ImportanceReport neg = permutation_importance(
      forest_predictor(forest), gen.data, ScoreKind::neg_rmse, 2, 1);
  CHECK(neg.score_name == "neg_rmse");
}

TEST_CASE("pdp on a never-split feature is flat") {
  HeteroscedasticData gen = gen_heteroscedastic(50, 31);
  for (std::size_t i = 0; i < gen.data.n(); ++i) gen.data.x.at(i, 2) = 0.5;
  Hyperparameters hp;
  hp.n_trees = 10;
  hp.mtry = static_cast<int>(gen.data.p());
  hp.seed = 32;
  const Forest forest = fit_forest(gen.data, hp);

  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  const PDPResult result = pdp(forest, gen.data, 2, grid);
  for (std::size_t g = 1; g < result.grid.size(); ++g) {
    CHECK(result.mean_curve[g] == result.mean_curve[0]);
    for (const auto& q : result.quantile_curves) CHECK(q[g] == q[0]);
  }
}

TEST_CASE("pdp single point equals the substituted average") {
  const HeteroscedasticData gen = gen_heteroscedastic(40, 41);
  Hyperparameters hp;
  hp.n_trees = 12;
  hp.seed = 42;
  const Forest forest = fit_forest(gen.data, hp);

  const double v = 0.37;
  const std::vector<double> grid = {v};
  const PDPResult result = pdp(forest, gen.data, 0, grid);

  Matrix substituted = gen.data.x;
  for (std::size_t i = 0; i < substituted.rows; ++i) {
    substituted.at(i, 0) = v;
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < substituted.rows; ++i) {
    mean += predict_mean(forest, substituted.row(i));
  }
  mean /= static_cast<double>(substituted.rows);
  CHECK(result.mean_curve[0] == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("pdp recovers a monotone additive effect") {
  const AdditiveData gen = gen_additive(400, 51);
  Hyperparameters hp;
  hp.n_trees = 60;
  hp.min_leaf = 5;
  hp.seed = 52;
  const Forest forest = fit_forest(gen.data, hp);

  const PDPResult result = pdp(forest, gen.data, 0);
  REQUIRE(result.grid.size() >= 40);

  std::vector<double> truth;
  for (double v : result.grid) truth.push_back(AdditiveData::g1(v));
  CHECK(spearman(result.mean_curve, truth) > 0.9);

  // Quantile curves stay ordered at every grid point.
  for (std::size_t g = 0; g < result.grid.size(); ++g) {
    CHECK(result.quantile_curves[0][g] <= result.quantile_curves[1][g]);
    CHECK(result.quantile_curves[1][g] <= result.quantile_curves[2][g]);
  }

  // Histogram covers the observations.
  std::size_t total = 0;
  for (std::size_t c : result.histogram.counts) total += c;
  CHECK(total == gen.data.n());
}

TEST_CASE("pdp argument validation") {
  const HeteroscedasticData gen = gen_heteroscedastic(20, 61);
  Hyperparameters hp;
  hp.n_trees = 4;
  hp.seed = 62;
  const Forest forest = fit_forest(gen.data, hp);
  CHECK_THROWS_AS(pdp(forest, gen.data, 99), DomainError);
  const std::vector<double> unsorted = {0.5, 0.2};
  CHECK_THROWS_AS(pdp(forest, gen.data, 0, unsorted), DomainError);
}
