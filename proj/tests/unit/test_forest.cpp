#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "qrf/errors.hpp"
#include "qrf/forest.hpp"
#include "qrf/kernels.hpp"
#include "qrf/rng.hpp"
#include "qrf/synth.hpp"

using namespace qrf;

namespace {

Dataset one_dim_dataset() {
  Dataset ds;
  ds.feature_names = {"x"};
  ds.x = Matrix(4, 1);
  for (int i = 0; i < 4; ++i) ds.x.at(i, 0) = i + 1;
  ds.y = {10.0, 20.0, 30.0, 40.0};
  ds.cell_ids = {"a", "b", "c", "d"};
  return ds;
}

std::vector<std::uint32_t> full_bag(std::size_t n) {
  std::vector<std::uint32_t> bag(n);
  for (std::size_t i = 0; i < n; ++i) bag[i] = static_cast<std::uint32_t>(i);
  return bag;
}

Dataset random_dataset(std::size_t n, std::size_t p, Rng& rng) {
  Dataset ds;
  ds.x = Matrix(n, p);
  for (std::size_t j = 0; j < p; ++j) {
    ds.feature_names.push_back("f" + std::to_string(j));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) ds.x.at(i, j) = rng.uniform(-5.0, 5.0);
    ds.y.push_back(100.0 * ds.x.at(i, 0) + 10.0 * rng.normal());
    ds.cell_ids.push_back("r" + std::to_string(i));
  }
  return ds;
}

std::string forest_fingerprint(const Forest& f) {
  std::ostringstream os;
  for (const RegressionTree& t : f.trees) {
    os << t.tree_seed << '|';
    for (const TreeNode& n : t.nodes) {
      os << n.feature << ',' << n.threshold << ',' << n.left << ',' << n.right
         << ',' << n.items_begin << ',' << n.items_end << ';';
    }
    os << '#';
    for (std::uint32_t i : t.items) os << i << ',';
    os << '\n';
  }
  return os.str();
}

}  // namespace

TEST_CASE("fit_tree on constant response is a single leaf") {
  Dataset ds = one_dim_dataset();
  ds.y = {7.0, 7.0, 7.0, 7.0};
  Hyperparameters hp;
  hp.mtry = 1;
  hp.min_leaf = 1;
  const RegressionTree tree =
      fit_tree(ds.x, ds.y, full_bag(4), hp, 123);
  CHECK(tree.nodes.size() == 1);
  CHECK(tree.nodes[0].is_leaf());
}

TEST_CASE("fit_tree splits the 1-D staircase between 2 and 3") {
  const Dataset ds = one_dim_dataset();
  Hyperparameters hp;
  hp.mtry = 1;
  hp.min_leaf = 2;
  const RegressionTree tree = fit_tree(ds.x, ds.y, full_bag(4), hp, 9);
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].feature == 0);
  // Exhaustive scoring: the only threshold with both sides >= 2 is 2.5.
  CHECK(tree.nodes[0].threshold == 2.5);
  const auto left = tree.leaf_items(1);
  const auto right = tree.leaf_items(2);
  CHECK(std::vector<std::uint32_t>(left.begin(), left.end()) ==
        std::vector<std::uint32_t>{0, 1});
  CHECK(std::vector<std::uint32_t>(right.begin(), right.end()) ==
        std::vector<std::uint32_t>{2, 3});
}

TEST_CASE("max_depth 0 gives the in-bag mean predictor") {
  const Dataset ds = one_dim_dataset();
  Hyperparameters hp;
  hp.mtry = 1;
  hp.min_leaf = 1;
  hp.max_depth = 0;
  const RegressionTree tree = fit_tree(ds.x, ds.y, full_bag(4), hp, 5);
  CHECK(tree.nodes.size() == 1);
  const std::vector<double> x = {3.9};
  const std::vector<double> w = tree_weights(tree, x, 4);
  CHECK(kern::dot(w, ds.y) == doctest::Approx(25.0));
}

TEST_CASE("tree_weights on the two-leaf fixture") {
  const Dataset ds = one_dim_dataset();
  Hyperparameters hp;
  hp.mtry = 1;
  hp.min_leaf = 2;
  const RegressionTree tree = fit_tree(ds.x, ds.y, full_bag(4), hp, 9);

  SUBCASE("query in the left leaf") {
    const std::vector<double> x = {1.5};
    CHECK(tree_weights(tree, x, 4) ==
          std::vector<double>{0.5, 0.5, 0.0, 0.0});
  }
  SUBCASE("weights sum to one and out-of-leaf entries are zero") {
    const std::vector<double> x = {3.7};
    const std::vector<double> w = tree_weights(tree, x, 4);
    CHECK(w == std::vector<double>{0.0, 0.0, 0.5, 0.5});
  }
}

TEST_CASE("single-leaf tree weights are uniform over the bag") {
  Dataset ds = one_dim_dataset();
  ds.y = {1.0, 1.0, 1.0, 1.0};
  Hyperparameters hp;
  hp.mtry = 1;
  const RegressionTree tree = fit_tree(ds.x, ds.y, full_bag(4), hp, 3);
  const std::vector<double> x = {2.0};
  CHECK(tree_weights(tree, x, 4) ==
        std::vector<double>(4, 0.25));
}

TEST_CASE("out-of-bag index gets weight exactly zero") {
  const Dataset ds = one_dim_dataset();
  Hyperparameters hp;
  hp.mtry = 1;
  hp.min_leaf = 1;
  const RegressionTree tree =
      fit_tree(ds.x, ds.y, {0, 1, 2}, hp, 17);  // row 3 out of bag
  const std::vector<double> x = {4.0};
  const std::vector<double> w = tree_weights(tree, x, 4);
  CHECK(w[3] == 0.0);
}

TEST_CASE("fit_forest determinism and reductions") {
  Rng rng(1234);
  const Dataset ds = random_dataset(40, 3, rng);
  Hyperparameters hp;
  hp.n_trees = 11;
  hp.min_leaf = 2;
  hp.seed = 99;

  SUBCASE("same config twice gives structurally identical forests") {
    const Forest a = fit_forest(ds, hp);
    const Forest b = fit_forest(ds, hp);
    CHECK(forest_fingerprint(a) == forest_fingerprint(b));
  }

  SUBCASE("thread count does not change the forest") {
    const Forest a = fit_forest(ds, hp, 1);
    const Forest b = fit_forest(ds, hp, 3);
    CHECK(forest_fingerprint(a) == forest_fingerprint(b));
  }

  SUBCASE("sample_fraction 1 without replacement uses the full set") {
    Hyperparameters full = hp;
    full.sample_fraction = 1.0;
    full.bootstrap_with_replacement = false;
    const Forest f = fit_forest(ds, full);
    for (const RegressionTree& tree : f.trees) {
      std::vector<std::uint32_t> sorted = tree.items;
      std::sort(sorted.begin(), sorted.end());
      CHECK(sorted == full_bag(ds.n()));
    }
  }

  SUBCASE("K = 1 forest equals its single tree") {
    Hyperparameters k1 = hp;
    k1.n_trees = 1;
    const Forest f = fit_forest(ds, k1);
    Rng qrng(5);
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> x(3);
      for (double& v : x) v = qrng.uniform(-5.0, 5.0);
      CHECK(forest_weights(f, x) ==
            tree_weights(f.trees[0], x, ds.n()));
    }
  }
}

TEST_CASE("forest_weights averages per-tree weights") {
  Rng rng(4321);
  const Dataset ds = random_dataset(30, 2, rng);
  Hyperparameters hp;
  hp.n_trees = 7;
  hp.min_leaf = 3;
  hp.seed = 7;
  const Forest f = fit_forest(ds, hp);

  std::vector<double> x = {0.0, 0.0};
  const std::vector<double> w = forest_weights(f, x);

  std::vector<double> manual(ds.n(), 0.0);
  for (const RegressionTree& tree : f.trees) {
    const std::vector<double> tw = tree_weights(tree, x, ds.n());
    for (std::size_t i = 0; i < manual.size(); ++i) manual[i] += tw[i];
  }
  for (double& v : manual) v /= static_cast<double>(f.trees.size());

  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(w[i] == doctest::Approx(manual[i]).epsilon(1e-14));
  }
}

TEST_CASE("forest weights match the brute-force oracle") {
  Rng rng(20240818);
  for (int fixture = 0; fixture < 25; ++fixture) {
    const std::size_t n = 10 + rng.index(60);
    const Dataset ds = random_dataset(n, 1 + rng.index(4), rng);
    Hyperparameters hp;
    hp.n_trees = 1 + static_cast<int>(rng.index(10));
    hp.min_leaf = 1 + static_cast<int>(rng.index(4));
    hp.sample_fraction = rng.uniform(0.5, 1.0);
    hp.bootstrap_with_replacement = rng.bernoulli();
    hp.seed = rng.next();
    const Forest f = fit_forest(ds, hp);

    for (int q = 0; q < 5; ++q) {
      std::vector<double> x(ds.p());
      for (double& v : x) v = rng.uniform(-6.0, 6.0);
      const std::vector<double> fast = forest_weights(f, x);
      const std::vector<double> slow = brute_force_weights(f, x);
      double sum = 0.0;
      for (std::size_t i = 0; i < fast.size(); ++i) {
        CHECK(std::fabs(fast[i] - slow[i]) <= 1e-12);
        sum += fast[i];
      }
      CHECK(std::fabs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("predict_mean") {
  Rng rng(55);
  SUBCASE("constant response predicts the constant") {
    Dataset ds = random_dataset(20, 2, rng);
    for (double& v : ds.y) v = 42.0;
    Hyperparameters hp;
    hp.n_trees = 5;
    hp.seed = 3;
    const Forest f = fit_forest(ds, hp);
    const std::vector<double> x = {1.0, -1.0};
    CHECK(predict_mean(f, x) == doctest::Approx(42.0).epsilon(1e-12));
  }

  SUBCASE("two-leaf fixture predicts 15 in the left leaf") {
    const Dataset ds = one_dim_dataset();
    Hyperparameters hp;
    hp.n_trees = 1;
    hp.mtry = 1;
    hp.min_leaf = 2;
    hp.sample_fraction = 1.0;
    hp.bootstrap_with_replacement = false;
    hp.seed = 1;
    const Forest f = fit_forest(ds, hp);
    const std::vector<double> x = {1.0};
    CHECK(predict_mean(f, x) == doctest::Approx(15.0).epsilon(1e-12));
  }

  SUBCASE("prediction stays inside the response range") {
    const Dataset ds = random_dataset(50, 3, rng);
    Hyperparameters hp;
    hp.n_trees = 20;
    hp.seed = 8;
    const Forest f = fit_forest(ds, hp);
    const double lo = kern::min(ds.y);
    const double hi = kern::max(ds.y);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> x(3);
      for (double& v : x) v = rng.uniform(-20.0, 20.0);
      const double pred = predict_mean(f, x);
      CHECK(pred >= lo - 1e-9);
      CHECK(pred <= hi + 1e-9);
    }
  }

  SUBCASE("mean equals the average of per-tree weighted means") {
    const Dataset ds = random_dataset(40, 3, rng);
    Hyperparameters hp;
    hp.n_trees = 9;
    hp.seed = 77;
    const Forest f = fit_forest(ds, hp);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> x(3);
      for (double& v : x) v = rng.uniform(-5.0, 5.0);
      double per_tree = 0.0;
      for (const RegressionTree& tree : f.trees) {
        per_tree += kern::dot(tree_weights(tree, x, ds.n()), ds.y);
      }
      per_tree /= static_cast<double>(f.trees.size());
      CHECK(std::fabs(predict_mean(f, x) - per_tree) <= 1e-9);
    }
  }
}

TEST_CASE("non-finite queries are rejected") {
  Rng rng(2);
  const Dataset ds = random_dataset(10, 2, rng);
  Hyperparameters hp;
  hp.n_trees = 2;
  const Forest f = fit_forest(ds, hp);
  const std::vector<double> bad = {1.0, std::nan("")};
  CHECK_THROWS_AS(predict_mean(f, bad), DomainError);
  const std::vector<double> wrong_size = {1.0};
  CHECK_THROWS_AS(predict_mean(f, wrong_size), DomainError);
}

TEST_CASE("strictly increasing feature transforms preserve topology") {
  Rng rng(5150);
  const Dataset ds = random_dataset(60, 3, rng);
  Dataset warped = ds;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    // Monotone transform of feature 1: x -> exp(x / 4).
    warped.x.at(i, 1) = std::exp(ds.x.at(i, 1) / 4.0);
  }
  Hyperparameters hp;
  hp.n_trees = 8;
  hp.min_leaf = 2;
  hp.seed = 31;
  const Forest a = fit_forest(ds, hp);
  const Forest b = fit_forest(warped, hp);

  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    const RegressionTree& ta = a.trees[t];
    const RegressionTree& tb = b.trees[t];
    REQUIRE(ta.nodes.size() == tb.nodes.size());
    CHECK(ta.items == tb.items);  // identical leaf memberships
    for (std::size_t k = 0; k < ta.nodes.size(); ++k) {
      CHECK(ta.nodes[k].feature == tb.nodes[k].feature);
      CHECK(ta.nodes[k].left == tb.nodes[k].left);
      CHECK(ta.nodes[k].items_begin == tb.nodes[k].items_begin);
      CHECK(ta.nodes[k].items_end == tb.nodes[k].items_end);
    }
  }
}

TEST_CASE("invalid hyperparameters are configuration errors") {
  Rng rng(6);
  const Dataset ds = random_dataset(10, 2, rng);
  Hyperparameters hp;
  hp.n_trees = 0;
  CHECK_THROWS_AS(fit_forest(ds, hp), ConfigError);
  hp.n_trees = 5;
  hp.mtry = 3;  // p = 2
  CHECK_THROWS_AS(fit_forest(ds, hp), ConfigError);
  hp.mtry = 0;
  hp.sample_fraction = 0.0;
  CHECK_THROWS_AS(fit_forest(ds, hp), ConfigError);
}

TEST_CASE("model file round-trip reproduces predictions bit for bit") {
  Rng rng(808);
  const Dataset ds = random_dataset(35, 4, rng);
  Hyperparameters hp;
  hp.n_trees = 6;
  hp.min_leaf = 2;
  hp.seed = 414;
  const Forest f = fit_forest(ds, hp);

  const auto dir = testutil::temp_dir("model_io");
  save_forest(f, dir / "model.json");
  const Forest g = load_forest(dir / "model.json");

  CHECK(g.feature_names == f.feature_names);
  CHECK(g.y_train == f.y_train);
  CHECK(g.hp.mtry == f.hp.mtry);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform(-6.0, 6.0);
    CHECK(predict_mean(f, x) == predict_mean(g, x));
    CHECK(forest_weights(f, x) == forest_weights(g, x));
  }
}
