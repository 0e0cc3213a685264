#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qrf/types.hpp"

namespace qrf {

struct Hyperparameters {
  int n_trees = 500;
  int mtry = 0;  // 0 = auto: ceil(p / 3), resolved at fit time
  int min_leaf = 3;
  int max_depth = -1;  // -1 = unlimited; 0 means the root is a leaf
  double sample_fraction = 1.0;
  bool bootstrap_with_replacement = true;
  std::uint64_t seed = 0;

  bool depth_unlimited() const { return max_depth < 0; }
};

// feature < 0 marks a leaf; leaves reference [items_begin, items_end) of the
// tree's `items` array.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint32_t items_begin = 0;
  std::uint32_t items_end = 0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  // In-bag training indices, partitioned so every leaf owns a contiguous
  // range. Indices refer to the full training set; bootstrap duplicates
  // appear with their multiplicity.
  std::vector<std::uint32_t> items;
  std::uint64_t tree_seed = 0;

  std::size_t leaf_index(std::span<const double> x) const;
  std::span<const std::uint32_t> leaf_items(std::size_t node) const {
    const TreeNode& n = nodes[node];
    return {items.data() + n.items_begin, n.items_end - n.items_begin};
  }
};

struct Forest {
  std::vector<RegressionTree> trees;
  std::vector<double> y_train;
  std::vector<std::string> feature_names;
  Hyperparameters hp;  // as resolved at fit time (mtry filled in)
  // argsort of y_train (value ascending, index ascending on ties); shared by
  // the quantile sweeps.
  std::vector<std::uint32_t> y_sorted_order;

  std::size_t n_train() const { return y_train.size(); }
  std::size_t n_features() const { return feature_names.size(); }
};

RegressionTree fit_tree(const Matrix& x, std::span<const double> y,
                        std::vector<std::uint32_t> in_bag,
                        const Hyperparameters& hp, std::uint64_t tree_seed);

Forest fit_forest(const Dataset& ds, const Hyperparameters& hp,
                  int threads = 1);

// Per-tree weight over the full training set: multiplicity in the leaf that
// contains x divided by the leaf's in-bag size; 0 for out-of-bag indices.
std::vector<double> tree_weights(const RegressionTree& tree,
                                 std::span<const double> x, std::size_t n);

// Mean of the per-tree weight vectors; nonnegative, sums to 1.
std::vector<double> forest_weights(const Forest& forest,
                                   std::span<const double> x);

double predict_mean(const Forest& forest, std::span<const double> x);

// Versioned JSON model file; load reproduces predictions bit-for-bit.
void save_forest(const Forest& forest, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

void save_hyperparameters(const Hyperparameters& hp,
                          const std::filesystem::path& path);
Hyperparameters load_hyperparameters(const std::filesystem::path& path);

void rebuild_sorted_order(Forest& forest);
void check_query(const Forest& forest, std::span<const double> x);

}  // namespace qrf
