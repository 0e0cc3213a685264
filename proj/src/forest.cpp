#include "qrf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qrf/errors.hpp"
#include "qrf/kernels.hpp"
#include "qrf/parallel.hpp"
#include "qrf/rng.hpp"

namespace qrf {

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
  std::size_t node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold
               ? static_cast<std::size_t>(n.left)
               : static_cast<std::size_t>(n.right);
  }
  return node;
}

namespace {

struct BuildFrame {
  std::int32_t node = 0;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  int depth = 0;
};

struct BestSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // sum_l^2/n_l + sum_r^2/n_r, larger is better
};

// Exhaustive scan over midpoints of consecutive distinct sorted values.
// Ties in score break toward the lower feature index, then lower threshold;
// callers pass features in ascending order, so strict improvement suffices.
void scan_feature(const Matrix& x, std::span<const double> y,
                  std::span<const std::uint32_t> items, int feature,
                  int min_leaf, double y_total,
                  std::vector<std::pair<double, std::uint32_t>>& scratch,
                  BestSplit& best) {
  const std::size_t n = items.size();
  scratch.clear();
  for (std::uint32_t idx : items) {
    scratch.emplace_back(x.at(idx, static_cast<std::size_t>(feature)), idx);
  }
  std::sort(scratch.begin(), scratch.end());

  double left_sum = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    left_sum += y[scratch[k].second];
    if (scratch[k].first == scratch[k + 1].first) continue;
    const std::size_t n_l = k + 1;
    const std::size_t n_r = n - n_l;
    if (n_l < static_cast<std::size_t>(min_leaf) ||
        n_r < static_cast<std::size_t>(min_leaf)) {
      continue;
    }
    const double right_sum = y_total - left_sum;
    const double score = left_sum * left_sum / static_cast<double>(n_l) +
                         right_sum * right_sum / static_cast<double>(n_r);
    if (!best.found || score > best.score) {
      best.found = true;
      best.feature = feature;
      best.threshold = 0.5 * (scratch[k].first + scratch[k + 1].first);
      best.score = score;
    }
  }
}

}  // namespace

RegressionTree fit_tree(const Matrix& x, std::span<const double> y,
                        std::vector<std::uint32_t> in_bag,
                        const Hyperparameters& hp, std::uint64_t tree_seed) {
  RegressionTree tree;
  tree.tree_seed = tree_seed;
  tree.items = std::move(in_bag);

  const std::size_t p = x.cols;
  const int mtry = hp.mtry > 0 ? std::min<int>(hp.mtry, static_cast<int>(p))
                               : static_cast<int>((p + 2) / 3);
  Rng rng(tree_seed);

  std::vector<int> feature_pool(p);
  std::iota(feature_pool.begin(), feature_pool.end(), 0);
  std::vector<int> candidates(static_cast<std::size_t>(mtry));
  std::vector<std::pair<double, std::uint32_t>> scratch;
  std::vector<std::uint32_t> buffer(tree.items.size());

  tree.nodes.push_back(TreeNode{});
  std::vector<BuildFrame> stack;
  stack.push_back(
      {0, 0, static_cast<std::uint32_t>(tree.items.size()), 0});

  while (!stack.empty()) {
    const BuildFrame frame = stack.back();
    stack.pop_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(frame.node)];
    node.items_begin = frame.begin;
    node.items_end = frame.end;

    const std::span<const std::uint32_t> items{
        tree.items.data() + frame.begin, frame.end - frame.begin};
    const std::size_t n = items.size();

    bool make_leaf = n < 2 * static_cast<std::size_t>(hp.min_leaf) ||
                     (!hp.depth_unlimited() && frame.depth >= hp.max_depth);
    if (!make_leaf) {
      // Pure nodes cannot be improved by any split.
      bool pure = true;
      for (std::size_t k = 1; k < n; ++k) {
        if (y[items[k]] != y[items[0]]) {
          pure = false;
          break;
        }
      }
      make_leaf = pure;
    }

    BestSplit best;
    if (!make_leaf) {
      // Partial Fisher-Yates; candidates evaluated in ascending feature order
      // so equal scores resolve deterministically.
      for (int k = 0; k < mtry; ++k) {
        const std::size_t j =
            k + static_cast<std::size_t>(rng.index(p - static_cast<std::size_t>(k)));
        std::swap(feature_pool[static_cast<std::size_t>(k)], feature_pool[j]);
        candidates[static_cast<std::size_t>(k)] =
            feature_pool[static_cast<std::size_t>(k)];
      }
      std::sort(candidates.begin(), candidates.end());

      double y_total = 0.0;
      for (std::uint32_t idx : items) y_total += y[idx];
      const double parent_score = y_total * y_total / static_cast<double>(n);

      for (int feature : candidates) {
        scan_feature(x, y, items, feature, hp.min_leaf, y_total, scratch, best);
      }
      // Accept only strict impurity decrease.
      if (best.found && !(best.score > parent_score)) best.found = false;
      make_leaf = !best.found;
    }

    if (make_leaf) continue;

    // Stable partition: left block keeps original relative order, then right.
    const std::size_t f = static_cast<std::size_t>(best.feature);
    std::uint32_t n_left = 0;
    std::uint32_t out = 0;
    for (std::uint32_t k = frame.begin; k < frame.end; ++k) {
      if (x.at(tree.items[k], f) <= best.threshold) {
        buffer[out++] = tree.items[k];
        ++n_left;
      }
    }
    for (std::uint32_t k = frame.begin; k < frame.end; ++k) {
      if (!(x.at(tree.items[k], f) <= best.threshold)) {
        buffer[out++] = tree.items[k];
      }
    }
    std::copy_n(buffer.begin(), out, tree.items.begin() + frame.begin);

    const std::int32_t left = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes.push_back(TreeNode{});
    TreeNode& parent = tree.nodes[static_cast<std::size_t>(frame.node)];
    parent.feature = best.feature;
    parent.threshold = best.threshold;
    parent.left = left;
    parent.right = left + 1;

    const std::uint32_t mid = frame.begin + n_left;
    // Right first so the left subtree is built (and numbered) first.
    stack.push_back({left + 1, mid, frame.end, frame.depth + 1});
    stack.push_back({left, frame.begin, mid, frame.depth + 1});
  }

  return tree;
}

namespace {

std::vector<std::uint32_t> draw_in_bag(std::size_t n,
                                       const Hyperparameters& hp, Rng& rng) {
  std::size_t n_draws = static_cast<std::size_t>(
      std::llround(hp.sample_fraction * static_cast<double>(n)));
  n_draws = std::max<std::size_t>(1, std::min(n_draws, n * 2));
  std::vector<std::uint32_t> bag;
  bag.reserve(n_draws);
  if (hp.bootstrap_with_replacement) {
    for (std::size_t k = 0; k < n_draws; ++k) {
      bag.push_back(static_cast<std::uint32_t>(rng.index(n)));
    }
  } else {
    n_draws = std::min(n_draws, n);
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::size_t k = 0; k < n_draws; ++k) {
      const std::size_t j = k + rng.index(n - k);
      std::swap(pool[k], pool[j]);
      bag.push_back(pool[k]);
    }
  }
  return bag;
}

void validate(const Dataset& ds, const Hyperparameters& hp) {
  if (ds.n() < 2) throw ConfigError("forest fit needs at least 2 rows");
  if (hp.n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (hp.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (!(hp.sample_fraction > 0.0 && hp.sample_fraction <= 1.0)) {
    throw ConfigError("sample_fraction must lie in (0, 1]");
  }
  if (hp.mtry < 0 || hp.mtry > static_cast<int>(ds.p())) {
    throw ConfigError("mtry must lie in [1, p] (0 selects ceil(p/3))");
  }
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.p(); ++j) {
      if (!std::isfinite(ds.x.at(i, j))) {
        throw ConfigError("training matrix contains non-finite values");
      }
    }
    if (!std::isfinite(ds.y[i])) {
      throw ConfigError("training response contains non-finite values");
    }
  }
}

}  // namespace

void rebuild_sorted_order(Forest& forest) {
  forest.y_sorted_order.resize(forest.y_train.size());
  std::iota(forest.y_sorted_order.begin(), forest.y_sorted_order.end(), 0u);
  std::sort(forest.y_sorted_order.begin(), forest.y_sorted_order.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              if (forest.y_train[a] != forest.y_train[b]) {
                return forest.y_train[a] < forest.y_train[b];
              }
              return a < b;
            });
}

Forest fit_forest(const Dataset& ds, const Hyperparameters& hp, int threads) {
  validate(ds, hp);

  Forest forest;
  forest.hp = hp;
  if (forest.hp.mtry == 0) {
    forest.hp.mtry =
        static_cast<int>((ds.p() + 2) / 3);  // ceil(p / 3)
  }
  forest.y_train = ds.y;
  forest.feature_names = ds.feature_names;
  forest.trees.resize(static_cast<std::size_t>(hp.n_trees));

  const Hyperparameters& resolved = forest.hp;
  parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(resolved.seed, t);
    Rng rng(tree_seed);
    std::vector<std::uint32_t> bag = draw_in_bag(ds.n(), resolved, rng);
    forest.trees[t] = fit_tree(ds.x, ds.y, std::move(bag), resolved, tree_seed);
  });

  rebuild_sorted_order(forest);
  return forest;
}

void check_query(const Forest& forest, std::span<const double> x) {
  if (x.size() != forest.n_features()) {
    throw DomainError("query has " + std::to_string(x.size()) +
                      " features, model expects " +
                      std::to_string(forest.n_features()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw DomainError("query features must be finite");
    }
  }
}

std::vector<double> tree_weights(const RegressionTree& tree,
                                 std::span<const double> x, std::size_t n) {
  std::vector<double> w(n, 0.0);
  const std::span<const std::uint32_t> leaf =
      tree.leaf_items(tree.leaf_index(x));
  const double inv = 1.0 / static_cast<double>(leaf.size());
  for (std::uint32_t idx : leaf) w[idx] += inv;
  return w;
}

std::vector<double> forest_weights(const Forest& forest,
                                   std::span<const double> x) {
  check_query(forest, x);
  std::vector<double> w(forest.n_train(), 0.0);
  for (const RegressionTree& tree : forest.trees) {
    const std::span<const std::uint32_t> leaf =
        tree.leaf_items(tree.leaf_index(x));
    const double inv = 1.0 / static_cast<double>(leaf.size());
    for (std::uint32_t idx : leaf) w[idx] += inv;
  }
  kern::scale(w, 1.0 / static_cast<double>(forest.trees.size()));
  return w;
}

double predict_mean(const Forest& forest, std::span<const double> x) {
  const std::vector<double> w = forest_weights(forest, x);
  return kern::dot(w, forest.y_train);
}

}  // namespace qrf
