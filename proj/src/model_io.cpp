#include <fstream>

#include "json.hpp"
#include "qrf/csv.hpp"
#include "qrf/errors.hpp"
#include "qrf/forest.hpp"

namespace qrf {

namespace {

using nlohmann::json;

json hp_to_json(const Hyperparameters& hp) {
  return json{{"n_trees", hp.n_trees},
              {"mtry", hp.mtry},
              {"min_leaf", hp.min_leaf},
              {"max_depth", hp.max_depth},
              {"sample_fraction", hp.sample_fraction},
              {"bootstrap_with_replacement", hp.bootstrap_with_replacement},
              {"seed", hp.seed}};
}

Hyperparameters hp_from_json(const json& j) {
  Hyperparameters hp;
  hp.n_trees = j.at("n_trees").get<int>();
  hp.mtry = j.at("mtry").get<int>();
  hp.min_leaf = j.at("min_leaf").get<int>();
  hp.max_depth = j.at("max_depth").get<int>();
  hp.sample_fraction = j.at("sample_fraction").get<double>();
  hp.bootstrap_with_replacement =
      j.at("bootstrap_with_replacement").get<bool>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  return hp;
}

}  // namespace

void save_hyperparameters(const Hyperparameters& hp,
                          const std::filesystem::path& path) {
  AtomicFile out(path);
  out.write(hp_to_json(hp).dump(2));
  out.write("\n");
  out.commit();
}

Hyperparameters load_hyperparameters(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open hyperparameter file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("hyperparameter file " + path.string() + ": " + e.what());
  }
  return hp_from_json(j);
}

void save_forest(const Forest& forest, const std::filesystem::path& path) {
  json j;
  j["format"] = "qrf-forest";
  j["version"] = 1;
  j["hyperparameters"] = hp_to_json(forest.hp);
  j["feature_names"] = forest.feature_names;
  j["y_train"] = forest.y_train;

  json trees = json::array();
  for (const RegressionTree& tree : forest.trees) {
    json nodes = json::array();
    for (const TreeNode& n : tree.nodes) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right,
                                   n.items_begin, n.items_end}));
    }
    trees.push_back(json{{"seed", tree.tree_seed},
                         {"items", tree.items},
                         {"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);

  AtomicFile out(path);
  out.write(j.dump());
  out.write("\n");
  out.commit();
}

Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("model file " + path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "qrf-forest") {
    throw ParseError("model file " + path.string() +
                     ": unexpected format field");
  }
  if (j.value("version", 0) != 1) {
    throw ParseError("model file " + path.string() +
                     ": unsupported version " +
                     std::to_string(j.value("version", 0)));
  }

  Forest forest;
  forest.hp = hp_from_json(j.at("hyperparameters"));
  forest.feature_names =
      j.at("feature_names").get<std::vector<std::string>>();
  forest.y_train = j.at("y_train").get<std::vector<double>>();
  for (const json& tj : j.at("trees")) {
    RegressionTree tree;
    tree.tree_seed = tj.at("seed").get<std::uint64_t>();
    tree.items = tj.at("items").get<std::vector<std::uint32_t>>();
    for (const json& nj : tj.at("nodes")) {
      TreeNode n;
      n.feature = nj.at(0).get<int>();
      n.threshold = nj.at(1).get<double>();
      n.left = nj.at(2).get<std::int32_t>();
      n.right = nj.at(3).get<std::int32_t>();
      n.items_begin = nj.at(4).get<std::uint32_t>();
      n.items_end = nj.at(5).get<std::uint32_t>();
      tree.nodes.push_back(n);
    }
    forest.trees.push_back(std::move(tree));
  }
  rebuild_sorted_order(forest);
  return forest;
}

}  // namespace qrf
