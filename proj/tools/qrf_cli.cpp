// Command-line pipeline for battery cycle-life range prediction: synthetic
// data generation, feature extraction, splitting, hyperparameter tuning,
// training, prediction, evaluation, interpretation, protocol ranking, the
// early-cycle sweep, and the Elastic Net baseline. Every command writes its
// effective configuration next to its outputs and is byte-reproducible for a
// fixed configuration.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qrf/csv.hpp"
#include "qrf/data_ingest.hpp"
#include "qrf/decision.hpp"
#include "qrf/elastic_net.hpp"
#include "qrf/errors.hpp"
#include "qrf/features.hpp"
#include "qrf/forest.hpp"
#include "qrf/interpret.hpp"
#include "qrf/metrics.hpp"
#include "qrf/quantiles.hpp"
#include "qrf/synth.hpp"
#include "qrf/tuning.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qrf;

namespace {

struct CommonOpts {
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
};

void ensure_out_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--out-dir is required");
  fs::create_directories(dir);
}

void write_config(const std::string& out_dir, const std::string& command,
                  const json& cfg) {
  json j = cfg;
  j["command"] = command;
  AtomicFile out(fs::path(out_dir) / ("config_" + command + ".json"));
  out.write(j.dump(2));
  out.write("\n");
  out.commit();
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string tok = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) out.push_back(std::stoi(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

// "2017-05-12:27/14,2017-06-30:36/7"
std::map<std::string, BatchCounts> parse_batch_counts(const std::string& text) {
  std::map<std::string, BatchCounts> counts;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(start, comma - start);
    const std::size_t colon = item.find(':');
    const std::size_t slash = item.find('/', colon);
    if (colon == std::string::npos || slash == std::string::npos) {
      throw ConfigError("batch counts must look like BATCH:TRAIN/TEST, got '" +
                        item + "'");
    }
    BatchCounts bc;
    bc.train_n = std::stoi(item.substr(colon + 1, slash - colon - 1));
    bc.test_n = std::stoi(item.substr(slash + 1));
    counts[item.substr(0, colon)] = bc;
    start = comma + 1;
  }
  if (counts.empty()) throw ConfigError("--batch-counts is required");
  return counts;
}

struct SplitFile {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

SplitFile load_split_csv(const fs::path& path) {
  CsvReader r(path);
  r.expect_header({"cell_id", "set"});
  SplitFile split;
  std::vector<std::string> f;
  while (r.next_row(f)) {
    if (f.size() != 2) r.fail("expected 2 fields");
    if (f[1] == "train") {
      split.train_ids.push_back(f[0]);
    } else if (f[1] == "test") {
      split.test_ids.push_back(f[0]);
    } else {
      r.fail("set must be 'train' or 'test', got '" + f[1] + "'");
    }
  }
  return split;
}

Dataset select_rows(const Dataset& ds, const SplitFile& split,
                    const std::string& set) {
  if (set == "all") return ds;
  if (set == "train") return ds.subset_ids(split.train_ids);
  if (set == "test") return ds.subset_ids(split.test_ids);
  throw ConfigError("--set must be train, test, or all");
}

std::map<std::string, std::string> load_protocols(const fs::path& cells_path) {
  CsvReader r(cells_path);
  r.expect_header(
      {"cell_id", "batch_date", "charging_protocol", "nominal_capacity_ah"});
  std::map<std::string, std::string> protocol;
  std::vector<std::string> f;
  while (r.next_row(f)) {
    if (f.size() != 4) r.fail("expected 4 fields");
    protocol[f[0]] = f[2];
  }
  return protocol;
}

std::vector<CellPrediction> load_predictions_csv(const fs::path& path) {
  CsvReader r(path);
  std::vector<std::string> header;
  if (!r.next_row(header)) r.fail("missing header row");
  if (header.size() < 7 || header[0] != "cell_id") {
    r.fail("not a predictions table");
  }
  std::vector<CellPrediction> preds;
  std::vector<std::string> f;
  while (r.next_row(f)) {
    if (f.size() < 7) r.fail("expected at least 7 fields");
    CellPrediction p;
    p.cell_id = f[0];
    p.mean = r.field_double(f[1], "mean");
    p.median = r.field_double(f[2], "median");
    p.interval.lower = r.field_double(f[3], "lower");
    p.interval.upper = r.field_double(f[4], "upper");
    p.interval_length = r.field_double(f[5], "interval_length");
    p.interval.nominal_coverage = r.field_double(f[6], "nominal_coverage");
    preds.push_back(std::move(p));
  }
  return preds;
}

std::string depth_as_text(int max_depth) {
  return max_depth < 0 ? "unlimited" : std::to_string(max_depth);
}

void write_trials_csv(const fs::path& path,
                      const std::vector<TrialResult>& trials, bool timings) {
  AtomicFile out(path);
  out.write(
      "trial,n_trees,mtry,min_leaf,max_depth,sample_fraction,replacement,"
      "abes_cv,wall_time_s\n");
  for (const TrialResult& t : trials) {
    out.write_row({std::to_string(t.trial_index),
                   std::to_string(t.hp.n_trees), std::to_string(t.hp.mtry),
                   std::to_string(t.hp.min_leaf),
                   depth_as_text(t.hp.max_depth),
                   format_double(t.hp.sample_fraction),
                   t.hp.bootstrap_with_replacement ? "true" : "false",
                   format_double(t.abes_cv),
                   format_double(timings ? t.wall_time_s : 0.0)});
  }
  out.commit();
}

void write_metrics_csv(const fs::path& path,
                       const std::vector<std::pair<std::string, double>>& rows,
                       const std::string& model) {
  AtomicFile out(path);
  out.write(model.empty() ? "metric,value\n" : "metric,value,model\n");
  for (const auto& [name, value] : rows) {
    std::vector<std::string> fields = {name, format_double(value)};
    if (!model.empty()) fields.push_back(model);
    out.write_row(fields);
  }
  out.commit();
}

void write_calibration_csv(const fs::path& path,
                           const CalibrationCurve& curve) {
  AtomicFile out(path);
  out.write("nominal,actual\n");
  for (std::size_t k = 0; k < curve.nominal.size(); ++k) {
    out.write_row(
        {format_double(curve.nominal[k]), format_double(curve.actual[k])});
  }
  out.commit();
}

// ---------------------------------------------------------------------------

int cmd_synth(const CommonOpts& common, const std::string& generator, int n,
              const std::string& curve_cycles) {
  ensure_out_dir(common.out_dir);
  const fs::path out(common.out_dir);

  if (generator == "cells") {
    SynthCellOptions opts;
    opts.n_cells = n;
    opts.seed = common.seed;
    opts.curve_cycles = parse_int_list(curve_cycles);
    const SynthCells synth = gen_synthetic_cells(opts);
    save_cells(synth.cells, out / "cells.csv", out / "cycles.csv",
               out / "curves.csv");
  } else if (generator == "hetero" || generator == "additive") {
    const Dataset ds =
        generator == "hetero"
            ? gen_heteroscedastic(static_cast<std::size_t>(n), common.seed)
                  .data
            : gen_additive(static_cast<std::size_t>(n), common.seed).data;
    save_features_csv(ds, out / "features.csv");
  } else {
    throw ConfigError("--generator must be cells, hetero, or additive");
  }

  write_config(common.out_dir, "synth",
               json{{"generator", generator},
                    {"n", n},
                    {"seed", common.seed},
                    {"curve_cycles", curve_cycles}});
  return 0;
}

int cmd_features(const CommonOpts& common, const std::string& data_dir, int r,
                 int w, double grid_min, double grid_max, int grid_points,
                 bool drop_ir, double eol_fraction) {
  ensure_out_dir(common.out_dir);
  const fs::path in(data_dir);
  const fs::path out(common.out_dir);

  const std::vector<CellRecord> cells =
      load_cells(in / "cells.csv", in / "cycles.csv", in / "curves.csv");
  const LabelReport labels = label_all(cells, eol_fraction);

  FeatureConfig cfg;
  cfg.r = r;
  cfg.w = w;
  cfg.grid = VoltageGrid{grid_min, grid_max, grid_points};
  cfg.drop_ir_features = drop_ir;
  const Dataset ds = build_matrix(labels.labeled, cfg);

  save_features_csv(ds, out / "features.csv");
  {
    AtomicFile censored(out / "censored.csv");
    censored.write("cell_id,reason\n");
    for (const std::string& id : labels.censored_ids) {
      censored.write_row({id, "never reaches the end-of-life threshold"});
    }
    censored.commit();
  }
  for (const std::string& id : labels.censored_ids) {
    std::cerr << "note: cell '" << id << "' is censored and was excluded\n";
  }

  write_config(common.out_dir, "features",
               json{{"data_dir", data_dir},
                    {"r", r},
                    {"w", w},
                    {"grid_min", grid_min},
                    {"grid_max", grid_max},
                    {"grid_points", grid_points},
                    {"drop_ir_features", drop_ir},
                    {"eol_fraction", eol_fraction}});
  return 0;
}

int cmd_split(const CommonOpts& common, const std::string& features_path,
              const std::string& cells_path, const std::string& batch_counts) {
  ensure_out_dir(common.out_dir);
  const Dataset ds = load_features_csv(features_path);

  // Batch membership comes from the cells table; only labeled cells present
  // in the feature table participate.
  std::map<std::string, std::string> batch_of;
  {
    CsvReader r(cells_path);
    r.expect_header(
        {"cell_id", "batch_date", "charging_protocol", "nominal_capacity_ah"});
    std::vector<std::string> f;
    while (r.next_row(f)) batch_of[f[0]] = f[1];
  }
  std::vector<LabeledCell> cells;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto it = batch_of.find(ds.cell_ids[i]);
    if (it == batch_of.end()) {
      throw ConfigError("cell '" + ds.cell_ids[i] +
                        "' in the feature table has no cells.csv row");
    }
    LabeledCell lc;
    lc.cell.cell_id = ds.cell_ids[i];
    lc.cell.batch_date = it->second;
    lc.cycle_life = 1;
    cells.push_back(std::move(lc));
  }

  const DatasetSplit split =
      split_train_test(cells, parse_batch_counts(batch_counts), common.seed);

  AtomicFile out(fs::path(common.out_dir) / "split.csv");
  out.write("cell_id,set\n");
  for (const std::string& id : split.train_ids) out.write_row({id, "train"});
  for (const std::string& id : split.test_ids) out.write_row({id, "test"});
  out.commit();

  write_config(common.out_dir, "split",
               json{{"features", features_path},
                    {"cells", cells_path},
                    {"batch_counts", batch_counts},
                    {"seed", common.seed}});
  return 0;
}

int cmd_tune(const CommonOpts& common, const std::string& features_path,
             const std::string& split_path, int trials, bool timings) {
  ensure_out_dir(common.out_dir);
  const Dataset all = load_features_csv(features_path);
  const SplitFile split = load_split_csv(split_path);
  const Dataset train = select_rows(all, split, "train");

  const SearchSpace space;
  const SearchResult result = random_search(
      train, space, trials, common.seed, default_nominal_grid(),
      common.threads);

  write_trials_csv(fs::path(common.out_dir) / "trials.csv", result.trials,
                   timings);
  save_hyperparameters(result.best, fs::path(common.out_dir) / "best_hp.json");

  write_config(common.out_dir, "tune",
               json{{"features", features_path},
                    {"split", split_path},
                    {"trials", trials},
                    {"seed", common.seed},
                    {"threads", common.threads},
                    {"timings", timings}});
  std::cerr << "best abes_cv " << format_double(result.best_abes) << " after "
            << trials << " trials\n";
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& features_path,
              const std::string& split_path, const std::string& hp_path) {
  ensure_out_dir(common.out_dir);
  const Dataset all = load_features_csv(features_path);
  const SplitFile split = load_split_csv(split_path);
  const Dataset train = select_rows(all, split, "train");

  const Hyperparameters hp = load_hyperparameters(hp_path);
  const Forest forest = refit_final(train, hp, common.threads);
  save_forest(forest, fs::path(common.out_dir) / "model.json");

  write_config(common.out_dir, "train",
               json{{"features", features_path},
                    {"split", split_path},
                    {"hp", hp_path},
                    {"threads", common.threads}});
  return 0;
}

int cmd_predict(const CommonOpts& common, const std::string& features_path,
                const std::string& model_path, const std::string& split_path,
                const std::string& set, double coverage) {
  ensure_out_dir(common.out_dir);
  const Forest forest = load_forest(model_path);
  const Dataset all = load_features_csv(features_path);
  const Dataset rows = split_path.empty()
                           ? all
                           : select_rows(all, load_split_csv(split_path), set);

  const std::vector<CellPrediction> preds =
      predict_cells(forest, rows, coverage);
  save_predictions_csv(preds, fs::path(common.out_dir) / "predictions.csv");

  write_config(common.out_dir, "predict",
               json{{"features", features_path},
                    {"model", model_path},
                    {"split", split_path},
                    {"set", split_path.empty() ? "all" : set},
                    {"coverage", coverage}});
  return 0;
}

int cmd_evaluate(const CommonOpts& common, const std::string& features_path,
                 const std::string& model_path, const std::string& split_path,
                 const std::string& set, double coverage) {
  ensure_out_dir(common.out_dir);
  const Forest forest = load_forest(model_path);
  const Dataset all = load_features_csv(features_path);
  const Dataset rows = select_rows(all, load_split_csv(split_path), set);
  if (rows.n() == 0) throw ConfigError("selected set is empty");

  const std::vector<CellPrediction> preds =
      predict_cells(forest, rows, coverage);
  std::vector<double> mean_pred, lo, hi;
  for (const CellPrediction& p : preds) {
    mean_pred.push_back(p.mean);
    lo.push_back(p.interval.lower);
    hi.push_back(p.interval.upper);
  }

  const MetricReport report = point_metrics(rows.y, mean_pred);
  const CalibrationCurve curve =
      forest_calibration_curve(forest, rows, default_nominal_grid());

  write_metrics_csv(fs::path(common.out_dir) / "metrics.csv",
                    {{"r2", report.r2},
                     {"rmse", report.rmse},
                     {"mape", report.mape},
                     {"picp", picp(rows.y, lo, hi)},
                     {"abes", abes(curve)},
                     {"n", static_cast<double>(report.n)}},
                    "");
  write_calibration_csv(fs::path(common.out_dir) / "calibration.csv", curve);

  write_config(common.out_dir, "evaluate",
               json{{"features", features_path},
                    {"model", model_path},
                    {"split", split_path},
                    {"set", set},
                    {"coverage", coverage}});
  return 0;
}

int cmd_importance(const CommonOpts& common, const std::string& features_path,
                   const std::string& model_path,
                   const std::string& split_path, const std::string& set,
                   int repeats) {
  ensure_out_dir(common.out_dir);
  const Forest forest = load_forest(model_path);
  const Dataset all = load_features_csv(features_path);
  const Dataset rows = split_path.empty()
                           ? all
                           : select_rows(all, load_split_csv(split_path), set);

  const BatchPredictFn predictor = [&forest](const Matrix& x) {
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
      out[i] = predict_mean(forest, x.row(i));
    }
    return out;
  };
  const ImportanceReport report = permutation_importance(
      predictor, rows, ScoreKind::r2, repeats, common.seed);

  AtomicFile out(fs::path(common.out_dir) / "importance.csv");
  out.write("feature,importance,s0,score,M\n");
  for (const ImportanceEntry& e : report.entries) {
    out.write_row({e.feature_name, format_double(e.importance),
                   format_double(report.reference_score), report.score_name,
                   std::to_string(report.repeats)});
  }
  out.commit();

  write_config(common.out_dir, "importance",
               json{{"features", features_path},
                    {"model", model_path},
                    {"split", split_path},
                    {"set", split_path.empty() ? "all" : set},
                    {"repeats", repeats},
                    {"seed", common.seed}});
  return 0;
}

std::vector<double> quantile_grid_for(const Dataset& ds, std::size_t index,
                                      int points) {
  std::vector<double> column(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) column[i] = ds.x.at(i, index);
  std::sort(column.begin(), column.end());
  std::vector<double> grid;
  for (int k = 0; k < points; ++k) {
    const double level =
        points == 1 ? 0.5 : static_cast<double>(k) / (points - 1);
    const double pos = level * static_cast<double>(ds.n() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, ds.n() - 1);
    grid.push_back(column[lo] +
                   (pos - static_cast<double>(lo)) * (column[hi] - column[lo]));
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

int cmd_pdp(const CommonOpts& common, const std::string& features_path,
            const std::string& model_path, const std::string& feature,
            int points) {
  ensure_out_dir(common.out_dir);
  const Forest forest = load_forest(model_path);
  const Dataset ds = load_features_csv(features_path);

  std::size_t index = ds.p();
  for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
    if (ds.feature_names[j] == feature) index = j;
  }
  if (index == ds.p()) {
    try {
      index = static_cast<std::size_t>(std::stoul(feature));
    } catch (const std::exception&) {
      throw ConfigError("unknown feature '" + feature + "'");
    }
  }

  const std::vector<double> grid = quantile_grid_for(ds, index, points);
  const PDPResult result = pdp(forest, ds, index, grid);

  AtomicFile out(fs::path(common.out_dir) / "pdp.csv");
  out.write("feature,grid_value,mean,q075,q50,q925\n");
  for (std::size_t g = 0; g < result.grid.size(); ++g) {
    out.write_row({result.feature_name, format_double(result.grid[g]),
                   format_double(result.mean_curve[g]),
                   format_double(result.quantile_curves[0][g]),
                   format_double(result.quantile_curves[1][g]),
                   format_double(result.quantile_curves[2][g])});
  }
  out.commit();

  AtomicFile hist(fs::path(common.out_dir) / "pdp_hist.csv");
  hist.write("feature,bin_left,bin_right,count\n");
  for (std::size_t b = 0; b < result.histogram.counts.size(); ++b) {
    hist.write_row({result.feature_name,
                    format_double(result.histogram.bin_left[b]),
                    format_double(result.histogram.bin_right[b]),
                    std::to_string(result.histogram.counts[b])});
  }
  hist.commit();

  write_config(common.out_dir, "pdp",
               json{{"features", features_path},
                    {"model", model_path},
                    {"feature", feature},
                    {"points", points}});
  return 0;
}

int cmd_rank_protocols(const CommonOpts& common,
                       const std::string& predictions_path,
                       const std::string& cells_path, double threshold) {
  ensure_out_dir(common.out_dir);
  const std::vector<CellPrediction> preds =
      load_predictions_csv(predictions_path);
  const std::map<std::string, std::string> protocol =
      load_protocols(cells_path);

  const std::vector<ProtocolDecision> ranking =
      rank_protocols(preds, protocol, threshold);

  AtomicFile out(fs::path(common.out_dir) / "protocols.csv");
  out.write("protocol,B,ecl1,ecl2,n_flagged\n");
  for (const ProtocolDecision& d : ranking) {
    out.write_row({d.protocol, std::to_string(d.cell_count),
                   format_double(d.ecl1), format_double(d.ecl2),
                   std::to_string(d.flagged_ids.size())});
  }
  out.commit();

  AtomicFile flags(fs::path(common.out_dir) / "flags.csv");
  flags.write("cell_id,interval_length,threshold\n");
  for (const CellPrediction& p : preds) {
    if (p.interval_length > threshold) {
      flags.write_row({p.cell_id, format_double(p.interval_length),
                       format_double(threshold)});
    }
  }
  flags.commit();

  write_config(common.out_dir, "rank-protocols",
               json{{"predictions", predictions_path},
                    {"cells", cells_path},
                    {"threshold", threshold}});
  return 0;
}

int cmd_sweep(const CommonOpts& common, const std::string& data_dir,
              const std::string& w_list, int r, int trials,
              const std::string& batch_counts, double eol_fraction) {
  ensure_out_dir(common.out_dir);
  const fs::path in(data_dir);
  const std::vector<CellRecord> raw =
      load_cells(in / "cells.csv", in / "cycles.csv", in / "curves.csv");
  const LabelReport labels = label_all(raw, eol_fraction);
  for (const std::string& id : labels.censored_ids) {
    std::cerr << "note: cell '" << id << "' is censored and was excluded\n";
  }

  SweepConfig cfg;
  cfg.split = split_train_test(labels.labeled,
                               parse_batch_counts(batch_counts), common.seed);
  cfg.r = r;
  cfg.n_trials = trials;
  cfg.seed = common.seed;
  cfg.threads = common.threads;

  const std::vector<int> w_values = parse_int_list(w_list);
  const SweepResult result = sweep_early_cycles(labels.labeled, w_values, cfg);
  for (const std::string& note : result.notes) {
    std::cerr << "note: " << note << "\n";
  }

  AtomicFile out(fs::path(common.out_dir) / "sweep.csv");
  out.write("w,model,rmse,mape\n");
  for (const SweepRow& row : result.rows) {
    out.write_row({std::to_string(row.w), row.model, format_double(row.rmse),
                   format_double(row.mape)});
  }
  out.commit();

  write_config(common.out_dir, "sweep",
               json{{"data_dir", data_dir},
                    {"w_list", w_list},
                    {"r", r},
                    {"trials", trials},
                    {"batch_counts", batch_counts},
                    {"seed", common.seed},
                    {"threads", common.threads},
                    {"eol_fraction", eol_fraction}});
  return 0;
}

int cmd_baseline(const CommonOpts& common, const std::string& features_path,
                 const std::string& split_path, int trials, bool timings) {
  ensure_out_dir(common.out_dir);
  const Dataset all = load_features_csv(features_path);
  const SplitFile split = load_split_csv(split_path);
  const Dataset train = select_rows(all, split, "train");
  const Dataset test = select_rows(all, split, "test");
  if (test.n() == 0) throw ConfigError("test set is empty");

  const EnetSearchResult search = tune_elastic_net(train, trials, common.seed);
  const ElasticNetModel model =
      fit_elastic_net(train, search.lambda, search.l1_ratio);
  for (const std::string& name : model.dropped_columns) {
    std::cerr << "note: dropped zero-variance column '" << name << "'\n";
  }
  const std::vector<double> pred = predict(model, test.x);

  {
    AtomicFile out(fs::path(common.out_dir) / "trials.csv");
    out.write("trial,lambda,l1_ratio,rmse_cv,wall_time_s\n");
    for (const EnetTrial& t : search.trials) {
      out.write_row({std::to_string(t.trial_index), format_double(t.lambda),
                     format_double(t.l1_ratio), format_double(t.rmse_cv),
                     format_double(timings ? t.wall_time_s : 0.0)});
    }
    out.commit();
  }

  const MetricReport report = point_metrics(test.y, pred);
  write_metrics_csv(fs::path(common.out_dir) / "metrics.csv",
                    {{"r2", report.r2},
                     {"rmse", report.rmse},
                     {"mape", report.mape},
                     {"n", static_cast<double>(report.n)}},
                    "elastic_net");

  std::vector<CellPrediction> rows;
  for (std::size_t i = 0; i < test.n(); ++i) {
    CellPrediction p;
    p.cell_id = test.cell_ids[i];
    p.mean = pred[i];
    p.median = pred[i];  // point model: no separate median or interval
    p.interval = PredictionInterval{pred[i], pred[i], 0.0};
    p.interval_length = 0.0;
    rows.push_back(std::move(p));
  }
  save_predictions_csv(rows, fs::path(common.out_dir) / "predictions.csv",
                       "elastic_net");

  write_config(common.out_dir, "baseline",
               json{{"features", features_path},
                    {"split", split_path},
                    {"trials", trials},
                    {"seed", common.seed},
                    {"timings", timings}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Quantile regression forest pipeline for battery cycle-life range "
      "prediction"};
  app.require_subcommand(1);

  CommonOpts common;

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string generator = "cells";
  int synth_n = 24;
  std::string curve_cycles = "10,100";
  synth->add_option("--out-dir", common.out_dir)->required();
  synth->add_option("--seed", common.seed);
  synth->add_option("--generator", generator, "cells | hetero | additive");
  synth->add_option("--n", synth_n, "cells or rows to generate");
  synth->add_option("--curve-cycles", curve_cycles,
                    "cycles that carry discharge curves (cells generator)");

  auto* features =
      app.add_subcommand("features", "extract features from raw cell files");
  std::string data_dir;
  int opt_r = 10, opt_w = 100;
  double grid_min = 2.0, grid_max = 3.5;
  int grid_points = 1000;
  bool drop_ir = false;
  double eol_fraction = 0.8;
  features->add_option("--data-dir", data_dir)->required();
  features->add_option("--out-dir", common.out_dir)->required();
  features->add_option("--r", opt_r, "reference cycle");
  features->add_option("--w", opt_w, "early-cycle window");
  features->add_option("--grid-min", grid_min);
  features->add_option("--grid-max", grid_max);
  features->add_option("--grid-points", grid_points);
  features->add_flag("--drop-ir-features", drop_ir);
  features->add_option("--eol-fraction", eol_fraction);

  auto* split = app.add_subcommand("split", "deterministic train/test split");
  std::string features_path, cells_path, batch_counts;
  split->add_option("--features", features_path)->required();
  split->add_option("--cells", cells_path)->required();
  split
      ->add_option("--batch-counts", batch_counts,
                   "BATCH:TRAIN/TEST,... per batch date")
      ->required();
  split->add_option("--seed", common.seed);
  split->add_option("--out-dir", common.out_dir)->required();

  auto* tune = app.add_subcommand("tune", "hyperparameter search");
  std::string split_path;
  int trials = 250;
  bool timings = false;
  tune->add_option("--features", features_path)->required();
  tune->add_option("--split", split_path)->required();
  tune->add_option("--trials", trials);
  tune->add_option("--seed", common.seed);
  tune->add_option("--threads", common.threads);
  tune->add_flag("--timings", timings,
                 "record wall times (breaks byte-reproducibility)");
  tune->add_option("--out-dir", common.out_dir)->required();

  auto* train = app.add_subcommand("train", "refit the final model");
  std::string hp_path;
  train->add_option("--features", features_path)->required();
  train->add_option("--split", split_path)->required();
  train->add_option("--hp", hp_path)->required();
  train->add_option("--threads", common.threads);
  train->add_option("--out-dir", common.out_dir)->required();

  auto* predict_cmd = app.add_subcommand("predict", "range predictions");
  std::string model_path, set_name = "all";
  double coverage = 0.85;
  predict_cmd->add_option("--features", features_path)->required();
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--split", split_path);
  predict_cmd->add_option("--set", set_name, "train | test | all");
  predict_cmd->add_option("--coverage", coverage);
  predict_cmd->add_option("--out-dir", common.out_dir)->required();

  auto* evaluate =
      app.add_subcommand("evaluate", "point metrics and calibration");
  std::string eval_set = "test";
  evaluate->add_option("--features", features_path)->required();
  evaluate->add_option("--model", model_path)->required();
  evaluate->add_option("--split", split_path)->required();
  evaluate->add_option("--set", eval_set);
  evaluate->add_option("--coverage", coverage);
  evaluate->add_option("--out-dir", common.out_dir)->required();

  auto* importance =
      app.add_subcommand("importance", "permutation importance table");
  int repeats = 10;
  std::string imp_set = "train";
  importance->add_option("--features", features_path)->required();
  importance->add_option("--model", model_path)->required();
  importance->add_option("--split", split_path);
  importance->add_option("--set", imp_set);
  importance->add_option("--repeats", repeats);
  importance->add_option("--seed", common.seed);
  importance->add_option("--out-dir", common.out_dir)->required();

  auto* pdp_cmd = app.add_subcommand("pdp", "partial dependence table");
  std::string pdp_feature = "delta_q_var";
  int pdp_points = 50;
  pdp_cmd->add_option("--features", features_path)->required();
  pdp_cmd->add_option("--model", model_path)->required();
  pdp_cmd->add_option("--feature", pdp_feature, "feature name or index");
  pdp_cmd->add_option("--points", pdp_points);
  pdp_cmd->add_option("--out-dir", common.out_dir)->required();

  auto* rank =
      app.add_subcommand("rank-protocols", "expected cycle life per protocol");
  std::string predictions_path;
  double threshold = 350.0;
  rank->add_option("--predictions", predictions_path)->required();
  rank->add_option("--cells", cells_path)->required();
  rank->add_option("--threshold", threshold);
  rank->add_option("--out-dir", common.out_dir)->required();

  auto* sweep = app.add_subcommand("sweep", "early-cycle sensitivity sweep");
  std::string w_list = "25,50,75,100,125,150,175,200,225,250";
  sweep->add_option("--data-dir", data_dir)->required();
  sweep->add_option("--w-list", w_list);
  sweep->add_option("--r", opt_r);
  sweep->add_option("--trials", trials);
  sweep->add_option("--batch-counts", batch_counts)->required();
  sweep->add_option("--eol-fraction", eol_fraction);
  sweep->add_option("--seed", common.seed);
  sweep->add_option("--threads", common.threads);
  sweep->add_option("--out-dir", common.out_dir)->required();

  auto* baseline =
      app.add_subcommand("baseline", "Elastic Net point-prediction baseline");
  baseline->add_option("--features", features_path)->required();
  baseline->add_option("--split", split_path)->required();
  baseline->add_option("--trials", trials);
  baseline->add_option("--seed", common.seed);
  baseline->add_flag("--timings", timings);
  baseline->add_option("--out-dir", common.out_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return cmd_synth(common, generator, synth_n, curve_cycles);
    }
    if (features->parsed()) {
      return cmd_features(common, data_dir, opt_r, opt_w, grid_min, grid_max,
                          grid_points, drop_ir, eol_fraction);
    }
    if (split->parsed()) {
      return cmd_split(common, features_path, cells_path, batch_counts);
    }
    if (tune->parsed()) {
      return cmd_tune(common, features_path, split_path, trials, timings);
    }
    if (train->parsed()) {
      return cmd_train(common, features_path, split_path, hp_path);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(common, features_path, model_path, split_path,
                         set_name, coverage);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(common, features_path, model_path, split_path,
                          eval_set, coverage);
    }
    if (importance->parsed()) {
      return cmd_importance(common, features_path, model_path, split_path,
                            imp_set, repeats);
    }
    if (pdp_cmd->parsed()) {
      return cmd_pdp(common, features_path, model_path, pdp_feature,
                     pdp_points);
    }
    if (rank->parsed()) {
      return cmd_rank_protocols(common, predictions_path, cells_path,
                                threshold);
    }
    if (sweep->parsed()) {
      return cmd_sweep(common, data_dir, w_list, opt_r, trials, batch_counts,
                       eol_fraction);
    }
    if (baseline->parsed()) {
      return cmd_baseline(common, features_path, split_path, trials, timings);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
