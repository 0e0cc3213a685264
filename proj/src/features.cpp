#include "qrf/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "qrf/csv.hpp"
#include "qrf/errors.hpp"
#include "qrf/kernels.hpp"

namespace qrf {

std::vector<double> VoltageGrid::points() const {
  validate();
  std::vector<double> v(static_cast<std::size_t>(n_points));
  const double h = step();
  for (int i = 0; i < n_points; ++i) v[static_cast<std::size_t>(i)] = v_min + h * i;
  v.back() = v_max;
  return v;
}

void VoltageGrid::validate() const {
  if (!(v_min < v_max) || n_points < 2) {
    throw ConfigError("voltage grid requires v_min < v_max and >= 2 points");
  }
}

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "delta_q_min",        "delta_q_var",       "delta_q_skew",
      "delta_q_kurt",       "dqdv_amp_shift",    "dqdv_pos_shift",
      "delta_t_min",        "delta_t_var",       "delta_t_skew",
      "delta_t_kurt",       "temp_r_min",        "temp_r_max",
      "temp_r_mean",        "temp_r_var",        "temp_w_min",
      "temp_w_max",         "temp_w_mean",       "temp_w_var",
      "temp_diff_min",      "temp_diff_max",     "temp_diff_mean",
      "temp_diff_var",      "fade_slope",        "fade_intercept",
      "q_cycle_2",          "q_cycle_w",         "q_max_minus_q2",
      "charge_time_mean_1_5", "ir_min",          "ir_max",
      "ir_cycle_2",         "ir_cycle_w",        "ir_diff"};
  return names;
}

namespace {
// Indices of the internal-resistance block within the feature vector.
constexpr std::size_t kIrFirst = 28;
constexpr std::size_t kIrLast = 32;
}  // namespace

std::vector<DischargeCurveSample> clean_curve(
    std::span<const DischargeCurveSample> curve) {
  std::vector<DischargeCurveSample> kept;
  kept.reserve(curve.size());
  for (const DischargeCurveSample& s : curve) {
    if (kept.empty() || s.voltage_v < kept.back().voltage_v) {
      kept.push_back(s);
    }
  }
  return kept;
}

std::vector<double> interp_curve(std::span<const DischargeCurveSample> curve,
                                 const VoltageGrid& grid, CurveQuantity q) {
  const std::vector<DischargeCurveSample> cleaned = clean_curve(curve);
  if (cleaned.size() < 2) {
    throw CurveQualityError(
        "discharge curve has fewer than 2 usable samples after cleaning");
  }
  // Cleaned samples are strictly decreasing in voltage; flip to ascending.
  const std::size_t m = cleaned.size();
  std::vector<double> vs(m), ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    const DischargeCurveSample& s = cleaned[m - 1 - i];
    vs[i] = s.voltage_v;
    ys[i] = q == CurveQuantity::capacity ? s.capacity_ah : s.temperature_c;
  }

  const std::vector<double> gv = grid.points();
  std::vector<double> out(gv.size());
  std::size_t seg = 0;  // both grids ascend; march the sample segment along
  for (std::size_t k = 0; k < gv.size(); ++k) {
    const double v = gv[k];
    if (v <= vs.front()) {
      out[k] = ys.front();
      continue;
    }
    if (v >= vs.back()) {
      out[k] = ys.back();
      continue;
    }
    while (vs[seg + 1] < v) ++seg;
    const double t = (v - vs[seg]) / (vs[seg + 1] - vs[seg]);
    out[k] = ys[seg] + t * (ys[seg + 1] - ys[seg]);
  }
  return out;
}

std::vector<double> interp_q_of_v(std::span<const DischargeCurveSample> curve,
                                  const VoltageGrid& grid) {
  return interp_curve(curve, grid, CurveQuantity::capacity);
}

namespace {

const CycleSummary& cycle_with_curve(const CellRecord& cell, int index) {
  const CycleSummary* cyc = cell.find_cycle(index);
  if (cyc == nullptr) {
    throw FeatureError("cell '" + cell.cell_id + "': cycle " +
                       std::to_string(index) + " not present");
  }
  if (cyc->curve.empty()) {
    throw FeatureError("cell '" + cell.cell_id + "': cycle " +
                       std::to_string(index) + " has no discharge curve");
  }
  return *cyc;
}

}  // namespace

std::vector<double> delta_curve(const CellRecord& cell, CurveQuantity q, int r,
                                int w, const VoltageGrid& grid) {
  const CycleSummary& at_r = cycle_with_curve(cell, r);
  const CycleSummary& at_w = cycle_with_curve(cell, w);
  const std::vector<double> ref = interp_curve(at_r.curve, grid, q);
  const std::vector<double> end = interp_curve(at_w.curve, grid, q);
  std::vector<double> out(ref.size());
  kern::subtract(end, ref, out);
  return out;
}

SummaryStats summary_stats(std::span<const double> v) {
  if (v.empty()) throw DomainError("summary_stats: empty vector");
  SummaryStats s;
  s.min = kern::min(v);
  if (s.min == kern::max(v)) return s;  // constant input: (c, 0, 0, 0)
  const kern::CentralMoments m = kern::central_moments(v);
  s.var = m.m2;
  if (m.m2 > 0.0) {
    s.skew = m.m3 / std::pow(m.m2, 1.5);
    s.kurt = m.m4 / (m.m2 * m.m2) - 3.0;
  }
  return s;
}

RangeStats range_stats(std::span<const double> v) {
  if (v.empty()) throw DomainError("range_stats: empty vector");
  const double lo = kern::min(v);
  const double hi = kern::max(v);
  if (lo == hi) return RangeStats{lo, hi, lo, 0.0};
  const kern::CentralMoments m = kern::central_moments(v);
  return RangeStats{lo, hi, m.mean, m.m2};
}

namespace {

// 9-point moving average; values are only used where the window fits, so
// boundary bias never reaches the peak search.
constexpr int kSmoothHalf = 4;

struct Peak {
  double amplitude = 0.0;
  double position = 0.0;
};

// ic[k] corresponds to grid index k + kSmoothHalf + 1.
Peak highest_ic_peak(std::span<const double> ic, const VoltageGrid& grid) {
  double lo = ic[0], hi = ic[0];
  std::size_t arg = 0;
  for (std::size_t k = 1; k < ic.size(); ++k) {
    if (ic[k] > hi) {
      hi = ic[k];
      arg = k;
    }
    lo = ic[k] < lo ? ic[k] : lo;
  }
  if (hi - lo <= 1e-12 * std::max(1.0, std::fabs(hi))) {
    throw PeakDetectionError("incremental capacity curve is flat, no peak");
  }
  return Peak{hi, grid.v_min + grid.step() *
                      static_cast<double>(arg + kSmoothHalf + 1)};
}

}  // namespace

std::vector<double> incremental_capacity(
    std::span<const DischargeCurveSample> curve, const VoltageGrid& grid) {
  const std::vector<double> q = interp_q_of_v(curve, grid);
  const int n = static_cast<int>(q.size());
  if (n < 2 * kSmoothHalf + 3) {
    throw ConfigError("voltage grid too small for the smoothing window");
  }
  // Smoothed values where the 9-point window is complete.
  std::vector<double> qs(q.size(), 0.0);
  for (int i = kSmoothHalf; i <= n - 1 - kSmoothHalf; ++i) {
    double acc = 0.0;
    for (int k = i - kSmoothHalf; k <= i + kSmoothHalf; ++k) {
      acc += q[static_cast<std::size_t>(k)];
    }
    qs[static_cast<std::size_t>(i)] = acc / (2 * kSmoothHalf + 1);
  }
  const double h = grid.step();
  // Central differences over the fully smoothed range; discharge capacity
  // falls with rising voltage, so flip the sign to make the peak a maximum.
  std::vector<double> ic(static_cast<std::size_t>(n - 2 * kSmoothHalf - 2));
  for (int i = kSmoothHalf + 1; i <= n - 2 - kSmoothHalf; ++i) {
    ic[static_cast<std::size_t>(i - kSmoothHalf - 1)] =
        -(qs[static_cast<std::size_t>(i + 1)] -
          qs[static_cast<std::size_t>(i - 1)]) /
        (2.0 * h);
  }
  return ic;
}

PeakShift dqdv_peak_shift(const CellRecord& cell, int r, int w,
                          const VoltageGrid& grid) {
  const CycleSummary& at_r = cycle_with_curve(cell, r);
  const CycleSummary& at_w = cycle_with_curve(cell, w);
  const Peak pr = highest_ic_peak(incremental_capacity(at_r.curve, grid), grid);
  const Peak pw = highest_ic_peak(incremental_capacity(at_w.curve, grid), grid);
  return PeakShift{pw.amplitude - pr.amplitude, pw.position - pr.position};
}

LineFit capacity_fade_fit(const CellRecord& cell, int first, int last) {
  std::vector<double> xs, ys;
  for (int n = first; n <= last; ++n) {
    const CycleSummary* cyc = cell.find_cycle(n);
    if (cyc == nullptr) {
      throw FitError("cell '" + cell.cell_id + "': cycle " + std::to_string(n) +
                     " missing from fade fit range");
    }
    xs.push_back(static_cast<double>(n));
    ys.push_back(cyc->discharge_capacity_ah);
  }
  if (xs.size() < 2) {
    throw FitError("capacity fade fit needs at least 2 cycles");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = kern::sum(xs) / n;
  const double my = kern::sum(ys) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    sxx += dx * dx;
    sxy += dx * (ys[i] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

namespace {

double capacity_at(const CellRecord& cell, int index) {
  const CycleSummary* cyc = cell.find_cycle(index);
  if (cyc == nullptr) {
    throw FeatureError("cell '" + cell.cell_id + "': cycle " +
                       std::to_string(index) + " not present");
  }
  return cyc->discharge_capacity_ah;
}

}  // namespace

FeatureVector extract_all(const LabeledCell& labeled, const FeatureConfig& cfg) {
  const CellRecord& cell = labeled.cell;
  if (cfg.r < 1 || cfg.w < cfg.r) {
    throw ConfigError("feature window requires 1 <= r <= w");
  }
  if (cell.max_cycle_index() < cfg.w) {
    throw FeatureError("cell '" + cell.cell_id + "': needs cycles through " +
                       std::to_string(cfg.w) + ", has " +
                       std::to_string(cell.max_cycle_index()));
  }
  cfg.grid.validate();

  FeatureVector f;

  const std::vector<double> dq =
      delta_curve(cell, CurveQuantity::capacity, cfg.r, cfg.w, cfg.grid);
  const SummaryStats dq_stats = summary_stats(dq);
  f[0] = dq_stats.min;
  f[1] = dq_stats.var;
  f[2] = dq_stats.skew;
  f[3] = dq_stats.kurt;

  const PeakShift peak = dqdv_peak_shift(cell, cfg.r, cfg.w, cfg.grid);
  f[4] = peak.amplitude_shift;
  f[5] = peak.position_shift;

  const std::vector<double> dt =
      delta_curve(cell, CurveQuantity::temperature, cfg.r, cfg.w, cfg.grid);
  const SummaryStats dt_stats = summary_stats(dt);
  f[6] = dt_stats.min;
  f[7] = dt_stats.var;
  f[8] = dt_stats.skew;
  f[9] = dt_stats.kurt;

  const std::vector<double> t_r = interp_curve(
      cycle_with_curve(cell, cfg.r).curve, cfg.grid, CurveQuantity::temperature);
  const std::vector<double> t_w = interp_curve(
      cycle_with_curve(cell, cfg.w).curve, cfg.grid, CurveQuantity::temperature);
  const RangeStats tr = range_stats(t_r);
  const RangeStats tw = range_stats(t_w);
  f[10] = tr.min;
  f[11] = tr.max;
  f[12] = tr.mean;
  f[13] = tr.var;
  f[14] = tw.min;
  f[15] = tw.max;
  f[16] = tw.mean;
  f[17] = tw.var;
  f[18] = tw.min - tr.min;
  f[19] = tw.max - tr.max;
  f[20] = tw.mean - tr.mean;
  f[21] = tw.var - tr.var;

  const LineFit fade = capacity_fade_fit(cell, 2, cfg.w);
  f[22] = fade.slope;
  f[23] = fade.intercept;

  const double q2 = capacity_at(cell, 2);
  f[24] = q2;
  f[25] = capacity_at(cell, cfg.w);
  double q_max = q2;
  for (const CycleSummary& cyc : cell.cycles) {
    if (cyc.cycle_index > cfg.w) break;
    q_max = std::max(q_max, cyc.discharge_capacity_ah);
  }
  f[26] = q_max - q2;

  double ct_sum = 0.0;
  for (int n = 1; n <= 5; ++n) {
    const CycleSummary* cyc = cell.find_cycle(n);
    if (cyc == nullptr) {
      throw FeatureError("cell '" + cell.cell_id + "': cycle " +
                         std::to_string(n) + " needed for charge-time mean");
    }
    ct_sum += cyc->charge_time_min;
  }
  f[27] = ct_sum / 5.0;

  if (cfg.drop_ir_features) {
    for (std::size_t k = kIrFirst; k <= kIrLast; ++k) {
      f[k] = std::numeric_limits<double>::quiet_NaN();
    }
  } else {
    double ir_min = 0.0, ir_max = 0.0;
    bool seen = false;
    for (const CycleSummary& cyc : cell.cycles) {
      if (cyc.cycle_index < 2 || cyc.cycle_index > cfg.w) continue;
      if (!cyc.internal_resistance_ohm) continue;
      const double ir = *cyc.internal_resistance_ohm;
      if (!seen) {
        ir_min = ir_max = ir;
        seen = true;
      } else {
        ir_min = std::min(ir_min, ir);
        ir_max = std::max(ir_max, ir);
      }
    }
    const CycleSummary* c2 = cell.find_cycle(2);
    const CycleSummary* cw = cell.find_cycle(cfg.w);
    if (!seen || c2 == nullptr || !c2->internal_resistance_ohm ||
        cw == nullptr || !cw->internal_resistance_ohm) {
      throw FeatureError("cell '" + cell.cell_id +
                         "': internal resistance missing; rerun with "
                         "--drop-ir-features or supply it");
    }
    f[28] = ir_min;
    f[29] = ir_max;
    f[30] = *c2->internal_resistance_ohm;
    f[31] = *cw->internal_resistance_ohm;
    f[32] = *cw->internal_resistance_ohm - *c2->internal_resistance_ohm;
  }

  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    if (cfg.drop_ir_features && k >= kIrFirst && k <= kIrLast) continue;
    if (!std::isfinite(f[k])) {
      throw FeatureError("cell '" + cell.cell_id + "': feature '" +
                         feature_names()[k] + "' is not finite");
    }
  }
  return f;
}

Dataset build_matrix(const std::vector<LabeledCell>& cells,
                     const FeatureConfig& cfg) {
  std::set<std::string> seen;
  for (const LabeledCell& lc : cells) {
    if (!seen.insert(lc.cell.cell_id).second) {
      throw ConfigError("duplicate cell_id '" + lc.cell.cell_id + "'");
    }
  }

  Dataset ds;
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    if (cfg.drop_ir_features && k >= kIrFirst && k <= kIrLast) continue;
    ds.feature_names.push_back(feature_names()[k]);
  }
  ds.x = Matrix(cells.size(), ds.feature_names.size());

  std::vector<std::string> failures;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    try {
      const FeatureVector f = extract_all(cells[i], cfg);
      std::size_t col = 0;
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        if (cfg.drop_ir_features && k >= kIrFirst && k <= kIrLast) continue;
        ds.x.at(i, col++) = f[k];
      }
      ds.y.push_back(static_cast<double>(cells[i].cycle_life));
      ds.cell_ids.push_back(cells[i].cell.cell_id);
    } catch (const Error& e) {
      failures.emplace_back(e.what());
    }
  }
  if (!failures.empty()) {
    std::string msg = "feature extraction failed for " +
                      std::to_string(failures.size()) + " cell(s):";
    for (const std::string& s : failures) msg += "\n  " + s;
    throw FeatureError(msg);
  }
  return ds;
}

void save_features_csv(const Dataset& ds, const std::filesystem::path& path) {
  AtomicFile out(path);
  std::string header = "cell_id";
  for (const std::string& name : ds.feature_names) header += "," + name;
  header += ",cycle_life\n";
  out.write(header);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    std::vector<std::string> row;
    row.reserve(ds.p() + 2);
    row.push_back(ds.cell_ids[i]);
    for (std::size_t j = 0; j < ds.p(); ++j) {
      row.push_back(format_double(ds.x.at(i, j)));
    }
    row.push_back(format_double(ds.y[i]));
    out.write_row(row);
  }
  out.commit();
}

Dataset load_features_csv(const std::filesystem::path& path) {
  CsvReader r(path);
  std::vector<std::string> header;
  if (!r.next_row(header)) r.fail("missing header row");
  if (header.size() < 3 || header.front() != "cell_id" ||
      header.back() != "cycle_life") {
    r.fail("features table must be cell_id,<features...>,cycle_life");
  }
  Dataset ds;
  ds.feature_names.assign(header.begin() + 1, header.end() - 1);
  const std::size_t p = ds.feature_names.size();

  std::vector<std::vector<double>> rows;
  std::vector<std::string> f;
  while (r.next_row(f)) {
    if (f.size() != header.size()) {
      r.fail("expected " + std::to_string(header.size()) + " fields, got " +
             std::to_string(f.size()));
    }
    ds.cell_ids.push_back(f[0]);
    std::vector<double> vals(p);
    for (std::size_t j = 0; j < p; ++j) {
      vals[j] = r.field_double(f[j + 1], ds.feature_names[j].c_str());
    }
    rows.push_back(std::move(vals));
    ds.y.push_back(r.field_double(f.back(), "cycle_life"));
  }
  ds.x = Matrix(rows.size(), p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), ds.x.row(i).data());
  }
  return ds;
}

}  // namespace qrf
