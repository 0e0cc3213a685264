#include "qrf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "qrf/errors.hpp"
#include "qrf/features.hpp"
#include "qrf/mathutil.hpp"
#include "qrf/rng.hpp"

namespace qrf {

namespace {

constexpr std::size_t kHeteroNoise = 8;

double hetero_scale(double x2) { return 50.0 + 200.0 * x2; }

}  // namespace

double HeteroscedasticData::true_quantile(std::span<const double> x,
                                          double alpha) const {
  const double z = normal_quantile(alpha);
  const double noise_q =
      noise == NoiseKind::lognormal ? std::exp(0.5 * z) : z;
  return 1000.0 * x[0] + hetero_scale(x[1]) * noise_q;
}

double HeteroscedasticData::true_quantile(std::size_t row, double alpha) const {
  return true_quantile(data.x.row(row), alpha);
}

HeteroscedasticData gen_heteroscedastic(std::size_t n, std::uint64_t seed,
                                        NoiseKind noise) {
  if (n < 1) throw ConfigError("generator needs n >= 1");
  HeteroscedasticData out;
  out.noise = noise;
  out.data.feature_names = {"x1", "x2"};
  for (std::size_t k = 1; k <= kHeteroNoise; ++k) {
    out.data.feature_names.push_back("noise" + std::to_string(k));
  }
  out.data.x = Matrix(n, out.data.feature_names.size());
  out.data.y.resize(n);
  out.data.cell_ids.resize(n);

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < out.data.p(); ++j) {
      out.data.x.at(i, j) = rng.uniform();
    }
    const double eps = rng.normal();
    const double noise_term =
        noise == NoiseKind::lognormal ? std::exp(0.5 * eps) : eps;
    out.data.y[i] = 1000.0 * out.data.x.at(i, 0) +
                    hetero_scale(out.data.x.at(i, 1)) * noise_term;
    out.data.cell_ids[i] = "synth-" + std::to_string(i + 1);
  }
  return out;
}

double AdditiveData::g1(double u) {
  return 800.0 / (1.0 + std::exp(-8.0 * (u - 0.5)));
}

double AdditiveData::g2(double u) { return 150.0 * std::sin(2.0 * M_PI * u); }

AdditiveData gen_additive(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("generator needs n >= 1");
  AdditiveData out;
  out.data.feature_names = {"x1", "x2", "noise1", "noise2", "noise3"};
  out.data.x = Matrix(n, out.data.feature_names.size());
  out.data.y.resize(n);
  out.data.cell_ids.resize(n);

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < out.data.p(); ++j) {
      out.data.x.at(i, j) = rng.uniform();
    }
    out.data.y[i] = AdditiveData::g1(out.data.x.at(i, 0)) +
                    AdditiveData::g2(out.data.x.at(i, 1)) + 30.0 * rng.normal();
    out.data.cell_ids[i] = "synth-" + std::to_string(i + 1);
  }
  return out;
}

namespace {

// Discharge-curve family for the synthetic cells. Per cycle n the capacity
// as a function of voltage is
//   Q_n(V) = q_total(n) - c_n * Phi((V - mu_n)/sigma) - tail * (V - v_min)
// so the incremental capacity -dQ/dV is a Gaussian bump of height
// c_n/(sigma*sqrt(2*pi)) centered at mu_n on a flat tail. Drift moves the
// bump and shrinks it; every grid feature is a closed-form expression in the
// drift schedule.
struct CellParams {
  double drift = 0.0;
  double q0 = 1.08;            // capacity at cycle 1
  double fade_slope = 0.0;     // exact linear fade
  double sigma = 0.07;
  double mu_base = 2.8;
  double c_base = 0.9;
  double tail = 0.02;
  double t_base = 30.0;        // cell-to-cell manufacturing spread
  double amp_rate = 0.0;       // relative bump shrink per unit drift schedule
  double pos_rate = 0.0;       // bump center shift (V) per unit drift schedule
  double temp_rate = 0.0;      // temperature rise per unit drift schedule
  int signal_onset = 0;
  int feature_w = 100;

  // Drift schedule in [0, 1] over the feature window.
  double schedule(int cycle) const {
    const double start = static_cast<double>(signal_onset);
    const double num = static_cast<double>(cycle) - start;
    const double den = static_cast<double>(feature_w) - start;
    return std::max(0.0, num) / den;
  }

  double q_total(int cycle) const { return q0 + fade_slope * (cycle - 1); }
  double mu(int cycle) const { return mu_base - pos_rate * schedule(cycle); }
  double c(int cycle) const {
    return c_base * (1.0 - amp_rate * schedule(cycle));
  }
  double peak_amp(int cycle) const {
    return c(cycle) / (sigma * std::sqrt(2.0 * M_PI)) +
           tail;
  }

  // The curve family's level stays fixed across cycles so the delta curve is
  // purely drift-driven; the per-cycle fade lives in the cycle summaries.
  double q_at(int cycle, double v) const {
    return q0 - c(cycle) * normal_cdf((v - mu(cycle)) / sigma) -
           tail * (v - 2.0);
  }

  double temp_at(int cycle, double v) const {
    const double tau = (v - 2.0) / 1.5;
    return 30.0 + 2.0 * tau + temp_rate * schedule(cycle) * tau;
  }

  double charge_time(int cycle) const {
    return 12.0 + 0.1 * drift - 0.05 * static_cast<double>(cycle);
  }

  double internal_resistance(int cycle) const {
    return 0.016 + 1e-5 * drift * static_cast<double>(cycle - 1);
  }
};

const char* kBatches[3] = {"2017-05-12", "2017-06-30", "2018-04-12"};
const char* kProtocols[4] = {"5.4C(70%)-3C", "6C(40%)-3C", "4.8C(80%)-4C",
                             "3.6C(80%)-3.6C"};

}  // namespace

SynthCells gen_synthetic_cells(const SynthCellOptions& opts) {
  if (opts.n_cells < 1) throw ConfigError("generator needs n_cells >= 1");
  if (opts.curve_cycles.empty()) {
    throw ConfigError("generator needs at least one curve cycle");
  }
  const VoltageGrid grid;  // default grid; truth evaluated on its points
  const std::vector<double> gv = grid.points();

  SynthCells out;
  Rng rng(opts.seed);
  const double eol_threshold = 0.8 * 1.1;

  for (int c = 0; c < opts.n_cells; ++c) {
    CellParams params;
    params.drift = opts.drift_min +
                   (opts.drift_max - opts.drift_min) * rng.uniform();
    params.signal_onset = opts.signal_onset;
    params.feature_w = opts.truth_w;
    params.amp_rate = 0.12 * params.drift;
    params.pos_rate = 0.04 * params.drift;
    params.temp_rate = 0.8 * params.drift;

    // Cycle life decreases in the drift parameter; jitter stays small enough
    // to preserve the ordering in expectation.
    const double jitter = rng.uniform(-1.0, 1.0);
    const double effective = params.drift * (1.0 + 0.03 * jitter);
    const int life = std::max(
        static_cast<int>(std::lround(1500.0 - 600.0 * effective)), 5);

    if (opts.signal_onset > 0) {
      // Uninformative fade: identical across cells, never crossing within the
      // emitted range. Labels come from the drift parameter alone.
      params.fade_slope = -5e-5;
    } else {
      // Exact linear fade crossing 80% of nominal exactly at `life`.
      params.fade_slope = (eol_threshold - params.q0) /
                          (static_cast<double>(life) - 1.5);
    }

    CellRecord cell;
    cell.cell_id = "synth-" + std::to_string(c + 1);
    cell.batch_date = kBatches[c % 3];
    cell.charging_protocol = kProtocols[c % 4];
    cell.nominal_capacity_ah = 1.1;

    const int max_curve_cycle =
        *std::max_element(opts.curve_cycles.begin(), opts.curve_cycles.end());
    const int n_cycles = std::max(life + 5, max_curve_cycle + 5);
    cell.cycles.reserve(static_cast<std::size_t>(n_cycles));
    for (int n = 1; n <= n_cycles; ++n) {
      CycleSummary cyc;
      cyc.cycle_index = n;
      cyc.discharge_capacity_ah = params.q_total(n);
      cyc.charge_time_min = params.charge_time(n);
      cyc.internal_resistance_ohm = params.internal_resistance(n);
      if (std::find(opts.curve_cycles.begin(), opts.curve_cycles.end(), n) !=
          opts.curve_cycles.end()) {
        cyc.curve.reserve(gv.size());
        for (std::size_t k = gv.size(); k-- > 0;) {  // decreasing voltage
          DischargeCurveSample s;
          s.voltage_v = gv[k];
          s.capacity_ah = params.q_at(n, gv[k]);
          s.temperature_c = params.temp_at(n, gv[k]);
          cyc.curve.push_back(s);
        }
      }
      cell.cycles.push_back(std::move(cyc));
    }

    SynthCellTruth truth;
    truth.cell_id = cell.cell_id;
    truth.drift = params.drift;
    truth.cycle_life = life;
    truth.fade_slope = params.fade_slope;
    truth.fade_intercept = params.q0 - params.fade_slope;
    const int r = opts.truth_r;
    const int w = opts.truth_w;
    {
      // Plain loops, independent of the feature path's kernels.
      std::vector<double> dq(gv.size()), dt(gv.size());
      for (std::size_t k = 0; k < gv.size(); ++k) {
        dq[k] = params.q_at(w, gv[k]) - params.q_at(r, gv[k]);
        dt[k] = params.temp_at(w, gv[k]) - params.temp_at(r, gv[k]);
      }
      const auto min_var = [](const std::vector<double>& v) {
        double mn = v[0], mean = 0.0;
        for (double x : v) {
          mn = std::min(mn, x);
          mean += x;
        }
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        return std::pair<double, double>{mn, var};
      };
      std::tie(truth.dq_min, truth.dq_var) = min_var(dq);
      std::tie(truth.dt_min, truth.dt_var) = min_var(dt);
    }
    truth.peak_amp_shift = params.peak_amp(w) - params.peak_amp(r);
    truth.peak_pos_shift = params.mu(w) - params.mu(r);
    truth.q_cycle_2 = params.q_total(2);
    truth.q_cycle_w = params.q_total(w);
    double ct = 0.0;
    for (int n = 1; n <= 5; ++n) ct += params.charge_time(n);
    truth.charge_time_mean_1_5 = ct / 5.0;

    out.cells.push_back(std::move(cell));
    out.truth.push_back(std::move(truth));
  }
  return out;
}

std::vector<double> brute_force_weights(const Forest& forest,
                                        std::span<const double> x) {
  const std::size_t n = forest.n_train();
  std::vector<double> averaged(n, 0.0);
  for (const RegressionTree& tree : forest.trees) {
    // Walk the node array directly; no shared traversal helper.
    std::size_t node = 0;
    while (tree.nodes[node].feature >= 0) {
      const TreeNode& t = tree.nodes[node];
      if (x[static_cast<std::size_t>(t.feature)] <= t.threshold) {
        node = static_cast<std::size_t>(t.left);
      } else {
        node = static_cast<std::size_t>(t.right);
      }
    }
    const TreeNode& leaf = tree.nodes[node];
    std::vector<double> counts(n, 0.0);
    for (std::uint32_t k = leaf.items_begin; k < leaf.items_end; ++k) {
      counts[tree.items[k]] += 1.0;
    }
    const double leaf_size =
        static_cast<double>(leaf.items_end - leaf.items_begin);
    for (std::size_t i = 0; i < n; ++i) {
      averaged[i] += counts[i] / leaf_size;
    }
  }
  const double inv_k = 1.0 / static_cast<double>(forest.trees.size());
  for (std::size_t i = 0; i < n; ++i) averaged[i] *= inv_k;
  return averaged;
}

}  // namespace qrf
