#include <cmath>

#include "doctest.h"
#include "qrf/data_ingest.hpp"
#include "qrf/mathutil.hpp"
#include "qrf/synth.hpp"

using namespace qrf;

TEST_CASE("normal quantile and cdf agree") {
  for (double p : {0.001, 0.075, 0.25, 0.5, 0.925, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-12));
}

TEST_CASE("heteroscedastic generator") {
  const HeteroscedasticData gen = gen_heteroscedastic(5000, 12345);

  SUBCASE("true median is the linear trend") {
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK(gen.true_quantile(i, 0.5) ==
            doctest::Approx(1000.0 * gen.data.x.at(i, 0)).epsilon(1e-12));
    }
  }

  SUBCASE("central interval length follows the scale term") {
    const double z90 = normal_quantile(0.9);
    for (std::size_t i = 0; i < 50; ++i) {
      const double len =
          gen.true_quantile(i, 0.9) - gen.true_quantile(i, 0.1);
      const double expected =
          2.0 * z90 * (50.0 + 200.0 * gen.data.x.at(i, 1));
      CHECK(len == doctest::Approx(expected).epsilon(1e-10));
    }
  }

  SUBCASE("empirical coverage of true 80% intervals") {
    std::size_t covered = 0;
    for (std::size_t i = 0; i < gen.data.n(); ++i) {
      const double lo = gen.true_quantile(i, 0.1);
      const double hi = gen.true_quantile(i, 0.9);
      covered += lo <= gen.data.y[i] && gen.data.y[i] <= hi;
    }
    const double rate = static_cast<double>(covered) /
                        static_cast<double>(gen.data.n());
    CHECK(std::fabs(rate - 0.8) <= 0.02);
  }

  SUBCASE("byte-reproducible under the same seed") {
    const HeteroscedasticData again = gen_heteroscedastic(5000, 12345);
    CHECK(again.data.x.values == gen.data.x.values);
    CHECK(again.data.y == gen.data.y);
  }

  SUBCASE("lognormal variant is asymmetric around the median") {
    const HeteroscedasticData log_gen =
        gen_heteroscedastic(10, 5, NoiseKind::lognormal);
    const double up = log_gen.true_quantile(std::size_t{0}, 0.9) -
                      log_gen.true_quantile(std::size_t{0}, 0.5);
    const double down = log_gen.true_quantile(std::size_t{0}, 0.5) -
                        log_gen.true_quantile(std::size_t{0}, 0.1);
    CHECK(up > down);
  }
}

TEST_CASE("synthetic cells") {
  SUBCASE("zero drift zeroes the delta features") {
    SynthCellOptions opts;
    opts.n_cells = 2;
    opts.seed = 9;
    opts.drift_min = 0.0;
    opts.drift_max = 0.0;
    const SynthCells synth = gen_synthetic_cells(opts);
    for (const SynthCellTruth& t : synth.truth) {
      CHECK(t.dq_min == 0.0);
      CHECK(t.dq_var == 0.0);
      CHECK(t.dt_min == 0.0);
      CHECK(t.peak_amp_shift == 0.0);
      CHECK(t.peak_pos_shift == 0.0);
    }
  }

  SUBCASE("assigned life decreases in the drift parameter") {
    SynthCellOptions opts;
    opts.n_cells = 40;
    opts.seed = 11;
    const SynthCells synth = gen_synthetic_cells(opts);
    for (std::size_t a = 0; a < synth.truth.size(); ++a) {
      for (std::size_t b = 0; b < synth.truth.size(); ++b) {
        if (synth.truth[a].drift < synth.truth[b].drift - 0.15) {
          CHECK(synth.truth[a].cycle_life >= synth.truth[b].cycle_life);
        }
      }
    }
    // And larger drift means larger injected delta-curve variance.
    for (std::size_t a = 0; a < synth.truth.size(); ++a) {
      for (std::size_t b = 0; b < synth.truth.size(); ++b) {
        if (synth.truth[a].drift < synth.truth[b].drift) {
          CHECK(synth.truth[a].dq_var <= synth.truth[b].dq_var);
        }
      }
    }
  }

  SUBCASE("labeling the generated fade recovers the assigned life") {
    SynthCellOptions opts;
    opts.n_cells = 10;
    opts.seed = 77;
    const SynthCells synth = gen_synthetic_cells(opts);
    for (std::size_t c = 0; c < synth.cells.size(); ++c) {
      const LabeledCell labeled = label_cycle_life(synth.cells[c], 0.8);
      CHECK(labeled.cycle_life == synth.truth[c].cycle_life);
    }
  }

  SUBCASE("generator is reproducible and writes loadable files") {
    SynthCellOptions opts;
    opts.n_cells = 3;
    opts.seed = 21;
    const SynthCells a = gen_synthetic_cells(opts);
    const SynthCells b = gen_synthetic_cells(opts);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t c = 0; c < a.cells.size(); ++c) {
      CHECK(a.truth[c].cycle_life == b.truth[c].cycle_life);
      CHECK(a.truth[c].drift == b.truth[c].drift);
      CHECK(a.cells[c].cycles.size() == b.cells[c].cycles.size());
    }

    const auto dir = std::filesystem::temp_directory_path() / "qrf_synth_cells";
    std::filesystem::create_directories(dir);
    save_cells(a.cells, dir / "cells.csv", dir / "cycles.csv",
               dir / "curves.csv");
    const std::vector<CellRecord> loaded =
        load_cells(dir / "cells.csv", dir / "cycles.csv", dir / "curves.csv");
    REQUIRE(loaded.size() == a.cells.size());
    for (std::size_t c = 0; c < loaded.size(); ++c) {
      CHECK(loaded[c].cycles.size() == a.cells[c].cycles.size());
      CHECK(loaded[c].batch_date == a.cells[c].batch_date);
    }
  }
}
