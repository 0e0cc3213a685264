#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qrf/quantiles.hpp"

namespace qrf {

struct ProtocolDecision {
  std::string protocol;
  std::size_t cell_count = 0;
  double ecl1 = 0.0;  // plain mean of predicted means
  double ecl2 = 0.0;  // interval-length-weighted mean
  std::vector<CellPrediction> cells;
  std::set<std::string> flagged_ids;
};

// Arithmetic mean of the predicted means.
double ecl_point(std::span<const CellPrediction> preds);

// Weighted mean with weights proportional to 1 / interval length; a
// zero-length interval is an error (the weight would be infinite).
double ecl_weighted(std::span<const CellPrediction> preds);

// Cells whose interval length strictly exceeds the threshold.
std::set<std::string> flag_anomalous(std::span<const CellPrediction> preds,
                                     double threshold = 350.0);

// Groups predictions by charging protocol and ranks descending by ecl2, then
// ecl1; the sort is stable.
std::vector<ProtocolDecision> rank_protocols(
    std::span<const CellPrediction> preds,
    const std::map<std::string, std::string>& protocol_by_cell,
    double flag_threshold = 350.0);

}  // namespace qrf
