#include "qrf/decision.hpp"

#include <algorithm>

#include "qrf/errors.hpp"

namespace qrf {

double ecl_point(std::span<const CellPrediction> preds) {
  if (preds.empty()) throw DomainError("expected cycle life of an empty group");
  double acc = 0.0;
  for (const CellPrediction& p : preds) acc += p.mean;
  return acc / static_cast<double>(preds.size());
}

double ecl_weighted(std::span<const CellPrediction> preds) {
  if (preds.empty()) throw DomainError("expected cycle life of an empty group");
  double inv_sum = 0.0;
  for (const CellPrediction& p : preds) {
    if (!(p.interval_length > 0.0)) {
      throw DomainError("cell '" + p.cell_id +
                        "' has a zero-length prediction interval; "
                        "interval-weighted expected cycle life is undefined");
    }
    inv_sum += 1.0 / p.interval_length;
  }
  double acc = 0.0;
  for (const CellPrediction& p : preds) {
    acc += (1.0 / p.interval_length) / inv_sum * p.mean;
  }
  return acc;
}

std::set<std::string> flag_anomalous(std::span<const CellPrediction> preds,
                                     double threshold) {
  if (!(threshold > 0.0)) throw DomainError("flag threshold must be > 0");
  std::set<std::string> flagged;
  for (const CellPrediction& p : preds) {
    if (p.interval_length > threshold) flagged.insert(p.cell_id);
  }
  return flagged;
}

std::vector<ProtocolDecision> rank_protocols(
    std::span<const CellPrediction> preds,
    const std::map<std::string, std::string>& protocol_by_cell,
    double flag_threshold) {
  if (preds.empty()) throw DomainError("no predictions to rank");

  std::map<std::string, std::vector<CellPrediction>> groups;
  for (const CellPrediction& p : preds) {
    const auto it = protocol_by_cell.find(p.cell_id);
    if (it == protocol_by_cell.end()) {
      throw DomainError("cell '" + p.cell_id + "' has no charging protocol");
    }
    groups[it->second].push_back(p);
  }

  std::vector<ProtocolDecision> out;
  for (const auto& [protocol, cells] : groups) {
    ProtocolDecision d;
    d.protocol = protocol;
    d.cell_count = cells.size();
    d.cells = cells;
    d.ecl1 = ecl_point(cells);
    d.ecl2 = ecl_weighted(cells);
    d.flagged_ids = flag_anomalous(cells, flag_threshold);
    out.push_back(std::move(d));
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const ProtocolDecision& a, const ProtocolDecision& b) {
                     if (a.ecl2 != b.ecl2) return a.ecl2 > b.ecl2;
                     return a.ecl1 > b.ecl1;
                   });
  return out;
}

}  // namespace qrf
