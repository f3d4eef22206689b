#include "nevil/report.hpp"

#include <map>

namespace nevil {

std::size_t RunReport::queries() const {
  std::size_t q = 0;
  for (const auto& s : slots) q += s.manual;
  return q;
}

std::vector<SlotCounters> counters_from_decisions(const std::vector<DecisionRecord>& decisions) {
  std::map<std::int64_t, SlotCounters> by_slot;
  for (const auto& d : decisions) {
    auto& c = by_slot[d.slot];
    c.slot = d.slot;
    ++c.total;
    ++c.batches;
    if (d.misclassified()) ++c.misclassified;
    if (d.manual()) ++c.manual;
  }
  std::vector<SlotCounters> out;
  out.reserve(by_slot.size());
  for (auto& [_, c] : by_slot) out.push_back(c);
  return out;
}

double accuracy(const RunReport& report, SlotWindow window) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : report.slots) {
    if (!window.contains(s.slot) || s.total == 0) continue;
    sum += static_cast<double>(s.total - s.misclassified) / static_cast<double>(s.total);
    ++n;
  }
  return n == 0 ? 1.0 : sum / static_cast<double>(n);
}

double annotation_effort(const RunReport& report, SlotWindow window) {
  std::size_t manual = 0, total = 0;
  for (const auto& s : report.slots) {
    if (!window.contains(s.slot)) continue;
    manual += s.manual;
    total += s.batches;
  }
  return total == 0 ? 0.0 : static_cast<double>(manual) / static_cast<double>(total);
}

}  // namespace nevil
