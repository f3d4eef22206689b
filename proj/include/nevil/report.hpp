#ifndef NEVIL_REPORT_HPP_
#define NEVIL_REPORT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nevil/common.hpp"

namespace nevil {

// One line of the decision log.
struct DecisionRecord {
  std::int64_t slot = 0;
  std::string stream_id;
  std::size_t frames = 0;
  std::optional<std::string> predicted;
  double confidence = 0.0;
  bool accepted = false;
  bool cold_start = false;
  bool novel = false;
  std::string final_label;
  std::optional<std::string> truth;

  bool manual() const { return !accepted; }
  // Manually labeled batches are correct by construction.
  bool misclassified() const { return accepted && truth && predicted != truth; }

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

struct SlotCounters {
  std::int64_t slot = 0;
  std::size_t total = 0;         // N
  std::size_t misclassified = 0; // MC
  std::size_t manual = 0;        // MLB
  std::size_t batches = 0;       // TB

  friend bool operator==(const SlotCounters&, const SlotCounters&) = default;
};

struct RunReport {
  std::string method = "nevil";
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<SlotCounters> slots;
  std::vector<DecisionRecord> decisions;
  std::vector<std::string> registry;

  std::size_t queries() const;
};

// Per-slot counters rebuilt from a decision log; slots without batches are
// omitted.
std::vector<SlotCounters> counters_from_decisions(const std::vector<DecisionRecord>& decisions);

// Inclusive slot window; default covers everything.
struct SlotWindow {
  std::int64_t first = 0;
  std::int64_t last = INT64_MAX;
  bool contains(std::int64_t t) const { return t >= first && t <= last; }
};

// Unweighted mean over slots of (N - MC) / N. 1.0 for an empty window.
double accuracy(const RunReport& report, SlotWindow window = {});
// MLB / TB over the window. 0.0 for an empty window.
double annotation_effort(const RunReport& report, SlotWindow window = {});

}  // namespace nevil

#endif  // NEVIL_REPORT_HPP_
