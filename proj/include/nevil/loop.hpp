#ifndef NEVIL_LOOP_HPP_
#define NEVIL_LOOP_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nevil/classifiers.hpp"
#include "nevil/ensemble.hpp"
#include "nevil/inference.hpp"
#include "nevil/report.hpp"
#include "nevil/stream_model.hpp"

namespace nevil {

struct QueryContext {
  std::int64_t slot = 0;
  const ClassRegistry* registry = nullptr;
  // Up to three (label, probability) pairs from the fused posterior, best first.
  std::vector<std::pair<std::string, double>> candidates;
};

// The labeling authority. Answers are final; a name the registry has not
// seen yet introduces a new class. Implementations signal failure by
// throwing OracleFailure.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::string label(const Batch& batch, const QueryContext& context) = 0;
};

struct RunConfig {
  int batch_size = 250;
  FusionConfig fusion;
  ClassifierKind classifier = ClassifierKind::gaussian_nb;
  GmmOptions gmm;
  LogisticOptions logistic;
  OneClassOptions one_class;
  double decay_base = 2.0;
  std::uint64_t seed = 0;
  // Number of slots to process; negative means the whole dataset.
  std::int64_t horizon = -1;

  void validate() const;
};

// Everything carried from one slot to the next.
struct LearnerState {
  CompositeModel model;
  // Labeled frames of the last slot that had at least two labels; used to
  // pad unary slots for logistic regression.
  std::optional<LabeledFrameSet> multiclass_buffer;
};

struct SlotOutcome {
  LearnerState next;
  std::vector<BatchDecision> decisions;
  std::vector<DecisionRecord> records;
};

class SlotError : public Error {
 public:
  SlotError(std::int64_t slot, const std::string& what)
      : Error("slot " + std::to_string(slot) + ": " + what), slot_(slot) {}
  std::int64_t slot() const { return slot_; }

 private:
  std::int64_t slot_;
};

// Trains the member for one slot: the configured multiclass learner when the
// data carries two or more labels, otherwise the unary fallback (logistic
// regression pads with `multiclass_buffer` when available, every other kind
// falls back to a one-class member).
EnsembleMember train_slot_member(const LabeledFrameSet& data, const RunConfig& config, std::int64_t slot,
                                 const LabeledFrameSet* multiclass_buffer);

// Decides every batch of the slot in stream-id order, queries the oracle for
// the rejected ones, trains the slot member on the final labels and appends it.
// Throws (leaving `prev` untouched) when the oracle fails.
SlotOutcome run_time_slot(const LearnerState& prev, const TimeSlotView& slot, Oracle& oracle, const RunConfig& config);

using SlotObserver = std::function<void(const TimeSlotView&, const SlotOutcome&)>;

RunReport run(const Dataset& dataset, Oracle& oracle, const RunConfig& config, const SlotObserver& observer = {});

// Snapshot of the configuration embedded in every report.
nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

}  // namespace nevil

#endif  // NEVIL_LOOP_HPP_
