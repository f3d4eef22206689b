#ifndef NEVIL_BASELINES_HPP_
#define NEVIL_BASELINES_HPP_

#include <cstdint>
#include <vector>

#include "nevil/loop.hpp"

namespace nevil {

// Bookkeeping exposed for tests, filled per processed slot.
struct BaselineTrace {
  std::vector<std::int64_t> slots;
  // even/odd: frames in the training buffer after the slot's odd batches.
  std::vector<std::size_t> buffer_frames;
  std::vector<std::size_t> buffer_batches;
  // unwise: members in the model that decided the slot (0 while annotating).
  std::vector<std::size_t> ensemble_size;
};

// The first ceil(n/2) batches in (slot, stream id) order are labeled from
// ground truth, one model is trained on them and the rest are classified by
// the product rule. Requires ground truth on every batch.
RunReport passive_learning(const Dataset& dataset, const RunConfig& config);

// Odd batches of every stream (1-based) feed a growing buffer; each slot the
// model is retrained on the whole buffer and classifies the slot's even
// batches.
RunReport even_odd_learning(const Dataset& dataset, const RunConfig& config, BaselineTrace* trace = nullptr);

struct UnwiseConfig {
  // Slots [0, t_int) are annotated in full; negative means 20% of the horizon.
  std::int64_t t_int = -1;
};

std::int64_t resolve_t_int(const UnwiseConfig& config, std::int64_t horizon);

// One model trained on everything before t_int, then confidence-gated
// querying against that fixed model.
RunReport unwise_active(const Dataset& dataset, Oracle& oracle, const RunConfig& config, const UnwiseConfig& unwise,
                        BaselineTrace* trace = nullptr);

}  // namespace nevil

#endif  // NEVIL_BASELINES_HPP_
