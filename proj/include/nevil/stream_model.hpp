#ifndef NEVIL_STREAM_MODEL_HPP_
#define NEVIL_STREAM_MODEL_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nevil/common.hpp"

namespace nevil {

// One observation of one stream at one tick of the shared frame clock.
struct Frame {
  std::string stream_id;
  std::int64_t global_index = 0;
  // Filled in by assemble_batches.
  std::int64_t slot_index = 0;
  int intra_index = 0;
  std::vector<double> features;
  // Only read by the simulated oracle and by evaluation.
  std::optional<std::string> true_label;
};

struct Batch {
  std::string stream_id;
  std::int64_t slot_index = 0;
  std::vector<Frame> frames;

  std::size_t size() const { return frames.size(); }
  // Global-clock extent [first, last] of the frames in this batch.
  std::int64_t first_global() const { return frames.front().global_index; }
  std::int64_t last_global() const { return frames.back().global_index; }
};

// All batches of one time slot, ordered by stream id.
struct TimeSlotView {
  std::int64_t slot_index = 0;
  std::vector<Batch> batches;

  bool empty() const { return batches.empty(); }
};

struct Dataset {
  std::size_t dim = 0;
  int batch_size = 0;
  std::vector<TimeSlotView> slots;

  std::int64_t horizon() const { return static_cast<std::int64_t>(slots.size()); }
  std::size_t batch_count() const;
  bool empty() const { return batch_count() == 0; }
};

// Names <-> dense ids in order of first appearance. Only ever grows.
class ClassRegistry {
 public:
  ClassRegistry() = default;
  explicit ClassRegistry(std::vector<std::string> names);

  ClassId intern(const std::string& name);
  std::optional<ClassId> find(const std::string& name) const;
  const std::string& name(ClassId id) const { return names_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

  friend bool operator==(const ClassRegistry& a, const ClassRegistry& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, ClassId> ids_;
};

// Cuts every stream into runs of B frames aligned to the global clock: slot t
// covers global frames [tB, (t+1)B). A head or tail fragment shorter than
// ceil(B/2) frames is merged into its neighbouring batch of the same stream;
// a stream with gaps is handled per contiguous run of slots.
Dataset assemble_batches(std::span<const Frame> frames, int batch_size);

// Batches of slot t; an empty view when t is outside the horizon.
TimeSlotView time_slot_view(const Dataset& dataset, std::int64_t t);

// Majority ground-truth label of a batch. Ties go to the label registered
// first in `registry`, then to the lexicographically smallest name.
std::optional<std::string> majority_label(const Batch& batch, const ClassRegistry* registry = nullptr);

// Every frame of every batch, in (stream, global index) order.
std::vector<Frame> flatten(const Dataset& dataset);

}  // namespace nevil

#endif  // NEVIL_STREAM_MODEL_HPP_
