#include "nevil/stream_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nevil {

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -INFINITY;
  double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::size_t Dataset::batch_count() const {
  std::size_t n = 0;
  for (const auto& s : slots) n += s.batches.size();
  return n;
}

ClassRegistry::ClassRegistry(std::vector<std::string> names) {
  for (const auto& n : names) intern(n);
}

ClassId ClassRegistry::intern(const std::string& name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  ClassId id = static_cast<ClassId>(names_.size());
  names_.push_back(name);
  ids_.emplace(name, id);
  return id;
}

std::optional<ClassId> ClassRegistry::find(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

namespace {

struct SlotGroup {
  std::int64_t slot;
  std::vector<Frame> frames;
};

// Applies the head/tail merge rule to one contiguous run of slot groups.
void merge_fragments(std::vector<SlotGroup>& run, std::size_t min_frames) {
  if (run.size() > 1 && run.front().frames.size() < min_frames) {
    auto& next = run[1].frames;
    next.insert(next.begin(), std::make_move_iterator(run.front().frames.begin()),
                std::make_move_iterator(run.front().frames.end()));
    run.erase(run.begin());
  }
  if (run.size() > 1 && run.back().frames.size() < min_frames) {
    auto& prev = run[run.size() - 2].frames;
    prev.insert(prev.end(), std::make_move_iterator(run.back().frames.begin()),
                std::make_move_iterator(run.back().frames.end()));
    run.pop_back();
  }
}

}  // namespace

Dataset assemble_batches(std::span<const Frame> frames, int batch_size) {
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  Dataset ds;
  ds.batch_size = batch_size;
  if (frames.empty()) return ds;

  ds.dim = frames.front().features.size();
  std::map<std::string, std::vector<const Frame*>> by_stream;
  for (const auto& f : frames) {
    if (f.features.size() != ds.dim) {
      throw DimensionMismatch("frame of stream '" + f.stream_id + "' at global index " +
                              std::to_string(f.global_index) + " has dimension " +
                              std::to_string(f.features.size()) + ", expected " + std::to_string(ds.dim));
    }
    if (f.global_index < 0) throw InvalidArgument("negative global frame index");
    auto& v = by_stream[f.stream_id];
    if (!v.empty() && v.back()->global_index >= f.global_index) {
      throw InvalidArgument("frames of stream '" + f.stream_id + "' are not strictly increasing in global index");
    }
    v.push_back(&f);
  }

  const std::size_t min_frames = static_cast<std::size_t>((batch_size + 1) / 2);
  std::map<std::int64_t, std::vector<Batch>> slots;
  for (auto& [stream, fs] : by_stream) {
    std::vector<SlotGroup> groups;
    for (const Frame* f : fs) {
      std::int64_t slot = f->global_index / batch_size;
      if (groups.empty() || groups.back().slot != slot) groups.push_back({slot, {}});
      groups.back().frames.push_back(*f);
    }
    // Split into runs of consecutive slots, merge fragments inside each run.
    std::size_t begin = 0;
    while (begin < groups.size()) {
      std::size_t end = begin + 1;
      while (end < groups.size() && groups[end].slot == groups[end - 1].slot + 1) ++end;
      std::vector<SlotGroup> run(std::make_move_iterator(groups.begin() + begin),
                                 std::make_move_iterator(groups.begin() + end));
      merge_fragments(run, min_frames);
      for (auto& g : run) {
        Batch b;
        b.stream_id = stream;
        b.slot_index = g.slot;
        b.frames = std::move(g.frames);
        for (std::size_t i = 0; i < b.frames.size(); ++i) {
          b.frames[i].slot_index = g.slot;
          b.frames[i].intra_index = static_cast<int>(i);
        }
        slots[g.slot].push_back(std::move(b));
      }
      begin = end;
    }
  }

  std::int64_t horizon = slots.rbegin()->first + 1;
  ds.slots.resize(static_cast<std::size_t>(horizon));
  for (std::int64_t t = 0; t < horizon; ++t) ds.slots[static_cast<std::size_t>(t)].slot_index = t;
  for (auto& [t, batches] : slots) {
    // by_stream is a std::map, so batches already arrive in stream-id order.
    ds.slots[static_cast<std::size_t>(t)].batches = std::move(batches);
  }
  return ds;
}

TimeSlotView time_slot_view(const Dataset& dataset, std::int64_t t) {
  if (t < 0 || t >= dataset.horizon()) {
    TimeSlotView empty;
    empty.slot_index = t;
    return empty;
  }
  return dataset.slots[static_cast<std::size_t>(t)];
}

std::optional<std::string> majority_label(const Batch& batch, const ClassRegistry* registry) {
  std::map<std::string, std::size_t> counts;
  for (const auto& f : batch.frames) {
    if (f.true_label) ++counts[*f.true_label];
  }
  if (counts.empty()) return std::nullopt;
  std::size_t top = 0;
  for (const auto& [_, c] : counts) top = std::max(top, c);

  std::optional<std::string> best;
  auto rank = [&](const std::string& name) -> std::int64_t {
    if (registry) {
      if (auto id = registry->find(name)) return *id;
    }
    return std::numeric_limits<std::int64_t>::max();
  };
  for (const auto& [name, c] : counts) {
    if (c != top) continue;
    // counts is name-ordered, so a strict comparison keeps the smallest name on ties.
    if (!best || rank(name) < rank(*best)) best = name;
  }
  return best;
}

std::vector<Frame> flatten(const Dataset& dataset) {
  std::vector<Frame> out;
  for (const auto& slot : dataset.slots) {
    for (const auto& b : slot.batches) out.insert(out.end(), b.frames.begin(), b.frames.end());
  }
  std::stable_sort(out.begin(), out.end(), [](const Frame& a, const Frame& b) {
    if (a.stream_id != b.stream_id) return a.stream_id < b.stream_id;
    return a.global_index < b.global_index;
  });
  return out;
}

}  // namespace nevil
