#ifndef NEVIL_ENSEMBLE_HPP_
#define NEVIL_ENSEMBLE_HPP_

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nevil/classifiers.hpp"
#include "nevil/stream_model.hpp"

namespace nevil {

// Recency weights W_l = p^-(t-l+1) / sum_{j=1..t} p^-j for l = 1..t, returned
// oldest first. Throws ConfigError unless p > 1.
std::vector<double> compute_weights(std::size_t t, double decay_base);

// The composite hypothesis: members in training order plus the class registry.
// Values are immutable; append_member returns a new model sharing members.
class CompositeModel {
 public:
  explicit CompositeModel(double decay_base = 2.0, ClassRegistry registry = {});

  double decay_base() const { return decay_base_; }
  const ClassRegistry& registry() const { return registry_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const EnsembleMember& member(std::size_t i) const { return *members_[i]; }
  std::vector<double> weights() const;

  CompositeModel append_member(EnsembleMember member, std::span<const std::string> new_labels) const;

 private:
  double decay_base_;
  ClassRegistry registry_;
  std::vector<std::shared_ptr<const EnsembleMember>> members_;
};

// Weighted vote over the registry for one frame. Members contribute zero to
// classes they never saw; a one-class member's "other" mass is spread evenly
// over registry classes it does not know. The result is clamped to
// [eps, 1-eps] and renormalized. An empty ensemble yields the uniform
// posterior; an empty registry throws ColdStartError.
std::vector<double> ensemble_score(const CompositeModel& model, std::span<const double> x);

// Per-frame posteriors of a whole batch, one row per frame. The OpenMP kernel
// and the serial reference produce identical matrices.
PosteriorMatrix score_batch(const CompositeModel& model, const Batch& batch);
PosteriorMatrix score_batch_serial(const CompositeModel& model, const Batch& batch);

// Same kernels over raw feature rows (n x dim, row-major).
PosteriorMatrix score_rows(const CompositeModel& model, std::span<const double> rows, std::size_t dim);
PosteriorMatrix score_rows_serial(const CompositeModel& model, std::span<const double> rows, std::size_t dim);

}  // namespace nevil

#endif  // NEVIL_ENSEMBLE_HPP_
