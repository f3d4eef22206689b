#include "nevil/ensemble.hpp"

#include <algorithm>
#include <cmath>

namespace nevil {

std::vector<double> compute_weights(std::size_t t, double decay_base) {
  if (!(decay_base > 1.0) || !std::isfinite(decay_base)) throw ConfigError("decay base must be > 1");
  if (t == 0) return {};
  // r_l = p^-(t-l), built newest to oldest so consecutive ratios are one division.
  std::vector<double> w(t);
  w[t - 1] = 1.0;
  for (std::size_t i = t - 1; i > 0; --i) w[i - 1] = w[i] / decay_base;
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  return w;
}

CompositeModel::CompositeModel(double decay_base, ClassRegistry registry)
    : decay_base_(decay_base), registry_(std::move(registry)) {
  if (!(decay_base > 1.0) || !std::isfinite(decay_base)) throw ConfigError("decay base must be > 1");
}

std::vector<double> CompositeModel::weights() const { return compute_weights(members_.size(), decay_base_); }

CompositeModel CompositeModel::append_member(EnsembleMember member, std::span<const std::string> new_labels) const {
  CompositeModel next = *this;
  for (const auto& name : new_labels) next.registry_.intern(name);
  for (ClassId id : member.known_labels()) {
    if (id < 0 || static_cast<std::size_t>(id) >= next.registry_.size()) {
      throw InvalidArgument("member knows a label outside the class registry");
    }
  }
  next.members_.push_back(std::make_shared<const EnsembleMember>(std::move(member)));
  return next;
}

namespace {

// Scratch space reused across frames by one thread.
struct ScoreScratch {
  std::vector<double> member_out;
  std::vector<char> known;
};

void score_frame_into(const CompositeModel& model, std::span<const double> weights, std::span<const double> x,
                      std::span<double> out, ScoreScratch& scratch) {
  const std::size_t K = out.size();
  if (model.empty()) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(K));
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t m = 0; m < model.size(); ++m) {
    const auto& member = model.member(m);
    const double w = weights[m];
    scratch.member_out.resize(member.outcome_count());
    member.score_into(x, scratch.member_out);
    const auto& known = member.known_labels();
    for (std::size_t k = 0; k < known.size(); ++k) out[static_cast<std::size_t>(known[k])] += w * scratch.member_out[k];
    if (member.has_other_outcome()) {
      scratch.known.assign(K, 0);
      for (ClassId id : known) scratch.known[static_cast<std::size_t>(id)] = 1;
      std::size_t others = K - known.size();
      if (others > 0) {
        double share = w * scratch.member_out.back() / static_cast<double>(others);
        for (std::size_t k = 0; k < K; ++k) {
          if (!scratch.known[k]) out[k] += share;
        }
      }
    }
  }
  double sum = 0.0;
  for (double& v : out) {
    v = std::clamp(v, kEpsilon, 1.0 - kEpsilon);
    sum += v;
  }
  for (double& v : out) v /= sum;
}

void check_scorable(const CompositeModel& model) {
  if (model.registry().empty()) throw ColdStartError();
}

// Everything that could make a member throw is checked up front, so nothing
// throws inside the parallel region.
void validate_rows(const CompositeModel& model, std::span<const double> rows, std::size_t dim) {
  check_scorable(model);
  if (dim == 0 && !rows.empty()) throw DimensionMismatch("zero feature dimension");
  if (dim != 0 && rows.size() % dim != 0) throw DimensionMismatch("row buffer is not a multiple of the dimension");
  for (std::size_t m = 0; m < model.size(); ++m) {
    if (!rows.empty() && model.member(m).dim() != dim) {
      throw DimensionMismatch("frame dimension " + std::to_string(dim) + " does not match member dimension " +
                              std::to_string(model.member(m).dim()));
    }
  }
  for (double v : rows) {
    if (!std::isfinite(v)) throw InvalidArgument("non-finite feature value");
  }
}

}  // namespace

std::vector<double> ensemble_score(const CompositeModel& model, std::span<const double> x) {
  check_scorable(model);
  std::vector<double> out(model.registry().size());
  ScoreScratch scratch;
  auto w = model.weights();
  score_frame_into(model, w, x, out, scratch);
  return out;
}

PosteriorMatrix score_rows_serial(const CompositeModel& model, std::span<const double> rows, std::size_t dim) {
  validate_rows(model, rows, dim);
  const std::size_t n = dim == 0 ? 0 : rows.size() / dim;
  PosteriorMatrix P(n, model.registry().size());
  auto w = model.weights();
  ScoreScratch scratch;
  for (std::size_t i = 0; i < n; ++i) score_frame_into(model, w, rows.subspan(i * dim, dim), P.row(i), scratch);
  return P;
}

PosteriorMatrix score_rows(const CompositeModel& model, std::span<const double> rows, std::size_t dim) {
  validate_rows(model, rows, dim);
  const std::size_t n = dim == 0 ? 0 : rows.size() / dim;
  PosteriorMatrix P(n, model.registry().size());
  auto w = model.weights();
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
  {
    ScoreScratch scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      auto u = static_cast<std::size_t>(i);
      score_frame_into(model, w, rows.subspan(u * dim, dim), P.row(u), scratch);
    }
  }
  return P;
}

namespace {

std::vector<double> gather(const Batch& batch, std::size_t& dim) {
  dim = batch.frames.empty() ? 0 : batch.frames.front().features.size();
  std::vector<double> rows;
  rows.reserve(batch.size() * dim);
  for (const auto& f : batch.frames) {
    if (f.features.size() != dim) throw DimensionMismatch("batch frames differ in dimension");
    rows.insert(rows.end(), f.features.begin(), f.features.end());
  }
  return rows;
}

}  // namespace

PosteriorMatrix score_batch(const CompositeModel& model, const Batch& batch) {
  std::size_t dim = 0;
  auto rows = gather(batch, dim);
  return score_rows(model, rows, dim);
}

PosteriorMatrix score_batch_serial(const CompositeModel& model, const Batch& batch) {
  std::size_t dim = 0;
  auto rows = gather(batch, dim);
  return score_rows_serial(model, rows, dim);
}

}  // namespace nevil
