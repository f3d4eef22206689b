#ifndef NEVIL_INFERENCE_HPP_
#define NEVIL_INFERENCE_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nevil/ensemble.hpp"

namespace nevil {

enum class FusionRule { product, sum };
enum class ConfidenceMeasure { most_confident, margin, ratio, modified_mc };

std::string_view to_string(FusionRule rule);
std::string_view to_string(ConfidenceMeasure measure);
FusionRule fusion_rule_from_string(std::string_view name);
ConfidenceMeasure confidence_measure_from_string(std::string_view name);

// Threshold scales per measure:
//   most_confident, margin, modified_mc : T in (0, 1]
//   ratio, sum rule                     : T >= 1 (ratio p*/p_*)
//   ratio, product rule                 : T >= 0 (log p* - log p_*)
// A batch is accepted when its confidence strictly exceeds T, so the top of
// each range (1 for probabilities, +inf for ratios) sends every batch to the
// oracle.
struct FusionConfig {
  FusionRule rule = FusionRule::product;
  ConfidenceMeasure measure = ConfidenceMeasure::modified_mc;
  double threshold = 0.999;
  // Force a query when most frames of a batch fall outside the training
  // support of the predicted class in every member that knows that class.
  bool novelty_gate = true;
  double novelty_fraction = 0.5;

  void validate() const;
};

// Sum over frames of log p(k | frame); unnormalized.
std::vector<double> combine_product_log(const PosteriorMatrix& frame_posteriors);
// Arithmetic mean of rows.
std::vector<double> combine_sum(const PosteriorMatrix& frame_posteriors);
// exp(s - logsumexp(s)).
std::vector<double> normalize_log_scores(std::span<const double> log_scores);

double bcl_most_confident(std::span<const double> posterior);
// p(C*) - p(C_*); 1 when there is a single class.
double bcl_margin(std::span<const double> posterior);
// Sum rule: p(C*)/p(C_*) on the fused posterior. Product rule: difference of
// the top two unnormalized log scores. +inf with a single class.
double bcl_ratio(std::span<const double> fused_scores, FusionRule rule);

struct ModifiedMcResult {
  bool accepted = false;
  // sum_j log p_{k*,j} - S - sum_j log(1 - p_{k*,j}); positive means accept.
  double margin = 0.0;
  // sum_j log p_{k*,j} - sum_j log(1 - p_{k*,j}), compared against S.
  double log_odds = 0.0;
  std::size_t k_star = 0;
};

// Binarized log-domain most-confident test with S = log T - log(1 - T).
// k* defaults to the argmax of the product-rule fusion.
ModifiedMcResult bcl_modified_mc(const PosteriorMatrix& frame_posteriors, double threshold);
ModifiedMcResult bcl_modified_mc(const PosteriorMatrix& frame_posteriors, double threshold, std::size_t k_star);

struct BatchDecision {
  std::string stream_id;
  std::int64_t slot_index = 0;
  std::size_t frame_count = 0;
  FusionRule rule = FusionRule::product;
  ConfidenceMeasure measure = ConfidenceMeasure::modified_mc;
  // Normalized fused posterior over the registry at decision time.
  std::vector<double> fused_posterior;
  // Product rule: unnormalized log scores. Sum rule: log of the posterior.
  std::vector<double> log_scores;
  ClassId predicted = kNoClass;
  double confidence = 0.0;
  bool accepted = false;
  bool cold_start = false;
  bool novel = false;
  double outside_fraction = 0.0;
};

// Fraction of frames lying outside the support of `label` in every member
// that knows it (1 when no member knows it).
double outside_support_fraction(const CompositeModel& model, const Batch& batch, ClassId label);

BatchDecision decide_batch(const CompositeModel& model, const Batch& batch, const FusionConfig& config);

}  // namespace nevil

#endif  // NEVIL_INFERENCE_HPP_
