#include "nevil/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nevil {

std::string_view to_string(FusionRule rule) { return rule == FusionRule::product ? "product" : "sum"; }

std::string_view to_string(ConfidenceMeasure measure) {
  switch (measure) {
    case ConfidenceMeasure::most_confident: return "most_confident";
    case ConfidenceMeasure::margin: return "margin";
    case ConfidenceMeasure::ratio: return "ratio";
    case ConfidenceMeasure::modified_mc: return "modified_mc";
  }
  return "unknown";
}

FusionRule fusion_rule_from_string(std::string_view name) {
  if (name == "product" || name == "prod") return FusionRule::product;
  if (name == "sum") return FusionRule::sum;
  throw ConfigError("unknown fusion rule '" + std::string(name) + "'");
}

ConfidenceMeasure confidence_measure_from_string(std::string_view name) {
  if (name == "most_confident" || name == "mc") return ConfidenceMeasure::most_confident;
  if (name == "margin") return ConfidenceMeasure::margin;
  if (name == "ratio" || name == "mm") return ConfidenceMeasure::ratio;
  if (name == "modified_mc" || name == "mmc") return ConfidenceMeasure::modified_mc;
  throw ConfigError("unknown confidence measure '" + std::string(name) + "'");
}

void FusionConfig::validate() const {
  const double T = threshold;
  if (std::isnan(T)) throw ConfigError("threshold is NaN");
  switch (measure) {
    case ConfidenceMeasure::most_confident:
    case ConfidenceMeasure::margin:
    case ConfidenceMeasure::modified_mc:
      if (!(T > 0.0 && T <= 1.0)) throw ConfigError("threshold must lie in (0, 1] for " + std::string(to_string(measure)));
      break;
    case ConfidenceMeasure::ratio:
      if (rule == FusionRule::sum && !(T >= 1.0)) throw ConfigError("sum-rule ratio threshold must be >= 1");
      if (rule == FusionRule::product && !(T >= 0.0)) throw ConfigError("product-rule log-ratio threshold must be >= 0");
      break;
  }
  if (!(novelty_fraction > 0.0 && novelty_fraction <= 1.0)) throw ConfigError("novelty fraction must lie in (0, 1]");
}

std::vector<double> combine_product_log(const PosteriorMatrix& P) {
  if (P.rows == 0) throw InvalidArgument("cannot fuse an empty batch");
  std::vector<double> s(P.cols, 0.0);
  for (std::size_t i = 0; i < P.rows; ++i) {
    for (std::size_t k = 0; k < P.cols; ++k) s[k] += std::log(P(i, k));
  }
  return s;
}

std::vector<double> combine_sum(const PosteriorMatrix& P) {
  if (P.rows == 0) throw InvalidArgument("cannot fuse an empty batch");
  std::vector<double> s(P.cols, 0.0);
  for (std::size_t i = 0; i < P.rows; ++i) {
    for (std::size_t k = 0; k < P.cols; ++k) s[k] += P(i, k);
  }
  for (double& v : s) v /= static_cast<double>(P.rows);
  return s;
}

std::vector<double> normalize_log_scores(std::span<const double> log_scores) {
  double z = log_sum_exp(log_scores);
  std::vector<double> p(log_scores.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::exp(log_scores[k] - z);
  return p;
}

namespace {

// Indices of the largest and second largest entries (second == first when n == 1).
std::pair<std::size_t, std::size_t> top_two(std::span<const double> v) {
  std::size_t first = argmax(v);
  std::size_t second = first;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k == first) continue;
    if (second == first || v[k] > v[second]) second = k;
  }
  return {first, second};
}

}  // namespace

double bcl_most_confident(std::span<const double> posterior) {
  if (posterior.empty()) throw InvalidArgument("empty posterior");
  return *std::max_element(posterior.begin(), posterior.end());
}

double bcl_margin(std::span<const double> posterior) {
  if (posterior.empty()) throw InvalidArgument("empty posterior");
  if (posterior.size() == 1) return 1.0;
  auto [a, b] = top_two(posterior);
  return posterior[a] - posterior[b];
}

double bcl_ratio(std::span<const double> fused, FusionRule rule) {
  if (fused.empty()) throw InvalidArgument("empty posterior");
  if (fused.size() == 1) return std::numeric_limits<double>::infinity();
  auto [a, b] = top_two(fused);
  if (rule == FusionRule::sum) return fused[a] / fused[b];
  return fused[a] - fused[b];
}

ModifiedMcResult bcl_modified_mc(const PosteriorMatrix& P, double threshold) {
  auto s = combine_product_log(P);
  return bcl_modified_mc(P, threshold, argmax(s));
}

ModifiedMcResult bcl_modified_mc(const PosteriorMatrix& P, double threshold, std::size_t k_star) {
  if (P.rows == 0) throw InvalidArgument("cannot evaluate an empty batch");
  if (k_star >= P.cols) throw InvalidArgument("k* outside the posterior");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in (0, 1]");
  ModifiedMcResult r;
  r.k_star = k_star;
  double lhs = 0.0, rest = 0.0;
  for (std::size_t j = 0; j < P.rows; ++j) {
    double p = P(j, k_star);
    lhs += std::log(p);
    rest += std::log(std::max(1.0 - p, kEpsilon));
  }
  r.log_odds = lhs - rest;
  const double S = threshold >= 1.0 ? std::numeric_limits<double>::infinity()
                                    : std::log(threshold) - std::log1p(-threshold);
  r.margin = r.log_odds - S;
  r.accepted = r.margin > 0.0;
  return r;
}

double outside_support_fraction(const CompositeModel& model, const Batch& batch, ClassId label) {
  if (batch.frames.empty()) return 0.0;
  std::vector<std::pair<const EnsembleMember*, std::size_t>> knowers;
  for (std::size_t m = 0; m < model.size(); ++m) {
    const auto& known = model.member(m).known_labels();
    auto it = std::find(known.begin(), known.end(), label);
    if (it != known.end()) knowers.emplace_back(&model.member(m), static_cast<std::size_t>(it - known.begin()));
  }
  if (knowers.empty()) return 1.0;
  std::size_t outside = 0;
  for (const auto& f : batch.frames) {
    bool inside = std::any_of(knowers.begin(), knowers.end(),
                              [&](const auto& mk) { return mk.first->support_margin(mk.second, f.features) >= 0.0; });
    if (!inside) ++outside;
  }
  return static_cast<double>(outside) / static_cast<double>(batch.frames.size());
}

BatchDecision decide_batch(const CompositeModel& model, const Batch& batch, const FusionConfig& config) {
  config.validate();
  if (batch.frames.empty()) throw InvalidArgument("cannot decide an empty batch");
  BatchDecision d;
  d.stream_id = batch.stream_id;
  d.slot_index = batch.slot_index;
  d.frame_count = batch.size();
  d.rule = config.rule;
  d.measure = config.measure;

  if (model.empty() || model.registry().empty()) {
    d.cold_start = true;
    d.accepted = false;
    d.confidence = 0.0;
    if (!model.registry().empty()) {
      d.fused_posterior.assign(model.registry().size(), 1.0 / static_cast<double>(model.registry().size()));
    }
    return d;
  }

  const PosteriorMatrix P = score_batch(model, batch);
  if (config.rule == FusionRule::product) {
    d.log_scores = combine_product_log(P);
    d.fused_posterior = normalize_log_scores(d.log_scores);
  } else {
    d.fused_posterior = combine_sum(P);
    d.log_scores.resize(d.fused_posterior.size());
    std::transform(d.fused_posterior.begin(), d.fused_posterior.end(), d.log_scores.begin(),
                   [](double p) { return std::log(p); });
  }
  const std::size_t k_star = argmax(config.rule == FusionRule::product ? std::span<const double>(d.log_scores)
                                                                        : std::span<const double>(d.fused_posterior));
  d.predicted = static_cast<ClassId>(k_star);

  const double T = config.threshold;
  switch (config.measure) {
    case ConfidenceMeasure::most_confident:
      d.confidence = bcl_most_confident(d.fused_posterior);
      d.accepted = d.confidence > T;
      break;
    case ConfidenceMeasure::margin:
      d.confidence = bcl_margin(d.fused_posterior);
      d.accepted = d.confidence > T;
      break;
    case ConfidenceMeasure::ratio:
      d.confidence = bcl_ratio(config.rule == FusionRule::product ? std::span<const double>(d.log_scores)
                                                                  : std::span<const double>(d.fused_posterior),
                               config.rule);
      d.accepted = d.confidence > T;
      break;
    case ConfidenceMeasure::modified_mc: {
      auto r = bcl_modified_mc(P, T, k_star);
      d.confidence = r.log_odds;
      d.accepted = r.accepted;
      break;
    }
  }

  if (d.accepted && config.novelty_gate) {
    d.outside_fraction = outside_support_fraction(model, batch, d.predicted);
    if (d.outside_fraction > config.novelty_fraction) {
      d.novel = true;
      d.accepted = false;
    }
  }
  return d;
}

}  // namespace nevil
