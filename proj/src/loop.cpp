#include "nevil/loop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace nevil {

void RunConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  fusion.validate();
  if (!(decay_base > 1.0) || !std::isfinite(decay_base)) throw ConfigError("decay_base must be > 1");
  if (gmm.components < 1 || gmm.max_iter < 0 || !(gmm.tol >= 0)) throw ConfigError("bad gmm options");
  if (!(logistic.l2 >= 0) || !(logistic.step > 0) || logistic.epochs < 0) throw ConfigError("bad logistic options");
  if (!(one_class.quantile > 0 && one_class.quantile < 1)) throw ConfigError("one_class.quantile must lie in (0,1)");
  if (classifier == ClassifierKind::one_class) throw ConfigError("one_class is a fallback, not a slot classifier");
}

EnsembleMember train_slot_member(const LabeledFrameSet& data, const RunConfig& config, std::int64_t slot,
                                 const LabeledFrameSet* multiclass_buffer) {
  const std::size_t L = data.label_count();
  auto trained = [&]() -> EnsembleMember {
    if (L >= 2) {
      switch (config.classifier) {
        case ClassifierKind::gaussian_nb: return train_gaussian_nb(data);
        case ClassifierKind::gmm: {
          GmmOptions o = config.gmm;
          o.seed = derive_seed(config.seed, static_cast<std::uint64_t>(slot));
          return train_gmm(data, o);
        }
        case ClassifierKind::logistic: return train_logistic(data, config.logistic);
        case ClassifierKind::one_class: break;
      }
      throw ConfigError("unsupported slot classifier");
    }
    if (config.classifier == ClassifierKind::logistic && multiclass_buffer) {
      LabeledFrameSet padded = *multiclass_buffer;
      padded.append(data);
      if (padded.label_count() >= 2) return train_logistic(padded, config.logistic);
    }
    return train_one_class(data, config.one_class);
  }();
  trained.set_trained_slot(slot);
  return trained;
}

namespace {

std::vector<std::pair<std::string, double>> top_candidates(const BatchDecision& d, const ClassRegistry& registry) {
  std::vector<std::size_t> idx(d.fused_posterior.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return d.fused_posterior[a] > d.fused_posterior[b]; });
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, idx.size()); ++i) {
    out.emplace_back(registry.name(static_cast<ClassId>(idx[i])), d.fused_posterior[idx[i]]);
  }
  return out;
}

}  // namespace

SlotOutcome run_time_slot(const LearnerState& prev, const TimeSlotView& slot, Oracle& oracle,
                          const RunConfig& config) {
  SlotOutcome out;
  ClassRegistry registry = prev.model.registry();
  const std::size_t known_before = registry.size();
  LabeledFrameSet labeled;
  bool have_dim = false;

  for (const auto& batch : slot.batches) {
    if (batch.frames.empty()) continue;
    BatchDecision d = decide_batch(prev.model, batch, config.fusion);

    DecisionRecord rec;
    rec.slot = slot.slot_index;
    rec.stream_id = batch.stream_id;
    rec.frames = batch.size();
    rec.confidence = d.confidence;
    rec.accepted = d.accepted;
    rec.cold_start = d.cold_start;
    rec.novel = d.novel;
    if (d.predicted != kNoClass) rec.predicted = prev.model.registry().name(d.predicted);

    ClassId final_id = d.predicted;
    if (!d.accepted) {
      QueryContext ctx;
      ctx.slot = slot.slot_index;
      ctx.registry = &registry;
      if (!d.fused_posterior.empty()) ctx.candidates = top_candidates(d, prev.model.registry());
      std::string answer = oracle.label(batch, ctx);
      if (answer.empty()) throw OracleFailure("oracle returned an empty label");
      final_id = registry.intern(answer);
    }
    rec.final_label = registry.name(final_id);
    rec.truth = majority_label(batch, &registry);

    if (!have_dim) {
      labeled = LabeledFrameSet(batch.frames.front().features.size());
      have_dim = true;
    }
    for (const auto& f : batch.frames) labeled.add(f.features, final_id);

    out.decisions.push_back(std::move(d));
    out.records.push_back(std::move(rec));
  }

  out.next = prev;
  if (labeled.empty()) return out;

  const LabeledFrameSet* buffer = prev.multiclass_buffer ? &*prev.multiclass_buffer : nullptr;
  EnsembleMember member = train_slot_member(labeled, config, slot.slot_index, buffer);
  std::vector<std::string> new_labels(registry.names().begin() + static_cast<std::ptrdiff_t>(known_before),
                                      registry.names().end());
  out.next.model = prev.model.append_member(std::move(member), new_labels);
  if (labeled.label_count() >= 2) out.next.multiclass_buffer = std::move(labeled);
  return out;
}

RunReport run(const Dataset& dataset, Oracle& oracle, const RunConfig& config, const SlotObserver& observer) {
  config.validate();
  RunReport report;
  report.method = "nevil";
  report.seed = config.seed;
  report.config = to_json(config);

  LearnerState state{CompositeModel(config.decay_base), std::nullopt};
  std::int64_t horizon = dataset.horizon();
  if (config.horizon >= 0) horizon = std::min(horizon, config.horizon);
  for (std::int64_t t = 0; t < horizon; ++t) {
    const auto& slot = dataset.slots[static_cast<std::size_t>(t)];
    if (slot.empty()) continue;
    SlotOutcome outcome;
    try {
      outcome = run_time_slot(state, slot, oracle, config);
    } catch (const SlotError&) {
      throw;
    } catch (const std::exception& e) {
      throw SlotError(t, e.what());
    }
    report.decisions.insert(report.decisions.end(), outcome.records.begin(), outcome.records.end());
    if (observer) observer(slot, outcome);
    state = std::move(outcome.next);
  }
  report.slots = counters_from_decisions(report.decisions);
  report.registry = state.model.registry().names();
  return report;
}

namespace {

nlohmann::json threshold_to_json(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return t;
}

double threshold_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError("threshold must be a number or \"inf\"");
  }
  if (!j.is_number()) throw ConfigError("threshold must be a number");
  return j.get<double>();
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
  return {
      {"batch_size", c.batch_size},
      {"fusion",
       {{"rule", to_string(c.fusion.rule)},
        {"measure", to_string(c.fusion.measure)},
        {"threshold", threshold_to_json(c.fusion.threshold)},
        {"novelty_gate", c.fusion.novelty_gate},
        {"novelty_fraction", c.fusion.novelty_fraction}}},
      {"classifier", to_string(c.classifier)},
      {"gmm", {{"components", c.gmm.components}, {"max_iter", c.gmm.max_iter}, {"tol", c.gmm.tol}}},
      {"logistic",
       {{"l2", c.logistic.l2}, {"epochs", c.logistic.epochs}, {"step", c.logistic.step}, {"grad_tol", c.logistic.grad_tol}}},
      {"one_class", {{"quantile", c.one_class.quantile}}},
      {"decay_base", c.decay_base},
      {"seed", c.seed},
      {"horizon", c.horizon},
  };
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
  check_keys(j, {"batch_size", "fusion", "classifier", "gmm", "logistic", "one_class", "decay_base", "seed", "horizon"},
             "config");
  read(j, "batch_size", c.batch_size);
  read(j, "decay_base", c.decay_base);
  read(j, "seed", c.seed);
  read(j, "horizon", c.horizon);
  if (j.contains("classifier")) c.classifier = classifier_kind_from_string(j["classifier"].get<std::string>());
  if (j.contains("fusion")) {
    const auto& f = j["fusion"];
    check_keys(f, {"rule", "measure", "threshold", "novelty_gate", "novelty_fraction"}, "fusion");
    if (f.contains("rule")) c.fusion.rule = fusion_rule_from_string(f["rule"].get<std::string>());
    if (f.contains("measure")) c.fusion.measure = confidence_measure_from_string(f["measure"].get<std::string>());
    if (f.contains("threshold")) c.fusion.threshold = threshold_from_json(f["threshold"]);
    read(f, "novelty_gate", c.fusion.novelty_gate);
    read(f, "novelty_fraction", c.fusion.novelty_fraction);
  }
  if (j.contains("gmm")) {
    const auto& g = j["gmm"];
    check_keys(g, {"components", "max_iter", "tol"}, "gmm");
    read(g, "components", c.gmm.components);
    read(g, "max_iter", c.gmm.max_iter);
    read(g, "tol", c.gmm.tol);
  }
  if (j.contains("logistic")) {
    const auto& l = j["logistic"];
    check_keys(l, {"l2", "epochs", "step", "grad_tol"}, "logistic");
    read(l, "l2", c.logistic.l2);
    read(l, "epochs", c.logistic.epochs);
    read(l, "step", c.logistic.step);
    read(l, "grad_tol", c.logistic.grad_tol);
  }
  if (j.contains("one_class")) {
    const auto& o = j["one_class"];
    check_keys(o, {"quantile"}, "one_class");
    read(o, "quantile", c.one_class.quantile);
  }
  return c;
}

}  // namespace nevil
