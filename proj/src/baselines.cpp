#include "nevil/baselines.hpp"

#include <cmath>
#include <map>

namespace nevil {

namespace {

const std::string& truth_of(const Batch& batch, const std::optional<std::string>& label) {
  if (!label) {
    throw InvalidArgument("batch of stream '" + batch.stream_id + "' at slot " + std::to_string(batch.slot_index) +
                          " has no ground truth");
  }
  return *label;
}

struct Labeled {
  ClassRegistry registry;
  LabeledFrameSet frames;
  bool started = false;

  void add(const Batch& batch, const std::string& label) {
    if (!started) {
      frames = LabeledFrameSet(batch.frames.front().features.size());
      started = true;
    }
    ClassId id = registry.intern(label);
    for (const auto& f : batch.frames) frames.add(f.features, id);
  }
};

CompositeModel train_single(const Labeled& data, const RunConfig& config, std::int64_t slot) {
  EnsembleMember m = train_slot_member(data.frames, config, slot, nullptr);
  return CompositeModel(config.decay_base).append_member(std::move(m), data.registry.names());
}

DecisionRecord manual_record(const Batch& batch, const std::string& label, const ClassRegistry* registry) {
  DecisionRecord r;
  r.slot = batch.slot_index;
  r.stream_id = batch.stream_id;
  r.frames = batch.size();
  r.accepted = false;
  r.final_label = label;
  r.truth = majority_label(batch, registry);
  return r;
}

// Product-rule prediction without any confidence gate.
DecisionRecord classify(const CompositeModel& model, const Batch& batch) {
  const auto scores = combine_product_log(score_batch(model, batch));
  const std::size_t k = argmax(scores);
  DecisionRecord r;
  r.slot = batch.slot_index;
  r.stream_id = batch.stream_id;
  r.frames = batch.size();
  r.predicted = model.registry().name(static_cast<ClassId>(k));
  r.confidence = normalize_log_scores(scores)[k];
  r.accepted = true;
  r.final_label = *r.predicted;
  r.truth = majority_label(batch, &model.registry());
  return r;
}

RunReport make_report(const char* method, const RunConfig& config) {
  RunReport report;
  report.method = method;
  report.seed = config.seed;
  report.config = to_json(config);
  return report;
}

std::int64_t horizon_of(const Dataset& dataset, const RunConfig& config) {
  std::int64_t h = dataset.horizon();
  if (config.horizon >= 0) h = std::min(h, config.horizon);
  return h;
}

}  // namespace

RunReport passive_learning(const Dataset& dataset, const RunConfig& config) {
  config.validate();
  RunReport report = make_report("passive", config);
  const std::int64_t horizon = horizon_of(dataset, config);

  std::vector<const Batch*> order;
  for (std::int64_t t = 0; t < horizon; ++t) {
    for (const auto& b : dataset.slots[static_cast<std::size_t>(t)].batches) order.push_back(&b);
  }
  if (order.empty()) return report;
  const std::size_t half = (order.size() + 1) / 2;

  Labeled train;
  for (std::size_t i = 0; i < half; ++i) train.add(*order[i], truth_of(*order[i], majority_label(*order[i])));
  for (std::size_t i = 0; i < half; ++i) {
    report.decisions.push_back(manual_record(*order[i], truth_of(*order[i], majority_label(*order[i], &train.registry)),
                                             &train.registry));
  }
  const CompositeModel model = train_single(train, config, order[half - 1]->slot_index);
  for (std::size_t i = half; i < order.size(); ++i) report.decisions.push_back(classify(model, *order[i]));

  report.slots = counters_from_decisions(report.decisions);
  report.registry = model.registry().names();
  return report;
}

RunReport even_odd_learning(const Dataset& dataset, const RunConfig& config, BaselineTrace* trace) {
  config.validate();
  RunReport report = make_report("evenodd", config);
  const std::int64_t horizon = horizon_of(dataset, config);

  Labeled buffer;
  std::size_t buffered_batches = 0;
  std::map<std::string, std::size_t> seen;  // batches per stream so far
  ClassRegistry last_registry;

  for (std::int64_t t = 0; t < horizon; ++t) {
    const auto& slot = dataset.slots[static_cast<std::size_t>(t)];
    if (slot.empty()) continue;
    std::vector<const Batch*> even;
    std::vector<DecisionRecord> records;
    std::vector<std::size_t> even_pos;
    for (const auto& b : slot.batches) {
      const std::size_t n = ++seen[b.stream_id];
      if (n % 2 == 1) {
        const std::string label = truth_of(b, majority_label(b));
        buffer.add(b, label);
        ++buffered_batches;
        records.push_back(manual_record(b, label, &buffer.registry));
      } else {
        even.push_back(&b);
        even_pos.push_back(records.size());
        records.emplace_back();
      }
    }
    if (!even.empty()) {
      const CompositeModel model = train_single(buffer, config, t);
      for (std::size_t i = 0; i < even.size(); ++i) records[even_pos[i]] = classify(model, *even[i]);
    }
    report.decisions.insert(report.decisions.end(), records.begin(), records.end());
    if (trace) {
      trace->slots.push_back(t);
      trace->buffer_frames.push_back(buffer.frames.size());
      trace->buffer_batches.push_back(buffered_batches);
      trace->ensemble_size.push_back(even.empty() ? 0 : 1);
    }
  }
  report.slots = counters_from_decisions(report.decisions);
  report.registry = buffer.registry.names();
  return report;
}

std::int64_t resolve_t_int(const UnwiseConfig& config, std::int64_t horizon) {
  std::int64_t t = config.t_int;
  if (t < 0) t = std::max<std::int64_t>(1, std::llround(0.2 * static_cast<double>(horizon)));
  if (!(t > 0 && t < horizon)) {
    throw ConfigError("t_int must satisfy 0 < t_int < horizon (" + std::to_string(horizon) + "), got " +
                      std::to_string(t));
  }
  return t;
}

RunReport unwise_active(const Dataset& dataset, Oracle& oracle, const RunConfig& config, const UnwiseConfig& unwise,
                        BaselineTrace* trace) {
  config.validate();
  RunReport report = make_report("unwise", config);
  const std::int64_t horizon = horizon_of(dataset, config);
  const std::int64_t t_int = resolve_t_int(unwise, horizon);
  report.config["t_int"] = t_int;

  Labeled initial;
  ClassRegistry answers;  // every label the oracle has used
  std::optional<CompositeModel> model;

  for (std::int64_t t = 0; t < horizon; ++t) {
    const auto& slot = dataset.slots[static_cast<std::size_t>(t)];
    if (t == t_int && !model) {
      if (!initial.started) throw InvalidArgument("no batches before t_int to train on");
      model = train_single(initial, config, t_int - 1);
    }
    if (slot.empty()) continue;
    for (const auto& b : slot.batches) {
      try {
        if (t < t_int) {
          QueryContext ctx{t, &answers, {}};
          const std::string label = oracle.label(b, ctx);
          if (label.empty()) throw OracleFailure("oracle returned an empty label");
          answers.intern(label);
          initial.add(b, label);
          report.decisions.push_back(manual_record(b, label, &answers));
          continue;
        }
        BatchDecision d = decide_batch(*model, b, config.fusion);
        DecisionRecord r;
        r.slot = t;
        r.stream_id = b.stream_id;
        r.frames = b.size();
        r.predicted = model->registry().name(d.predicted);
        r.confidence = d.confidence;
        r.accepted = d.accepted;
        r.novel = d.novel;
        if (d.accepted) {
          r.final_label = *r.predicted;
        } else {
          QueryContext ctx{t, &answers, {}};
          r.final_label = oracle.label(b, ctx);
          if (r.final_label.empty()) throw OracleFailure("oracle returned an empty label");
          answers.intern(r.final_label);
        }
        r.truth = majority_label(b, &answers);
        report.decisions.push_back(std::move(r));
      } catch (const std::exception& e) {
        throw SlotError(t, e.what());
      }
    }
    if (trace) {
      trace->slots.push_back(t);
      trace->ensemble_size.push_back(model ? model->size() : 0);
    }
  }
  report.slots = counters_from_decisions(report.decisions);
  report.registry = answers.names();
  return report;
}

}  // namespace nevil
