#include <doctest.h>

#include <map>
#include <set>

#include "helpers.hpp"
#include "nevil/loop.hpp"
#include "nevil/oracle.hpp"
#include "nevil/synthetic.hpp"

using namespace nevil;

namespace {

TimeSlotView slot_of(std::int64_t t, std::vector<Batch> batches) {
  TimeSlotView v;
  v.slot_index = t;
  for (auto& b : batches) {
    b.slot_index = t;
    for (auto& f : b.frames) {
      f.slot_index = t;
      f.true_label = f.true_label ? f.true_label : std::optional<std::string>("?");
    }
  }
  v.batches = std::move(batches);
  return v;
}

Batch labeled_blob(const std::string& stream, const std::string& label, double cx, double cy, std::uint64_t seed) {
  auto fs = testing::blob(stream, label, 0, 30, {cx, cy}, 1.0, seed);
  Batch b;
  b.stream_id = stream;
  b.frames = fs;
  return b;
}

class FailingOracle : public Oracle {
 public:
  std::string label(const Batch&, const QueryContext&) override { throw OracleFailure("annotator went home"); }
};

class CountingOracle : public ScriptedOracle {
 public:
  std::string label(const Batch& b, const QueryContext& ctx) override {
    contexts.push_back(ctx.candidates.size());
    return ScriptedOracle::label(b, ctx);
  }
  std::vector<std::size_t> contexts;
};

Dataset scenario(ScenarioId id, std::uint64_t seed, std::int64_t frames = 1200, int B = 100) {
  ScenarioOverrides o;
  o.frames_per_stream = frames;
  auto fs = build_scenario(id, o, seed);
  return assemble_batches(fs, B);
}

}  // namespace

TEST_CASE("cold start queries and appends a one-class member") {
  RunConfig cfg;
  ScriptedOracle oracle;
  LearnerState s{CompositeModel(2.0), std::nullopt};
  auto out = run_time_slot(s, slot_of(0, {labeled_blob("a", "A", 0, 0, 1)}), oracle, cfg);
  REQUIRE(out.records.size() == 1);
  CHECK(out.records[0].cold_start);
  CHECK(out.records[0].manual());
  CHECK(oracle.calls() == 1);
  CHECK(out.next.model.size() == 1);
  CHECK(out.next.model.member(0).kind() == ClassifierKind::one_class);
  CHECK(out.next.model.registry().size() == 1);
}

TEST_CASE("two low-confidence batches of two classes train a multiclass member") {
  RunConfig cfg;
  ScriptedOracle oracle;
  LearnerState s{CompositeModel(2.0), std::nullopt};
  auto out = run_time_slot(s, slot_of(0, {labeled_blob("a", "A", 0, 0, 1), labeled_blob("b", "B", 9, 9, 2)}), oracle,
                           cfg);
  CHECK(oracle.calls() == 2);
  CHECK(out.next.model.member(0).kind() == ClassifierKind::gaussian_nb);
  CHECK(out.next.model.member(0).trained_slot() == 0);
  CHECK(out.next.multiclass_buffer.has_value());
}

TEST_CASE("a confident slot costs no queries and trains on auto labels") {
  RunConfig cfg;
  cfg.fusion.threshold = 0.9;
  ScriptedOracle oracle;
  LearnerState s{CompositeModel(2.0), std::nullopt};
  auto warm = run_time_slot(s, slot_of(0, {labeled_blob("a", "A", 0, 0, 1), labeled_blob("b", "B", 9, 9, 2)}), oracle,
                            cfg);
  const auto before = oracle.calls();
  auto next = run_time_slot(warm.next, slot_of(1, {labeled_blob("a", "A", 0, 0, 3), labeled_blob("b", "B", 9, 9, 4)}),
                            oracle, cfg);
  CHECK(oracle.calls() == before);
  for (const auto& r : next.records) {
    CHECK(r.accepted);
    CHECK(r.final_label == *r.predicted);
  }
  CHECK(next.next.model.size() == 2);
  CHECK(next.next.model.member(1).trained_slot() == 1);
}

TEST_CASE("oracle failure leaves the previous state untouched") {
  RunConfig cfg;
  FailingOracle oracle;
  LearnerState s{CompositeModel(2.0), std::nullopt};
  auto slot = slot_of(0, {labeled_blob("a", "A", 0, 0, 1)});
  CHECK_THROWS_AS(run_time_slot(s, slot, oracle, cfg), OracleFailure);
  CHECK(s.model.empty());

  Dataset ds;
  ds.slots.push_back(slot);
  try {
    run(ds, oracle, cfg);
    FAIL("expected a slot error");
  } catch (const SlotError& e) {
    CHECK(e.slot() == 0);
  }
}

TEST_CASE("the maximal threshold queries everything and scores perfectly") {
  auto ds = scenario(ScenarioId::II, 3);
  RunConfig cfg;
  cfg.fusion.threshold = 1.0;
  ScriptedOracle oracle;
  auto r = run(ds, oracle, cfg);
  CHECK(annotation_effort(r) == 1.0);
  CHECK(accuracy(r) == 1.0);
  CHECK(r.queries() == ds.batch_count());
}

TEST_CASE("empty dataset gives an empty report") {
  ScriptedOracle oracle;
  auto r = run(Dataset{}, oracle, RunConfig{});
  CHECK(r.decisions.empty());
  CHECK(r.slots.empty());
  CHECK(accuracy(r) == 1.0);
  CHECK(annotation_effort(r) == 0.0);
}

TEST_CASE("run invariants on a seeded scenario") {
  auto ds = scenario(ScenarioId::IV, 5);
  RunConfig cfg;
  ScriptedOracle oracle;
  std::map<std::string, std::int64_t> first_seen_truth;
  for (const auto& slot : ds.slots) {
    for (const auto& b : slot.batches) {
      auto y = *majority_label(b);
      if (!first_seen_truth.count(y)) first_seen_truth[y] = slot.slot_index;
    }
  }
  std::vector<std::size_t> registry_sizes;
  auto r = run(ds, oracle, cfg, [&](const TimeSlotView&, const SlotOutcome& o) {
    registry_sizes.push_back(o.next.model.registry().size());
  });

  // One final label per batch, in slot then stream order.
  REQUIRE(r.decisions.size() == ds.batch_count());
  std::size_t i = 0;
  for (const auto& slot : ds.slots) {
    for (const auto& b : slot.batches) {
      CHECK(r.decisions[i].slot == slot.slot_index);
      CHECK(r.decisions[i].stream_id == b.stream_id);
      ++i;
    }
  }
  for (const auto& d : r.decisions) {
    CHECK(!d.final_label.empty());
    if (d.accepted) CHECK(d.final_label == *d.predicted);
    if (d.predicted) CHECK(first_seen_truth.at(*d.predicted) <= d.slot);  // no label before it exists
    if (d.manual()) CHECK(d.final_label == *d.truth);
  }
  for (std::size_t k = 1; k < registry_sizes.size(); ++k) CHECK(registry_sizes[k] >= registry_sizes[k - 1]);
  CHECK(registry_sizes.back() > registry_sizes.front());
  for (const auto& name : r.registry) CHECK(first_seen_truth.count(name) == 1);
}

TEST_CASE("replay determinism") {
  auto ds = scenario(ScenarioId::III, 9);
  for (auto kind : {ClassifierKind::gaussian_nb, ClassifierKind::gmm, ClassifierKind::logistic}) {
    RunConfig cfg;
    cfg.classifier = kind;
    cfg.seed = 17;
    ScriptedOracle a, b;
    auto ra = run(ds, a, cfg);
    auto rb = run(ds, b, cfg);
    CHECK(ra.decisions == rb.decisions);
    CHECK(ra.slots == rb.slots);
    CHECK(ra.registry == rb.registry);
  }
}

TEST_CASE("logistic unary slots are padded from the multiclass buffer") {
  RunConfig cfg;
  cfg.classifier = ClassifierKind::logistic;
  ScriptedOracle oracle;
  LearnerState s{CompositeModel(2.0), std::nullopt};
  auto first = run_time_slot(s, slot_of(0, {labeled_blob("a", "A", 0, 0, 1), labeled_blob("b", "B", 9, 9, 2)}), oracle,
                             cfg);
  auto second = run_time_slot(first.next, slot_of(1, {labeled_blob("a", "A", 0, 0, 3)}), oracle, cfg);
  CHECK(second.next.model.member(1).kind() == ClassifierKind::logistic);
  CHECK(second.next.model.member(1).known_labels().size() == 2);

  RunConfig nb;
  auto third = run_time_slot(first.next, slot_of(1, {labeled_blob("a", "A", 0, 0, 3)}), oracle, nb);
  CHECK(third.next.model.member(1).kind() == ClassifierKind::one_class);
}

TEST_CASE("queries carry up to three candidates once the model is warm") {
  auto ds = scenario(ScenarioId::I, 2);
  RunConfig cfg;
  cfg.fusion.threshold = 1.0;
  CountingOracle oracle;
  run(ds, oracle, cfg);
  REQUIRE(!oracle.contexts.empty());
  CHECK(oracle.contexts.front() == 0);
  CHECK(oracle.contexts.back() == 3);
}

TEST_CASE("config json round-trips and rejects unknown keys") {
  RunConfig c;
  c.batch_size = 120;
  c.fusion.threshold = INFINITY;
  c.fusion.measure = ConfidenceMeasure::ratio;
  c.classifier = ClassifierKind::gmm;
  c.decay_base = 3.0;
  auto back = run_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  auto j = to_json(c);
  j["bogus"] = 1;
  CHECK_THROWS_AS(run_config_from_json(j), ConfigError);
  RunConfig bad;
  bad.classifier = ClassifierKind::one_class;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = RunConfig{};
  bad.decay_base = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
