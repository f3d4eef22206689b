#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "nevil/io.hpp"
#include "nevil/oracle.hpp"
#include "nevil/synthetic.hpp"

using namespace nevil;

namespace {

std::vector<Frame> sample_frames() {
  auto fs = build_scenario(ScenarioId::IV, {200, std::nullopt}, 3);
  fs.resize(300);
  fs[5].features[0] = 1e-300;
  fs[6].features[1] = -123456789.125;
  return fs;
}

std::string replace_line(const std::string& text, std::size_t lineno, const std::string& with) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) out << (n == lineno ? with : line) << '\n';
  return out.str();
}

}  // namespace

TEST_CASE("stream file round-trip is the identity") {
  auto fs = sample_frames();
  std::stringstream ss;
  write_stream_file(ss, fs, {{"seed", 3}});
  auto back = read_stream_file(ss);
  CHECK(back.header.dim == 2);
  CHECK(back.header.frames == fs.size());
  CHECK(back.header.has_labels);
  CHECK(back.header.meta["seed"] == 3);
  REQUIRE(back.frames.size() == fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    CHECK(back.frames[i].stream_id == fs[i].stream_id);
    CHECK(back.frames[i].global_index == fs[i].global_index);
    CHECK(back.frames[i].true_label == fs[i].true_label);
    CHECK(back.frames[i].features == fs[i].features);
  }
}

TEST_CASE("unlabeled and empty stream files") {
  std::vector<Frame> fs{testing::frame("a", 0, {1, 2, 3}), testing::frame("a", 1, {4, 5, 6})};
  std::stringstream ss;
  write_stream_file(ss, fs);
  auto back = read_stream_file(ss);
  CHECK(!back.header.has_labels);
  CHECK(!back.frames[0].true_label);

  std::stringstream empty;
  write_stream_file(empty, std::vector<Frame>{}, {{"dim", 4}});
  auto e = read_stream_file(empty);
  CHECK(e.frames.empty());
  CHECK(e.header.dim == 4);
  std::stringstream nodim;
  CHECK_THROWS_AS(write_stream_file(nodim, std::vector<Frame>{}), InvalidArgument);
}

TEST_CASE("parse errors cite the offending line") {
  std::stringstream ss;
  write_stream_file(ss, sample_frames());
  const std::string good = ss.str();
  for (std::size_t n : {2u, 17u, 301u}) {
    std::istringstream bad(replace_line(good, n, "{\"s\":\"s0\",\"g\":"));
    try {
      read_stream_file(bad);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == n);
    }
  }
  std::istringstream wrong_dim(replace_line(good, 9, R"({"s":"s0","g":99999,"y":"C5","x":[1]})"));
  CHECK_THROWS_AS(read_stream_file(wrong_dim), ParseError);

  std::istringstream version(replace_line(good, 1, R"({"format":"nevil-stream","version":7,"dim":2,"frames":0,"streams":[]})"));
  try {
    read_stream_file(version);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  std::istringstream nothing("");
  CHECK_THROWS_AS(read_stream_file(nothing), ParseError);
}

TEST_CASE("decision records round-trip including non-finite confidence") {
  DecisionRecord d;
  d.slot = 4;
  d.stream_id = "s2";
  d.frames = 250;
  d.predicted = "C1";
  d.confidence = INFINITY;
  d.accepted = true;
  d.final_label = "C1";
  d.truth = "C2";
  CHECK(decision_record_from_json(to_json(d)) == d);
  d.confidence = -INFINITY;
  d.predicted.reset();
  d.truth.reset();
  d.accepted = false;
  d.cold_start = true;
  CHECK(decision_record_from_json(to_json(d)) == d);
}

TEST_CASE("model snapshots restore the same scores") {
  auto ds = assemble_batches(build_scenario(ScenarioId::IV, {900, std::nullopt}, 1), 60);
  for (auto kind : {ClassifierKind::gaussian_nb, ClassifierKind::gmm, ClassifierKind::logistic}) {
    RunConfig cfg;
    cfg.classifier = kind;
    CompositeModel model(cfg.decay_base);
    ScriptedOracle o;
    run(ds, o, cfg, [&](const TimeSlotView&, const SlotOutcome& out) { model = out.next.model; });
    auto j = model_to_json(model);
    auto back = model_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.size() == model.size());
    CHECK(back.registry() == model.registry());
    CHECK(model_to_json(back) == j);
    for (const auto& slot : ds.slots) {
      for (const auto& b : slot.batches) CHECK(score_batch(back, b).data == score_batch(model, b).data);
    }
  }
  CHECK_THROWS(model_from_json({{"format", "nevil-model"}, {"version", 99}}));
}

TEST_CASE("reports carry the config snapshot and seed") {
  auto ds = assemble_batches(build_scenario(ScenarioId::I, {600, std::nullopt}, 1), 60);
  RunConfig cfg;
  cfg.seed = 99;
  ScriptedOracle o;
  auto r = run(ds, o, cfg);
  auto j = report_to_json(r);
  CHECK(j["seed"] == 99);
  CHECK(j["config"] == to_json(cfg));
  CHECK(j["metrics"]["annotation_effort"] == annotation_effort(r));
  std::stringstream log;
  write_decision_log(log, r);
  std::string header;
  std::getline(log, header);
  CHECK(nlohmann::json::parse(header)["seed"] == 99);
}

TEST_CASE("json loading reports config errors") {
  auto dir = testing::scratch("io-json");
  CHECK_THROWS_AS(load_json(dir / "missing.json"), ConfigError);
  write_text_file(dir / "sub" / "bad.json", "{not json");
  CHECK_THROWS_AS(load_json(dir / "sub" / "bad.json"), ConfigError);
}
