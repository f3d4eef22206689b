#include <doctest.h>

#include <sstream>

#include "nevil/evaluation.hpp"
#include "nevil/io.hpp"
#include "nevil/oracle.hpp"
#include "nevil/synthetic.hpp"

using namespace nevil;

namespace {

DecisionRecord rec(std::int64_t slot, bool accepted, bool correct) {
  DecisionRecord d;
  d.slot = slot;
  d.stream_id = "s";
  d.frames = 1;
  d.truth = "A";
  d.predicted = correct ? "A" : "B";
  d.accepted = accepted;
  d.final_label = accepted ? *d.predicted : "A";
  return d;
}

RunReport report_of(std::vector<DecisionRecord> ds) {
  RunReport r;
  r.decisions = std::move(ds);
  r.slots = counters_from_decisions(r.decisions);
  return r;
}

DatasetFactory scenario_factory(ScenarioId id, std::int64_t frames, int B) {
  return [=](std::uint64_t seed) { return assemble_batches(build_scenario(id, {frames, std::nullopt}, seed), B); };
}

}  // namespace

TEST_CASE("accuracy examples") {
  std::vector<DecisionRecord> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(rec(0, true, i >= 2));
  CHECK(accuracy(report_of(ten)) == doctest::Approx(0.8));
  for (auto& d : ten) d = rec(0, true, true);
  CHECK(accuracy(report_of(ten)) == 1.0);

  // Slot means are not weighted by size: 1.0 over 2 batches and 0.6 over 5.
  std::vector<DecisionRecord> two{rec(0, true, true), rec(0, true, true)};
  for (int i = 0; i < 5; ++i) two.push_back(rec(1, true, i < 3));
  CHECK(accuracy(report_of(two)) == doctest::Approx(0.8));
  CHECK(accuracy(report_of(two), {1, 1}) == doctest::Approx(0.6));
  CHECK(accuracy(report_of(two), {5, 9}) == 1.0);
}

TEST_CASE("effort examples") {
  std::vector<DecisionRecord> ds;
  for (int i = 0; i < 10; ++i) ds.push_back(rec(i / 4, i >= 3, true));
  CHECK(annotation_effort(report_of(ds)) == doctest::Approx(0.3));
  for (auto& d : ds) d = rec(0, false, true);
  CHECK(annotation_effort(report_of(ds)) == 1.0);
  CHECK(accuracy(report_of(ds)) == 1.0);  // manual labels count as correct
  for (auto& d : ds) d = rec(0, true, true);
  CHECK(annotation_effort(report_of(ds)) == 0.0);
  CHECK(annotation_effort(RunReport{}) == 0.0);
}

TEST_CASE("counters respect their invariants") {
  std::vector<DecisionRecord> ds;
  for (int i = 0; i < 40; ++i) ds.push_back(rec(i % 7, i % 3 != 0, i % 5 != 0));
  for (const auto& c : counters_from_decisions(ds)) {
    CHECK(c.misclassified <= c.total);
    CHECK(c.manual <= c.batches);
    CHECK(c.batches == c.total);
  }
}

TEST_CASE("metrics recompute exactly from the decision log") {
  auto ds = assemble_batches(build_scenario(ScenarioId::IV, {900, std::nullopt}, 3), 60);
  ScriptedOracle oracle;
  RunConfig cfg;
  auto r = run(ds, oracle, cfg);
  std::stringstream log;
  write_decision_log(log, r);
  auto back = read_decision_log(log);
  CHECK(back.slots == r.slots);
  CHECK(back.decisions == r.decisions);
  CHECK(accuracy(back) == accuracy(r));
  CHECK(annotation_effort(back) == annotation_effort(r));
}

TEST_CASE("threshold sweep endpoints, grid of one and monotone effort") {
  RunConfig base;
  base.batch_size = 60;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  auto factory = scenario_factory(ScenarioId::II, 900, 60);

  const std::vector<double> one{0.9};
  auto single = sweep_threshold(factory, base, one, seeds);
  CHECK(single.medians.size() == 1);
  CHECK(single.points.size() == 3);

  const std::vector<double> grid{0.01, 0.5, 0.9, 0.999, 1.0};
  auto sweep = sweep_threshold(factory, base, grid, seeds);
  REQUIRE(sweep.medians.size() == grid.size());
  CHECK(sweep.medians.back().effort == 1.0);
  CHECK(sweep.medians.back().accuracy == 1.0);
  for (std::size_t i = 1; i < sweep.medians.size(); ++i) {
    CHECK(sweep.medians[i].effort >= sweep.medians[i - 1].effort);
  }
  // Accuracy is non-decreasing along effort within noise.
  for (std::size_t i = 1; i < sweep.medians.size(); ++i) {
    if (sweep.medians[i].effort > sweep.medians[i - 1].effort) {
      CHECK(sweep.medians[i].accuracy >= sweep.medians[i - 1].accuracy - 0.02);
    }
  }
}

TEST_CASE("query counts never drop as the threshold rises, for every measure") {
  auto ds = assemble_batches(build_scenario(ScenarioId::IV, {900, std::nullopt}, 5), 60);
  struct Case {
    ConfidenceMeasure m;
    FusionRule rule;
    std::vector<double> grid;
  };
  const std::vector<Case> cases{
      {ConfidenceMeasure::most_confident, FusionRule::product, {0.3, 0.6, 0.9, 0.99, 0.999999, 1.0}},
      {ConfidenceMeasure::margin, FusionRule::sum, {0.05, 0.3, 0.6, 0.9, 0.99, 1.0}},
      {ConfidenceMeasure::ratio, FusionRule::sum, {1.0, 1.5, 3.0, 10.0, 100.0, INFINITY}},
      {ConfidenceMeasure::ratio, FusionRule::product, {0.0, 1.0, 10.0, 100.0, 1000.0, INFINITY}},
      {ConfidenceMeasure::modified_mc, FusionRule::product, {0.01, 0.5, 0.9, 0.999, 1 - 1e-9, 1.0}},
  };
  for (const auto& c : cases) {
    std::size_t prev = 0;
    for (double T : c.grid) {
      RunConfig cfg;
      cfg.fusion.measure = c.m;
      cfg.fusion.rule = c.rule;
      cfg.fusion.threshold = T;
      ScriptedOracle o;
      auto r = run(ds, o, cfg);
      INFO(to_string(c.m) << " T=" << T);
      CHECK(r.queries() >= prev);
      prev = r.queries();
    }
    CHECK(prev == ds.batch_count());
  }
}

TEST_CASE("batch size grid") {
  auto g = batch_size_grid(3000);
  CHECK(g.size() == 50);
  CHECK(g.front() == 30);
  CHECK(g.back() == 1500);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  auto tiny = batch_size_grid(10);
  CHECK(tiny.front() == 1);
  CHECK(tiny.back() == 5);
  CHECK(tiny.size() <= 5);
}

TEST_CASE("batch size sweep is deterministic and handles a one-slot dataset") {
  RunConfig base;
  const std::vector<std::uint64_t> seeds{4};
  FrameFactory f = [](std::uint64_t seed) { return build_scenario(ScenarioId::I, {400, std::nullopt}, seed); };
  auto a = sweep_batch_size(f, base, seeds, 6);
  auto b = sweep_batch_size(f, base, seeds, 6);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].accuracy == b.points[i].accuracy);
    CHECK(a.points[i].effort == b.points[i].effort);
  }
  CHECK(a.best == b.best);

  FrameFactory one = [](std::uint64_t) {
    std::vector<Frame> fs;
    for (int i = 0; i < 2; ++i) {
      Frame fr;
      fr.stream_id = "a";
      fr.global_index = i;
      fr.features = {0.0};
      fr.true_label = "A";
      fs.push_back(fr);
    }
    return fs;
  };
  auto s = sweep_batch_size(one, base, seeds, 50);
  CHECK(s.medians.size() == 1);
  CHECK(s.best == 1);
}

TEST_CASE("median and table writers") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  std::vector<CurveSummary> m{{"nevil", 0.5, 250, 0.9, 0.1, 6}};
  std::ostringstream csv, plot;
  write_summary_csv(csv, m);
  write_plot_data(plot, m);
  CHECK(csv.str().find("nevil") != std::string::npos);
  CHECK(plot.str().rfind("# x=effort y=accuracy series", 0) == 0);
}
