#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "nevil/synthetic.hpp"

using namespace nevil;

namespace {

void check_params(int c, double r, ClassParams want) {
  auto p = class_params(c, r);
  CHECK(p.mu_x == doctest::Approx(want.mu_x).epsilon(1e-12));
  CHECK(p.mu_y == doctest::Approx(want.mu_y).epsilon(1e-12));
  CHECK(p.sd_x == doctest::Approx(want.sd_x).epsilon(1e-12));
  CHECK(p.sd_y == doctest::Approx(want.sd_y).epsilon(1e-12));
}

double max_step(const ClassParams& a, const ClassParams& b) {
  return std::max({std::abs(a.mu_x - b.mu_x), std::abs(a.mu_y - b.mu_y), std::abs(a.sd_x - b.sd_x),
                   std::abs(a.sd_y - b.sd_y)});
}

}  // namespace

TEST_CASE("table rows at published drift rates") {
  check_params(1, 0.1, {2, 5, 0.05, 0.7});
  check_params(2, 0.3, {15, 0.5, 1, 2.9});
  check_params(4, 0.1, {8, 9.5, 0.5, 0.5});
}

TEST_CASE("undefined segments are rejected") {
  CHECK(!segment_defined(1, 0.3));
  CHECK_THROWS_AS(class_params(1, 0.3), UndefinedSegment);
  CHECK_THROWS_AS(class_params(5, 0.6), UndefinedSegment);
  CHECK_THROWS_AS(class_params(8, 0.1), InvalidArgument);
  CHECK_THROWS_AS(class_params(2, 1.0), InvalidArgument);
  try {
    class_params(4, 0.8);
  } catch (const UndefinedSegment& e) {
    CHECK(e.class_id() == 4);
    CHECK(e.r() == 0.8);
  }
}

TEST_CASE("sample means follow the law of large numbers") {
  std::mt19937_64 rng(12);
  const int n = 10000;
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    auto f = sample_frame(4, 0.1, rng);
    sx += f[0];
    sy += f[1];
  }
  CHECK(std::abs(sx / n - 8.0) < 4 * 0.5 / std::sqrt(n));
  CHECK(std::abs(sy / n - 9.5) < 4 * 0.5 / std::sqrt(n));
}

TEST_CASE("class means match the table in narrow r windows") {
  std::mt19937_64 rng(3);
  for (int c = 1; c <= kSyntheticClassCount; ++c) {
    for (double r : {0.05, 0.3, 0.6, 0.9}) {
      if (!segment_defined(c, r)) continue;
      auto p = class_params(c, r);
      const int n = 4000;
      double sx = 0, sy = 0;
      for (int i = 0; i < n; ++i) {
        auto f = sample_frame(c, r, rng);
        sx += f[0];
        sy += f[1];
      }
      INFO("class " << c << " r " << r);
      CHECK(std::abs(sx / n - p.mu_x) < 5 * p.sd_x / std::sqrt(n));
      CHECK(std::abs(sy / n - p.mu_y) < 5 * p.sd_y / std::sqrt(n));
    }
  }
}

TEST_CASE("a floored deviation gives samples at the mean") {
  std::mt19937_64 rng(1);
  auto p = class_params(1, 0.0);  // sd_x = 0.5 * 0 is floored
  CHECK(p.sd_x == kVarianceFloor);
  for (int i = 0; i < 100; ++i) CHECK(std::abs(sample_frame(1, 0.0, rng)[0] - 2.0) < 1e-4);
}

TEST_CASE("sampling is deterministic for a seed") {
  std::mt19937_64 a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(sample_frame(3, 0.4, a) == sample_frame(3, 0.4, b));
  auto f1 = build_scenario(ScenarioId::II, {}, 5);
  auto f2 = build_scenario(ScenarioId::II, {}, 5);
  auto f3 = build_scenario(ScenarioId::II, {}, 6);
  REQUIRE(f1.size() == f2.size());
  bool same = true, differs = false;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    same = same && f1[i].features == f2[i].features;
    differs = differs || f1[i].features != f3[i].features;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("abrupt classes jump exactly at quarter boundaries") {
  for (int c : {2, 3}) {
    for (double edge : {0.25, 0.5, 0.75}) {
      auto before = class_params(c, std::nextafter(edge, 0.0));
      auto after = class_params(c, edge);
      INFO("class " << c << " edge " << edge);
      CHECK(max_step(before, after) > 0.1);
    }
    for (double r : {0.1, 0.4, 0.6, 0.9}) CHECK(max_step(class_params(c, r), class_params(c, r + 1e-6)) < 1e-4);
  }
}

TEST_CASE("scenario I drifts gradually") {
  auto spec = default_scenario(ScenarioId::I);
  REQUIRE(spec.streams.size() == 5);
  double worst = 0.0;
  for (const auto& st : spec.streams) {
    for (std::int64_t k = 1; k < st.length; ++k) {
      worst = std::max(worst, max_step(class_params(st.class_id, st.r_at(k - 1)), class_params(st.class_id, st.r_at(k))));
    }
  }
  CHECK(worst < 0.05);
}

TEST_CASE("scenario II crosses abrupt breakpoints") {
  auto spec = default_scenario(ScenarioId::II);
  std::set<int> classes;
  std::size_t jumps = 0;
  for (const auto& st : spec.streams) {
    classes.insert(st.class_id);
    for (std::int64_t k = 1; k < st.length; ++k) {
      jumps += max_step(class_params(st.class_id, st.r_at(k - 1)), class_params(st.class_id, st.r_at(k))) > 0.5;
    }
  }
  CHECK(classes == std::set<int>{1, 2, 3, 4, 7});
  CHECK(jumps >= 5);
}

TEST_CASE("scenario III brings classes back after a gap") {
  auto frames = build_scenario(ScenarioId::III, {}, 4);
  std::map<std::string, std::set<std::int64_t>> ticks;
  for (const auto& f : frames) ticks[*f.true_label].insert(f.global_index);
  bool reappears = false;
  for (const auto& [label, g] : ticks) {
    std::int64_t prev = -1;
    for (auto t : g) {
      if (prev >= 0 && t > prev + 1) reappears = true;
      prev = t;
    }
  }
  CHECK(reappears);
}

TEST_CASE("scenario IV introduces classes after the start") {
  auto frames = build_scenario(ScenarioId::IV, {}, 4);
  std::map<std::string, std::int64_t> first;
  for (const auto& f : frames) {
    if (!first.count(*f.true_label)) first[*f.true_label] = f.global_index;
  }
  std::size_t late = 0;
  for (const auto& [_, g] : first) late += g > 0;
  CHECK(first.size() == 5);
  CHECK(late == 3);
}

TEST_CASE("generated frames are sorted, labeled and two-dimensional") {
  for (auto id : {ScenarioId::I, ScenarioId::II, ScenarioId::III, ScenarioId::IV}) {
    auto fs = build_scenario(id, {600, std::nullopt}, 1);
    for (std::size_t i = 0; i < fs.size(); ++i) {
      CHECK(fs[i].true_label.has_value());
      CHECK(fs[i].features.size() == 2);
      if (i > 0) {
        const auto& a = fs[i - 1];
        const auto& b = fs[i];
        CHECK((a.global_index < b.global_index || (a.global_index == b.global_index && a.stream_id < b.stream_id)));
      }
    }
  }
}

TEST_CASE("overrides in undefined segments list every violation") {
  ScenarioOverrides o;
  o.streams = std::vector<StreamSpec>{{"a", 1, 0, 100, {{0.0, 0.5}}}, {"b", 5, 0, 100, {{0.5, 1.0}}}};
  try {
    build_scenario(ScenarioId::I, o, 1);
    FAIL("expected an error");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("C1") != std::string::npos);
    CHECK(msg.find("C5") != std::string::npos);
  }
}

TEST_CASE("scenario names and spec json") {
  CHECK(scenario_from_string("III") == ScenarioId::III);
  CHECK(scenario_from_string("4") == ScenarioId::IV);
  CHECK_THROWS(scenario_from_string("V"));
  auto spec = default_scenario(ScenarioId::IV, 900);
  auto back = scenario_spec_from_json(to_json(spec));
  CHECK(to_json(back) == to_json(spec));
  CHECK(synthetic_class_id("C7") == 7);
  CHECK_THROWS(synthetic_class_id("C8"));
}
