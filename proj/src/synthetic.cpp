#include "nevil/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nevil {

namespace {

// a + b*r
struct Linear {
  double a = 0.0;
  double b = 0.0;
  double at(double r) const { return a + b * r; }
};

struct Row {
  bool defined = false;
  Linear mu_x, mu_y, sd_x, sd_y;
};

constexpr Row kUndef{};

Row row(Linear mx, Linear my, Linear sx, Linear sy) { return {true, mx, my, sx, sy}; }

// [class][quarter]
const std::array<std::array<Row, 4>, kSyntheticClassCount>& table() {
  static const std::array<std::array<Row, 4>, kSyntheticClassCount> t = {{
      // C1
      {{row({2, 0}, {5, 0}, {0, 0.5}, {0.5, 2}), kUndef, row({10, 0}, {-10, 5}, {1, 0}, {2, -1}), kUndef}},
      // C2
      {{row({5, -5}, {8, 0}, {3, -10}, {1, 0}), row({15, 0}, {-1, 5}, {1, 0}, {2, 3}),
        row({17, 0}, {2, 5}, {0.25, 0}, {0.15, 0}), row({20, 0}, {0, 4}, {1, 0}, {2, 0})}},
      // C3
      {{row({5, -5}, {2, 0}, {0.5, 10}, {0.5, 0}), row({1, -4}, {2, 0}, {0.5, 0}, {3, -4}),
        row({-1, 0}, {-2, -4}, {0.25, 0}, {0.15, 0}), row({-7, 0}, {-5, -1}, {7, 4}, {1, 4})}},
      // C4
      {{row({8, 0}, {8, 15}, {0.5, 0}, {0.5, 0}), row({5, -5}, {13, 0}, {0.25, 4}, {0.5, 4}), kUndef, kUndef}},
      // C5
      {{row({12, 0}, {15, 0}, {2, 0}, {2, 2}), kUndef, kUndef, kUndef}},
      // C6
      {{row({-15, 0}, {-5, 15}, {1, 0}, {2, 3}), kUndef, kUndef, kUndef}},
      // C7: the last quarter is garbled in the source table; read literally.
      {{row({10, 0}, {0, 5}, {0.5, 0}, {2, 3}), kUndef, kUndef, row({-10, 0}, {-1, 5}, {0, 1}, {2, 3})}},
  }};
  return t;
}

void check_class(int class_id) {
  if (class_id < 1 || class_id > kSyntheticClassCount) {
    throw InvalidArgument("unknown synthetic class " + std::to_string(class_id));
  }
}

std::size_t quarter(double r) { return static_cast<std::size_t>(std::min(3.0, std::floor(r * 4.0))); }

const Row& lookup(int class_id, double r) {
  check_class(class_id);
  if (!(r >= 0.0 && r < 1.0)) throw InvalidArgument("drift rate must lie in [0, 1)");
  return table()[static_cast<std::size_t>(class_id - 1)][quarter(r)];
}

std::string format_r(double r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

}  // namespace

UndefinedSegment::UndefinedSegment(int class_id, double r)
    : InvalidArgument(synthetic_class_name(class_id) + " is undefined at r=" + format_r(r)),
      class_id_(class_id),
      r_(r) {}

std::string synthetic_class_name(int class_id) {
  check_class(class_id);
  return "C" + std::to_string(class_id);
}

int synthetic_class_id(const std::string& name) {
  if (name.size() == 2 && name[0] == 'C' && name[1] >= '1' && name[1] <= '0' + kSyntheticClassCount) {
    return name[1] - '0';
  }
  throw InvalidArgument("unknown synthetic class '" + name + "'");
}

bool segment_defined(int class_id, double r) { return lookup(class_id, r).defined; }

ClassParams class_params(int class_id, double r) {
  const Row& row = lookup(class_id, r);
  if (!row.defined) throw UndefinedSegment(class_id, r);
  return {row.mu_x.at(r), row.mu_y.at(r), std::max(row.sd_x.at(r), kVarianceFloor),
          std::max(row.sd_y.at(r), kVarianceFloor)};
}

std::array<double, 2> sample_frame(int class_id, double r, std::mt19937_64& rng) {
  const ClassParams p = class_params(class_id, r);
  std::normal_distribution<double> nx(p.mu_x, p.sd_x);
  std::normal_distribution<double> ny(p.mu_y, p.sd_y);
  double x = nx(rng);
  double y = ny(rng);
  return {x, y};
}

std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::I: return "I";
    case ScenarioId::II: return "II";
    case ScenarioId::III: return "III";
    case ScenarioId::IV: return "IV";
  }
  return "?";
}

ScenarioId scenario_from_string(const std::string& name) {
  if (name == "I" || name == "1") return ScenarioId::I;
  if (name == "II" || name == "2") return ScenarioId::II;
  if (name == "III" || name == "3") return ScenarioId::III;
  if (name == "IV" || name == "4") return ScenarioId::IV;
  throw ConfigError("unknown scenario '" + name + "'");
}

double StreamSpec::r_at(std::int64_t k) const {
  double total = 0.0;
  for (const auto& [lo, hi] : r_intervals) total += hi - lo;
  double u = total * static_cast<double>(k) / static_cast<double>(length);
  for (const auto& [lo, hi] : r_intervals) {
    const double w = hi - lo;
    if (u < w) return lo + u;
    u -= w;
  }
  // Rounding at the very end of the path.
  return std::nextafter(r_intervals.back().second, r_intervals.back().first);
}

namespace {

using Intervals = std::vector<std::pair<double, double>>;

const Intervals kQ0 = {{0.0, 0.25}};

StreamSpec stream(int index, int class_id, std::int64_t start, std::int64_t length, Intervals r) {
  return {"s" + std::to_string(index), class_id, start, length, std::move(r)};
}

}  // namespace

ScenarioSpec default_scenario(ScenarioId id, std::int64_t L) {
  if (L < 1) throw ConfigError("frames per stream must be >= 1");
  ScenarioSpec s;
  s.id = id;
  switch (id) {
    case ScenarioId::I: {
      // Gradual segments only.
      const int classes[] = {1, 2, 3, 5, 6};
      for (int i = 0; i < 5; ++i) s.streams.push_back(stream(i, classes[i], 0, L, kQ0));
      break;
    }
    case ScenarioId::II:
      // Every defined segment in order, crossing the abrupt breakpoints.
      s.streams = {stream(0, 1, 0, L, {{0.0, 0.25}, {0.5, 0.75}}), stream(1, 2, 0, L, {{0.0, 1.0}}),
                   stream(2, 3, 0, L, {{0.0, 1.0}}), stream(3, 4, 0, L, {{0.0, 0.5}}),
                   stream(4, 7, 0, L, {{0.0, 0.25}, {0.75, 1.0}})};
      break;
    case ScenarioId::III: {
      // C5 and C6 leave after 40% of the run and come back on a new stream
      // at 60%, resuming their drift where they left off.
      const std::int64_t part = std::max<std::int64_t>(1, L * 2 / 5);
      const std::int64_t back = L - part;
      s.streams = {stream(0, 2, 0, L, kQ0),
                   stream(1, 3, 0, L, kQ0),
                   stream(2, 5, 0, part, {{0.0, 0.125}}),
                   stream(3, 6, 0, part, {{0.0, 0.125}}),
                   stream(4, 1, 0, L, kQ0),
                   stream(5, 5, back, part, {{0.125, 0.25}}),
                   stream(6, 6, back, part, {{0.125, 0.25}})};
      break;
    }
    case ScenarioId::IV:
      // Staggered arrivals of new classes; C2, C7 and C4 drift abruptly.
      s.streams = {stream(0, 5, 0, L, kQ0), stream(1, 2, 0, L, {{0.0, 1.0}}),
                   stream(2, 6, L / 4, L - L / 4, kQ0), stream(3, 7, L / 3, L - L / 3, {{0.0, 0.25}, {0.75, 1.0}}),
                   stream(4, 4, L / 2, L - L / 2, {{0.0, 0.5}})};
      break;
  }
  return s;
}

void validate_scenario(const ScenarioSpec& spec) {
  std::vector<std::string> problems;
  std::vector<std::string> seen;
  for (const auto& st : spec.streams) {
    const std::string who = "stream '" + st.stream_id + "'";
    if (st.stream_id.empty()) problems.push_back("empty stream id");
    if (std::find(seen.begin(), seen.end(), st.stream_id) != seen.end()) problems.push_back("duplicate " + who);
    seen.push_back(st.stream_id);
    if (st.class_id < 1 || st.class_id > kSyntheticClassCount) {
      problems.push_back(who + ": unknown class " + std::to_string(st.class_id));
      continue;
    }
    if (st.length < 1) problems.push_back(who + ": length must be >= 1");
    if (st.start < 0) problems.push_back(who + ": start must be >= 0");
    if (st.r_intervals.empty()) problems.push_back(who + ": no r-intervals");
    for (const auto& [lo, hi] : st.r_intervals) {
      if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) {
        problems.push_back(who + ": bad r-interval [" + format_r(lo) + ", " + format_r(hi) + ")");
        continue;
      }
      // A piecewise-linear table only changes definedness at quarter
      // boundaries, so checking each touched quarter at its covered start
      // point is exhaustive.
      for (double q = std::floor(lo * 4.0) / 4.0; q < hi; q += 0.25) {
        const double r = std::max(lo, q);
        if (!segment_defined(st.class_id, r)) {
          problems.push_back("(" + synthetic_class_name(st.class_id) + ", r=" + format_r(r) + ")");
        }
      }
    }
  }
  if (spec.streams.empty()) problems.push_back("scenario has no streams");
  if (!problems.empty()) {
    std::string msg = "invalid scenario:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw InvalidArgument(msg);
  }
}

std::vector<Frame> generate(const ScenarioSpec& spec, std::uint64_t seed) {
  validate_scenario(spec);
  std::vector<std::vector<Frame>> per_stream(spec.streams.size());
  const auto n = static_cast<std::int64_t>(spec.streams.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const StreamSpec& st = spec.streams[static_cast<std::size_t>(i)];
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const std::string label = synthetic_class_name(st.class_id);
    auto& out = per_stream[static_cast<std::size_t>(i)];
    out.reserve(static_cast<std::size_t>(st.length));
    for (std::int64_t k = 0; k < st.length; ++k) {
      auto xy = sample_frame(st.class_id, st.r_at(k), rng);
      Frame f;
      f.stream_id = st.stream_id;
      f.global_index = st.start + k;
      f.features = {xy[0], xy[1]};
      f.true_label = label;
      out.push_back(std::move(f));
    }
  }
  std::vector<Frame> frames;
  for (auto& v : per_stream) std::move(v.begin(), v.end(), std::back_inserter(frames));
  std::stable_sort(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) {
    if (a.global_index != b.global_index) return a.global_index < b.global_index;
    return a.stream_id < b.stream_id;
  });
  return frames;
}

std::vector<Frame> build_scenario(ScenarioId id, const ScenarioOverrides& overrides, std::uint64_t seed) {
  ScenarioSpec spec = default_scenario(id, overrides.frames_per_stream.value_or(3000));
  if (overrides.streams) spec.streams = *overrides.streams;
  return generate(spec, seed);
}

nlohmann::json to_json(const ScenarioSpec& spec) {
  nlohmann::json streams = nlohmann::json::array();
  for (const auto& st : spec.streams) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& [lo, hi] : st.r_intervals) r.push_back({lo, hi});
    streams.push_back({{"stream_id", st.stream_id},
                       {"class", synthetic_class_name(st.class_id)},
                       {"start", st.start},
                       {"length", st.length},
                       {"r", r}});
  }
  return {{"scenario", to_string(spec.id)}, {"streams", streams}};
}

ScenarioSpec scenario_spec_from_json(const nlohmann::json& j) {
  try {
    ScenarioSpec s;
    s.id = scenario_from_string(j.at("scenario").get<std::string>());
    for (const auto& e : j.at("streams")) {
      StreamSpec st;
      st.stream_id = e.at("stream_id").get<std::string>();
      st.class_id = synthetic_class_id(e.at("class").get<std::string>());
      st.start = e.at("start").get<std::int64_t>();
      st.length = e.at("length").get<std::int64_t>();
      for (const auto& r : e.at("r")) st.r_intervals.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
      s.streams.push_back(std::move(st));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scenario spec: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace nevil
