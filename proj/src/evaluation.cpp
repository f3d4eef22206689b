#include "nevil/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <mutex>

#include "nevil/oracle.hpp"

namespace nevil {

std::vector<double> default_threshold_grid() {
  return {0.01, 0.1, 0.5, 0.9, 0.99, 0.999, 0.9999, 1.0 - 1e-6, 1.0 - 1e-9, 1.0};
}

double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of nothing");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

// Runs fn(i) for i in [0, n) across threads and rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::exception_ptr failure;
  std::mutex mu;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

CurvePoint run_point(const Dataset& data, RunConfig config, const std::string& series) {
  ScriptedOracle oracle;
  RunReport r = run(data, oracle, config);
  CurvePoint p;
  p.series = series;
  p.threshold = config.fusion.threshold;
  p.batch_size = config.batch_size;
  p.seed = config.seed;
  p.accuracy = accuracy(r);
  p.effort = annotation_effort(r);
  p.queries = r.queries();
  return p;
}

CurveSummary summarize(std::span<const CurvePoint> group) {
  CurveSummary s;
  s.series = group.front().series;
  s.threshold = group.front().threshold;
  s.batch_size = group.front().batch_size;
  std::vector<double> a, e, q;
  for (const auto& p : group) {
    a.push_back(p.accuracy);
    e.push_back(p.effort);
    q.push_back(static_cast<double>(p.queries));
  }
  s.accuracy = median(a);
  s.effort = median(e);
  s.queries = median(q);
  return s;
}

}  // namespace

ThresholdSweep sweep_threshold(const DatasetFactory& factory, const RunConfig& base, std::span<const double> thresholds,
                               std::span<const std::uint64_t> seeds, const std::string& series) {
  if (thresholds.empty() || seeds.empty()) throw InvalidArgument("empty sweep grid");
  for (double t : thresholds) {
    RunConfig c = base;
    c.fusion.threshold = t;
    c.validate();
  }
  std::vector<Dataset> data;
  data.reserve(seeds.size());
  for (auto s : seeds) data.push_back(factory(s));

  ThresholdSweep out;
  out.points.resize(thresholds.size() * seeds.size());
  parallel_for(out.points.size(), [&](std::size_t i) {
    const std::size_t ti = i / seeds.size(), si = i % seeds.size();
    RunConfig c = base;
    c.fusion.threshold = thresholds[ti];
    c.seed = seeds[si];
    out.points[i] = run_point(data[si], c, series);
  });
  for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
    out.medians.push_back(summarize(std::span(out.points).subspan(ti * seeds.size(), seeds.size())));
  }
  return out;
}

std::vector<int> batch_size_grid(std::int64_t longest, int count) {
  if (longest < 1) throw InvalidArgument("longest stream must hold at least one frame");
  if (count < 1) throw InvalidArgument("grid needs at least one point");
  const double lo = 0.01 * static_cast<double>(longest);
  const double hi = 0.5 * static_cast<double>(longest);
  std::vector<int> grid;
  for (int i = 0; i < count; ++i) {
    const double b = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    const int v = std::max(1, static_cast<int>(std::lround(b)));
    if (grid.empty() || grid.back() != v) grid.push_back(v);
  }
  return grid;
}

std::int64_t longest_stream(std::span<const Frame> frames) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& f : frames) ++counts[f.stream_id];
  std::int64_t best = 0;
  for (const auto& [_, n] : counts) best = std::max(best, n);
  return best;
}

BatchSizeSweep sweep_batch_size(const FrameFactory& factory, const RunConfig& base,
                                std::span<const std::uint64_t> seeds, int count) {
  if (seeds.empty()) throw InvalidArgument("empty seed list");
  base.validate();
  std::vector<std::vector<Frame>> frames;
  std::int64_t longest = 0;
  for (auto s : seeds) {
    frames.push_back(factory(s));
    longest = std::max(longest, longest_stream(frames.back()));
  }
  const std::vector<int> grid = batch_size_grid(longest, count);

  BatchSizeSweep out;
  out.points.resize(grid.size() * seeds.size());
  parallel_for(out.points.size(), [&](std::size_t i) {
    const std::size_t bi = i / seeds.size(), si = i % seeds.size();
    RunConfig c = base;
    c.batch_size = grid[bi];
    c.seed = seeds[si];
    out.points[i] = run_point(assemble_batches(frames[si], grid[bi]), c, "nevil");
  });
  for (std::size_t bi = 0; bi < grid.size(); ++bi) {
    out.medians.push_back(summarize(std::span(out.points).subspan(bi * seeds.size(), seeds.size())));
  }
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    int best = grid.front();
    double best_score = -INFINITY;
    for (std::size_t bi = 0; bi < grid.size(); ++bi) {
      const auto& p = out.points[bi * seeds.size() + si];
      const double score = p.accuracy - p.effort;
      if (score > best_score) {
        best_score = score;
        best = grid[bi];
      }
    }
    out.best_per_seed.push_back(best);
  }
  std::vector<int> sorted = out.best_per_seed;
  std::sort(sorted.begin(), sorted.end());
  out.best = sorted[(sorted.size() - 1) / 2];
  return out;
}

void write_points_csv(std::ostream& out, std::span<const CurvePoint> points) {
  out << "series,threshold,batch_size,seed,accuracy,effort,queries\n" << std::setprecision(10);
  for (const auto& p : points) {
    out << p.series << ',' << p.threshold << ',' << p.batch_size << ',' << p.seed << ',' << p.accuracy << ','
        << p.effort << ',' << p.queries << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const CurveSummary> medians) {
  out << "series,threshold,batch_size,median_accuracy,median_effort,median_queries\n" << std::setprecision(10);
  for (const auto& s : medians) {
    out << s.series << ',' << s.threshold << ',' << s.batch_size << ',' << s.accuracy << ',' << s.effort << ','
        << s.queries << '\n';
  }
}

void write_plot_data(std::ostream& out, std::span<const CurveSummary> medians) {
  out << "# x=effort y=accuracy series\n" << std::setprecision(10);
  for (const auto& s : medians) out << s.effort << ' ' << s.accuracy << ' ' << s.series << '\n';
}

}  // namespace nevil
