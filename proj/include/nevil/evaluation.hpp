#ifndef NEVIL_EVALUATION_HPP_
#define NEVIL_EVALUATION_HPP_

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nevil/loop.hpp"

namespace nevil {

double median(std::vector<double> values);

struct CurvePoint {
  std::string series;
  double threshold = 0.0;
  int batch_size = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double effort = 0.0;
  std::size_t queries = 0;
};

// Median over seeds of one grid point.
struct CurveSummary {
  std::string series;
  double threshold = 0.0;
  int batch_size = 0;
  double accuracy = 0.0;
  double effort = 0.0;
  double queries = 0.0;
};

struct ThresholdSweep {
  std::vector<CurvePoint> points;      // threshold-major, seeds in given order
  std::vector<CurveSummary> medians;   // one per threshold, grid order
};

// Probability-scale grid used when none is given; ends at the maximal threshold.
std::vector<double> default_threshold_grid();

using DatasetFactory = std::function<Dataset(std::uint64_t seed)>;

// One scripted-oracle NEVIL run per (threshold, seed). The factory is called
// once per seed; grid points run in parallel.
ThresholdSweep sweep_threshold(const DatasetFactory& factory, const RunConfig& base,
                               std::span<const double> thresholds, std::span<const std::uint64_t> seeds,
                               const std::string& series = "nevil");

// `count` equally spaced batch sizes over [1%, 50%] of the longest stream,
// rounded and deduplicated.
std::vector<int> batch_size_grid(std::int64_t longest_stream, int count = 50);
std::int64_t longest_stream(std::span<const Frame> frames);

struct BatchSizeSweep {
  std::vector<CurvePoint> points;      // batch-size-major
  std::vector<CurveSummary> medians;   // one per batch size
  // Per seed, the B maximizing accuracy - effort (ties to the smaller B).
  std::vector<int> best_per_seed;
  // Lower median of best_per_seed.
  int best = 0;
};

using FrameFactory = std::function<std::vector<Frame>(std::uint64_t seed)>;

BatchSizeSweep sweep_batch_size(const FrameFactory& factory, const RunConfig& base,
                                std::span<const std::uint64_t> seeds, int count = 50);

// Delimiter-separated tables.
void write_points_csv(std::ostream& out, std::span<const CurvePoint> points);
void write_summary_csv(std::ostream& out, std::span<const CurveSummary> medians);
// x=effort, y=accuracy, series=configuration; whitespace separated.
void write_plot_data(std::ostream& out, std::span<const CurveSummary> medians);

}  // namespace nevil

#endif  // NEVIL_EVALUATION_HPP_
