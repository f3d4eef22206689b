#ifndef NEVIL_SYNTHETIC_HPP_
#define NEVIL_SYNTHETIC_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nevil/stream_model.hpp"

namespace nevil {

// The seven drifting 2-D classes of the MS benchmark, numbered 1..7.
inline constexpr int kSyntheticClassCount = 7;

struct ClassParams {
  double mu_x = 0.0;
  double mu_y = 0.0;
  // Standard deviations, floored at kVarianceFloor.
  double sd_x = 0.0;
  double sd_y = 0.0;
};

// Thrown for a drift rate that falls in a segment the class does not define.
class UndefinedSegment : public InvalidArgument {
 public:
  UndefinedSegment(int class_id, double r);
  int class_id() const { return class_id_; }
  double r() const { return r_; }

 private:
  int class_id_;
  double r_;
};

std::string synthetic_class_name(int class_id);  // "C1".."C7"
int synthetic_class_id(const std::string& name);

// Each class is piecewise linear in r over the quarters [0,.25), [.25,.5),
// [.5,.75), [.75,1). Quarters the class leaves blank are undefined.
bool segment_defined(int class_id, double r);
ClassParams class_params(int class_id, double r);

// x ~ N(mu_x, sd_x), y ~ N(mu_y, sd_y), drawn in that order.
std::array<double, 2> sample_frame(int class_id, double r, std::mt19937_64& rng);

enum class ScenarioId { I, II, III, IV };
std::string to_string(ScenarioId id);
ScenarioId scenario_from_string(const std::string& name);

// One stream: `length` frames starting at global frame `start`. The drift
// rate walks the listed half-open r-intervals in order, advancing uniformly
// over their total length, so r moves linearly inside an interval and jumps
// between intervals that do not touch.
struct StreamSpec {
  std::string stream_id;
  int class_id = 1;
  std::int64_t start = 0;
  std::int64_t length = 0;
  std::vector<std::pair<double, double>> r_intervals;

  double r_at(std::int64_t k) const;
};

struct ScenarioSpec {
  ScenarioId id = ScenarioId::I;
  std::vector<StreamSpec> streams;
};

struct ScenarioOverrides {
  std::optional<std::int64_t> frames_per_stream;
  // Replaces the default composition entirely.
  std::optional<std::vector<StreamSpec>> streams;
};

ScenarioSpec default_scenario(ScenarioId id, std::int64_t frames_per_stream = 3000);

// Throws InvalidArgument listing every (class, r) pair that falls in an
// undefined segment, plus any structurally invalid stream.
void validate_scenario(const ScenarioSpec& spec);

// Frames sorted by (global index, stream id), every one labeled.
std::vector<Frame> generate(const ScenarioSpec& spec, std::uint64_t seed);
std::vector<Frame> build_scenario(ScenarioId id, const ScenarioOverrides& overrides, std::uint64_t seed);

nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_spec_from_json(const nlohmann::json& j);

}  // namespace nevil

#endif  // NEVIL_SYNTHETIC_HPP_
