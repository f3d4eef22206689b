#ifndef NEVIL_TESTS_HELPERS_HPP_
#define NEVIL_TESTS_HELPERS_HPP_

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nevil/stream_model.hpp"

namespace testing {

inline nevil::Frame frame(const std::string& stream, std::int64_t g, std::vector<double> x,
                          std::optional<std::string> y = std::nullopt) {
  nevil::Frame f;
  f.stream_id = stream;
  f.global_index = g;
  f.features = std::move(x);
  f.true_label = std::move(y);
  return f;
}

// `n` frames of one stream starting at `start`, drawn around `center`.
inline std::vector<nevil::Frame> blob(const std::string& stream, const std::string& label, std::int64_t start,
                                      std::int64_t n, std::vector<double> center, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<nevil::Frame> out;
  for (std::int64_t i = 0; i < n; ++i) {
    std::vector<double> x = center;
    for (double& v : x) v += sd * z(rng);
    out.push_back(frame(stream, start + i, std::move(x), label));
  }
  return out;
}

inline void append(std::vector<nevil::Frame>& to, const std::vector<nevil::Frame>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

inline nevil::Batch batch_of(const std::string& stream, std::int64_t slot, const std::vector<std::vector<double>>& rows,
                             const std::string& label = "") {
  nevil::Batch b;
  b.stream_id = stream;
  b.slot_index = slot;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto f = frame(stream, static_cast<std::int64_t>(i), rows[i]);
    if (!label.empty()) f.true_label = label;
    f.slot_index = slot;
    f.intra_index = static_cast<int>(i);
    b.frames.push_back(std::move(f));
  }
  return b;
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const char* root = std::getenv("NEVIL_TEST_TMP");
  std::filesystem::path p = root ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "nevil-tests";
  p /= name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testing

#endif  // NEVIL_TESTS_HELPERS_HPP_
