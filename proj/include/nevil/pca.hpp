#ifndef NEVIL_PCA_HPP_
#define NEVIL_PCA_HPP_

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "nevil/stream_model.hpp"

namespace nevil {

// Offline PCA over a whole stream file.
struct PcaProjection {
  std::size_t dim = 0;
  std::size_t q = 0;
  std::vector<double> mean;
  // dim x q, row-major; column k is the k-th principal direction.
  std::vector<double> components;
  // Sample variance along each kept direction and its share of the total.
  std::vector<double> explained_variance;
  std::vector<double> explained_variance_ratio;

  double component(std::size_t row, std::size_t k) const { return components[row * q + k]; }
};

// `rows` is n x dim row-major. Requires 1 <= q <= min(dim, n).
PcaProjection pca_fit(std::span<const double> rows, std::size_t n, std::size_t dim, std::size_t q);
PcaProjection pca_fit(std::span<const Frame> frames, std::size_t q);

std::vector<double> pca_project(const PcaProjection& p, std::span<const double> x);
// Centers then projects every frame; labels and stream ids are kept.
std::vector<Frame> pca_apply(const PcaProjection& p, std::span<const Frame> frames);

nlohmann::json to_json(const PcaProjection& p);
PcaProjection pca_from_json(const nlohmann::json& j);

}  // namespace nevil

#endif  // NEVIL_PCA_HPP_
