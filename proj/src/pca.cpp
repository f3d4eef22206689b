#include "nevil/pca.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace nevil {

PcaProjection pca_fit(std::span<const double> rows, std::size_t n, std::size_t dim, std::size_t q) {
  if (dim < 1 || rows.size() != n * dim) throw DimensionMismatch("pca input is not n x dim");
  if (q < 1 || q > dim || q > n) {
    throw InvalidArgument("pca needs 1 <= q <= min(dim, samples); got q=" + std::to_string(q) + ", dim=" +
                          std::to_string(dim) + ", samples=" + std::to_string(n));
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> X(rows.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  const Eigen::RowVectorXd mu = X.colwise().mean();
  const Eigen::MatrixXd C = X.rowwise() - mu;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::MatrixXd V = svd.matrixV();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const double total = s.squaredNorm() / denom;

  PcaProjection p;
  p.dim = dim;
  p.q = q;
  p.mean.assign(mu.data(), mu.data() + dim);
  p.components.assign(dim * q, 0.0);
  for (std::size_t k = 0; k < q; ++k) {
    // Sign convention: the largest-magnitude loading is positive.
    Eigen::Index arg = 0;
    V.col(static_cast<Eigen::Index>(k)).cwiseAbs().maxCoeff(&arg);
    const double sign = V(arg, static_cast<Eigen::Index>(k)) < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < dim; ++i) {
      p.components[i * q + k] = sign * V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    const double sk = k < static_cast<std::size_t>(s.size()) ? s(static_cast<Eigen::Index>(k)) : 0.0;
    const double var = sk * sk / denom;
    p.explained_variance.push_back(var);
    p.explained_variance_ratio.push_back(total > 0 ? var / total : 0.0);
  }
  return p;
}

PcaProjection pca_fit(std::span<const Frame> frames, std::size_t q) {
  if (frames.empty()) throw InvalidArgument("pca needs at least one frame");
  const std::size_t dim = frames.front().features.size();
  std::vector<double> rows;
  rows.reserve(frames.size() * dim);
  for (const auto& f : frames) {
    if (f.features.size() != dim) throw DimensionMismatch("frames disagree on the feature dimension");
    rows.insert(rows.end(), f.features.begin(), f.features.end());
  }
  return pca_fit(rows, frames.size(), dim, q);
}

std::vector<double> pca_project(const PcaProjection& p, std::span<const double> x) {
  if (x.size() != p.dim) throw DimensionMismatch("expected " + std::to_string(p.dim) + " features");
  std::vector<double> y(p.q, 0.0);
  for (std::size_t i = 0; i < p.dim; ++i) {
    const double c = x[i] - p.mean[i];
    for (std::size_t k = 0; k < p.q; ++k) y[k] += c * p.components[i * p.q + k];
  }
  return y;
}

std::vector<Frame> pca_apply(const PcaProjection& p, std::span<const Frame> frames) {
  std::vector<Frame> out(frames.begin(), frames.end());
  for (auto& f : out) f.features = pca_project(p, f.features);
  return out;
}

nlohmann::json to_json(const PcaProjection& p) {
  return {{"format", "nevil-pca"},
          {"version", 1},
          {"dim", p.dim},
          {"q", p.q},
          {"mean", p.mean},
          {"components", p.components},
          {"explained_variance", p.explained_variance},
          {"explained_variance_ratio", p.explained_variance_ratio}};
}

PcaProjection pca_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "nevil-pca" || j.at("version").get<int>() != 1) {
      throw InvalidArgument("not a version-1 pca projection");
    }
    PcaProjection p;
    p.dim = j.at("dim").get<std::size_t>();
    p.q = j.at("q").get<std::size_t>();
    p.mean = j.at("mean").get<std::vector<double>>();
    p.components = j.at("components").get<std::vector<double>>();
    p.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    p.explained_variance_ratio = j.at("explained_variance_ratio").get<std::vector<double>>();
    if (p.mean.size() != p.dim || p.components.size() != p.dim * p.q) {
      throw InvalidArgument("pca projection sizes are inconsistent");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad pca projection: ") + e.what());
  }
}

}  // namespace nevil
