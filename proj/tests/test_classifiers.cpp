#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "nevil/classifiers.hpp"
#include "oracles.hpp"

using namespace nevil;

namespace {

LabeledFrameSet set_of(std::initializer_list<std::pair<std::vector<double>, ClassId>> rows) {
  LabeledFrameSet s(rows.begin()->first.size());
  for (const auto& [x, y] : rows) s.add(x, y);
  return s;
}

using testing::gaussian_classes;

void check_valid_posterior(const std::vector<double>& p) {
  double sum = 0.0;
  for (double v : p) {
    CHECK(v >= kEpsilon);
    CHECK(v <= 1.0 - kEpsilon);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

// Log density of an axis-aligned Gaussian, written out independently.
double log_normal(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mean) * (x - mean) / var;
}

}  // namespace

TEST_CASE("naive Bayes matches a hand-computed posterior") {
  auto data = set_of({{{0, 0}, 0}, {{0, 2}, 0}, {{10, 10}, 1}, {{10, 12}, 1}});
  auto m = train_gaussian_nb(data);
  auto p = m.score_frame(std::vector<double>{0, 1});
  // Class A: x variance floored, y variance 1. Class B: same shape at (10, 11).
  const double la = log_normal(0, 0, kVarianceFloor) + log_normal(1, 1, 1);
  const double lb = log_normal(0, 10, kVarianceFloor) + log_normal(1, 11, 1);
  const double pa = 1.0 / (1.0 + std::exp(lb - la));
  CHECK(p[0] > 0.99);
  CHECK(p[0] == doctest::Approx(std::min(pa, 1.0 - kEpsilon)).epsilon(1e-9));
}

TEST_CASE("naive Bayes symmetry and priors") {
  auto sym = set_of({{{-1, 0}, 0}, {{-3, 0}, 0}, {{1, 0}, 1}, {{3, 0}, 1}});
  auto p = train_gaussian_nb(sym).score_frame(std::vector<double>{0, 0});
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-9));

  auto priors = set_of({{{0, 0}, 0}, {{0, 0}, 0}, {{0, 0}, 0}, {{0, 0}, 1}});
  auto m = train_gaussian_nb(priors);
  auto q = m.score_frame(std::vector<double>{0, 0});
  CHECK(q[0] == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(q[1] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(!m.diagnostics().warnings.empty());  // class 1 has a single frame
  CHECK_THROWS_AS(train_gaussian_nb(set_of({{{0, 0}, 0}, {{1, 0}, 0}})), InvalidArgument);
}

TEST_CASE("one-component GMM equals naive Bayes on balanced data") {
  auto data = gaussian_classes(3, 3, 40, 4, 3.0);
  auto nb = train_gaussian_nb(data);
  auto gmm = train_gmm(data, {1, 100, 1e-6, 5});
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> x(4);
    for (auto& v : x) v = z(rng);
    auto a = nb.score_frame(x);
    auto b = gmm.score_frame(x);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] == doctest::Approx(a[k]).epsilon(1e-6));
  }
}

TEST_CASE("EM log-likelihood never decreases") {
  auto a = testing::audit_em(100);
  CHECK(a.traces == 200);
  CHECK(a.violations == 0);
}

TEST_CASE("GMM separates well-separated clusters") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 1.0);
  LabeledFrameSet data(2);
  for (int i = 0; i < 100; ++i) {
    data.add(std::vector<double>{z(rng), z(rng)}, 0);
    data.add(std::vector<double>{20 + z(rng), z(rng)}, 0);
    data.add(std::vector<double>{z(rng), 60 + z(rng)}, 1);
  }
  auto m = train_gmm(data, {2, 100, 1e-6, 1});
  const auto& p = std::get<GmmParams>(m.params());
  auto r1 = p.responsibilities(0, std::vector<double>{0, 0});
  auto r2 = p.responsibilities(0, std::vector<double>{20, 0});
  CHECK(std::max(r1[0], r1[1]) > 0.99);
  CHECK(std::max(r2[0], r2[1]) > 0.99);
  CHECK(argmax(r1) != argmax(r2));
}

TEST_CASE("GMM training is deterministic for a seed") {
  auto data = gaussian_classes(8, 2, 50, 3, 2.0);
  auto a = std::get<GmmParams>(train_gmm(data, {2, 100, 1e-6, 42}).params());
  auto b = std::get<GmmParams>(train_gmm(data, {2, 100, 1e-6, 42}).params());
  for (std::size_t k = 0; k < a.classes.size(); ++k) {
    CHECK(a.classes[k].log_weight == b.classes[k].log_weight);
    for (std::size_t c = 0; c < a.classes[k].components.size(); ++c) {
      CHECK(a.classes[k].components[c].mean == b.classes[k].components[c].mean);
      CHECK(a.classes[k].components[c].var == b.classes[k].components[c].var);
    }
  }
}

TEST_CASE("logistic regression fits separable data") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  LabeledFrameSet data(2);
  const double centers[3][2] = {{0, 0}, {20, 0}, {0, 20}};
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 50; ++i) data.add(std::vector<double>{centers[k][0] + z(rng), centers[k][1] + z(rng)}, k);
  }
  auto m = train_logistic(data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto p = m.score_frame(data.row(i));
    if (static_cast<ClassId>(argmax(p)) == data.label(i)) ++correct;
  }
  CHECK(correct == data.size());
}

TEST_CASE("logistic gradient agrees with central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) CHECK(testing::logistic_gradient_error(seed) < 1e-4);
}

TEST_CASE("uninformative features give class frequencies") {
  LabeledFrameSet data(2);
  for (int i = 0; i < 30; ++i) data.add(std::vector<double>{1, 1}, 0);
  for (int i = 0; i < 10; ++i) data.add(std::vector<double>{1, 1}, 1);
  LogisticOptions o;
  o.epochs = 2000;
  auto p = train_logistic(data, o).score_frame(std::vector<double>{1, 1});
  CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-3));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("one-class member") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  LabeledFrameSet data(2);
  for (int i = 0; i < 1000; ++i) data.add(std::vector<double>{5 + z(rng), -3 + 2 * z(rng)}, 4);
  auto m = train_one_class(data);
  REQUIRE(m.outcome_count() == 2);
  CHECK(m.score_frame(std::vector<double>{5, -3})[0] > 0.5);
  CHECK(m.score_frame(std::vector<double>{15, -3})[0] < 0.5);

  std::size_t above = 0;
  for (std::size_t i = 0; i < data.size(); ++i) above += m.score_frame(data.row(i))[0] > 0.5;
  CHECK(static_cast<double>(above) / static_cast<double>(data.size()) >= 0.94);

  // Logistic squashing of the log-density margin, evaluated independently.
  const auto& p = std::get<OneClassParams>(m.params());
  std::vector<double> x{7, 1};
  const double margin = (p.density.log_density(x) - p.log_threshold) / p.scale;
  CHECK(m.score_frame(x)[0] == doctest::Approx(1.0 / (1.0 + std::exp(-margin))).epsilon(1e-9));
  CHECK_THROWS_AS(train_one_class(gaussian_classes(1, 2, 5, 2, 1.0)), InvalidArgument);
}

TEST_CASE("every member emits a clamped, normalized posterior") {
  auto data = gaussian_classes(6, 3, 30, 2, 5.0);
  LabeledFrameSet unary(2);
  for (std::size_t i = 0; i < 30; ++i) unary.add(data.row(i), 0);
  std::vector<EnsembleMember> members{train_gaussian_nb(data), train_gmm(data, {2, 50, 1e-6, 3}),
                                      train_logistic(data), train_one_class(unary)};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 30.0);
  for (const auto& m : members) {
    for (int i = 0; i < 200; ++i) check_valid_posterior(m.score_frame(std::vector<double>{z(rng), z(rng)}));
    CHECK_THROWS(m.score_frame(std::vector<double>{NAN, 0}));
    CHECK_THROWS_AS(m.score_frame(std::vector<double>{0}), DimensionMismatch);
  }
}

TEST_CASE("clamp keeps a one-hot vector inside the open interval") {
  std::vector<double> p{1.0, 0.0, 0.0};
  clamp_posterior(p);
  check_valid_posterior(p);
}

TEST_CASE("empirical quantile uses the lower order statistic") {
  CHECK(empirical_quantile({5, 1, 3, 2, 4}, 0.0) == 1);
  CHECK(empirical_quantile({5, 1, 3, 2, 4}, 1.0) == 5);
  CHECK(empirical_quantile({5, 1, 3, 2, 4}, 0.5) == 3);
}
