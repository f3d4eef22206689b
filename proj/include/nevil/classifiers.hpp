#ifndef NEVIL_CLASSIFIERS_HPP_
#define NEVIL_CLASSIFIERS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nevil/common.hpp"

namespace nevil {

enum class ClassifierKind { gaussian_nb, gmm, logistic, one_class };

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(std::string_view name);

// Frames with their (final) labels, stored as a flat n x dim matrix.
class LabeledFrameSet {
 public:
  LabeledFrameSet() = default;
  explicit LabeledFrameSet(std::size_t dim) : dim_(dim) {}

  void add(std::span<const double> x, ClassId label);
  void append(const LabeledFrameSet& other);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::span<const double> row(std::size_t i) const { return {x_.data() + i * dim_, dim_}; }
  ClassId label(std::size_t i) const { return labels_[i]; }
  const std::vector<ClassId>& labels() const { return labels_; }
  // Sorted distinct labels.
  std::vector<ClassId> distinct_labels() const;
  std::size_t label_count() const { return distinct_labels().size(); }

 private:
  std::size_t dim_ = 0;
  std::vector<double> x_;
  std::vector<ClassId> labels_;
};

struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> var;

  double log_density(std::span<const double> x) const;
};

// Maximum-likelihood diagonal Gaussian of the given rows, variances floored.
// Sets `floored` when any variance hit the floor.
DiagGaussian fit_diag_gaussian(const LabeledFrameSet& data, std::span<const std::size_t> rows, bool* floored = nullptr);

// q-quantile (0 <= q <= 1) of a sample, lower order statistic.
double empirical_quantile(std::vector<double> values, double q);

struct GaussianNbParams {
  std::vector<DiagGaussian> classes;
  std::vector<double> log_prior;
};

struct GmmParams {
  struct Mixture {
    std::vector<double> log_weight;
    std::vector<DiagGaussian> components;
    double log_density(std::span<const double> x) const;
  };
  std::vector<Mixture> classes;
  std::vector<double> log_prior;

  // Component responsibilities of class `cls` for x; sums to 1.
  std::vector<double> responsibilities(std::size_t cls, std::span<const double> x) const;
};

struct LogisticParams {
  // Features are standardized with (x - shift) / scale before the linear map.
  std::vector<double> shift;
  std::vector<double> scale;
  std::vector<double> weights;  // classes x dim, row-major
  std::vector<double> bias;     // classes
};

struct OneClassParams {
  DiagGaussian density;
  double log_threshold = 0.0;
  double scale = 1.0;
};

// Per-class density summary kept by every member so a batch lying outside all
// known support can be flagged regardless of the member kind.
struct SupportModel {
  std::vector<DiagGaussian> classes;
  std::vector<double> log_threshold;
};

inline constexpr double kSupportQuantile = 0.01;

struct TrainingDiagnostics {
  bool converged = true;
  bool variance_floored = false;
  int iterations = 0;
  int reseeds = 0;
  // GMM only: one EM log-likelihood trace per class, one entry per E-step.
  std::vector<std::vector<double>> log_likelihood_traces;
  std::vector<std::string> warnings;
};

class EnsembleMember {
 public:
  using Params = std::variant<GaussianNbParams, GmmParams, LogisticParams, OneClassParams>;

  EnsembleMember(ClassifierKind kind, std::vector<ClassId> known_labels, Params params, SupportModel support,
                 std::size_t dim, std::int64_t trained_slot = 0, TrainingDiagnostics diagnostics = {});

  ClassifierKind kind() const { return kind_; }
  const std::vector<ClassId>& known_labels() const { return known_labels_; }
  std::size_t dim() const { return dim_; }
  std::int64_t trained_slot() const { return trained_slot_; }
  void set_trained_slot(std::int64_t t) { trained_slot_ = t; }
  const Params& params() const { return params_; }
  const SupportModel& support() const { return support_; }
  const TrainingDiagnostics& diagnostics() const { return diagnostics_; }

  // Number of entries produced by score_frame: one per known label, plus a
  // trailing "other" outcome for one-class members.
  std::size_t outcome_count() const;
  bool has_other_outcome() const { return kind_ == ClassifierKind::one_class; }

  // Posterior over outcomes; entries in [eps, 1-eps], sum 1.
  std::vector<double> score_frame(std::span<const double> x) const;
  // Allocation-free variant; `out` must hold outcome_count() entries.
  void score_into(std::span<const double> x, std::span<double> out) const;

  // Support log-density margin of known class index `k` at x (negative = outside).
  double support_margin(std::size_t k, std::span<const double> x) const;

 private:
  ClassifierKind kind_;
  std::vector<ClassId> known_labels_;
  Params params_;
  SupportModel support_;
  std::size_t dim_;
  std::int64_t trained_slot_;
  TrainingDiagnostics diagnostics_;
};

struct GmmOptions {
  int components = 2;
  int max_iter = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct LogisticOptions {
  double l2 = 1e-3;
  int epochs = 200;
  double step = 0.1;
  double grad_tol = 1e-4;
};

struct OneClassOptions {
  double quantile = 0.05;
};

EnsembleMember train_gaussian_nb(const LabeledFrameSet& data);
EnsembleMember train_gmm(const LabeledFrameSet& data, const GmmOptions& options = {});
EnsembleMember train_logistic(const LabeledFrameSet& data, const LogisticOptions& options = {});
EnsembleMember train_one_class(const LabeledFrameSet& data, const OneClassOptions& options = {});

// Multinomial logistic objective over standardized features:
//   J(theta) = mean_i -log softmax(W z_i + b)[y_i] + l2/2 * ||W||^2
// theta packs W (classes x dim, row-major) followed by b.
struct LogisticProblem {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<double> z;  // n x dim
  std::vector<int> y;     // dense 0..classes-1
  double l2 = 0.0;

  std::size_t size() const { return y.size(); }
  std::size_t parameter_count() const { return classes * (dim + 1); }
};

double logistic_objective(const LogisticProblem& problem, std::span<const double> theta);
std::vector<double> logistic_gradient(const LogisticProblem& problem, std::span<const double> theta);

// Mixes a normalized distribution with the uniform one so every entry lands
// in [eps, 1 - (n-1) eps] while the sum stays exactly representable as 1.
void clamp_posterior(std::span<double> p);

}  // namespace nevil

#endif  // NEVIL_CLASSIFIERS_HPP_
