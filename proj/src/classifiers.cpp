#include "nevil/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

namespace nevil {

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::gaussian_nb: return "gaussian_nb";
    case ClassifierKind::gmm: return "gmm";
    case ClassifierKind::logistic: return "logistic";
    case ClassifierKind::one_class: return "one_class";
  }
  return "unknown";
}

ClassifierKind classifier_kind_from_string(std::string_view name) {
  if (name == "gaussian_nb" || name == "naive_bayes" || name == "nb") return ClassifierKind::gaussian_nb;
  if (name == "gmm") return ClassifierKind::gmm;
  if (name == "logistic") return ClassifierKind::logistic;
  if (name == "one_class") return ClassifierKind::one_class;
  throw ConfigError("unknown classifier kind '" + std::string(name) + "'");
}

void LabeledFrameSet::add(std::span<const double> x, ClassId label) {
  if (dim_ == 0 && labels_.empty()) dim_ = x.size();
  if (x.size() != dim_) throw DimensionMismatch("labeled frame has wrong dimension");
  x_.insert(x_.end(), x.begin(), x.end());
  labels_.push_back(label);
}

void LabeledFrameSet::append(const LabeledFrameSet& other) {
  for (std::size_t i = 0; i < other.size(); ++i) add(other.row(i), other.label(i));
}

std::vector<ClassId> LabeledFrameSet::distinct_labels() const {
  std::set<ClassId> s(labels_.begin(), labels_.end());
  return {s.begin(), s.end()};
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void check_input(std::span<const double> x, std::size_t dim) {
  if (x.size() != dim) {
    throw DimensionMismatch("feature vector has dimension " + std::to_string(x.size()) + ", expected " +
                            std::to_string(dim));
  }
  if (!all_finite(x)) throw InvalidArgument("non-finite feature value");
}

// Softmax of log scores in place, then clamp.
void normalize_log_scores(std::span<double> s) {
  double z = log_sum_exp(s);
  for (double& v : s) v = std::exp(v - z);
  clamp_posterior(s);
}

std::vector<std::vector<std::size_t>> rows_by_label(const LabeledFrameSet& data, const std::vector<ClassId>& known) {
  std::vector<std::vector<std::size_t>> rows(known.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto it = std::lower_bound(known.begin(), known.end(), data.label(i));
    rows[static_cast<std::size_t>(it - known.begin())].push_back(i);
  }
  return rows;
}

SupportModel build_support(const LabeledFrameSet& data, const std::vector<std::vector<std::size_t>>& rows) {
  SupportModel support;
  for (const auto& r : rows) {
    DiagGaussian g = fit_diag_gaussian(data, r);
    std::vector<double> ll;
    ll.reserve(r.size());
    for (std::size_t i : r) ll.push_back(g.log_density(data.row(i)));
    support.log_threshold.push_back(empirical_quantile(std::move(ll), kSupportQuantile));
    support.classes.push_back(std::move(g));
  }
  return support;
}

std::vector<double> log_frequencies(const std::vector<std::vector<std::size_t>>& rows, std::size_t n) {
  std::vector<double> lp;
  for (const auto& r : rows) lp.push_back(std::log(static_cast<double>(r.size()) / static_cast<double>(n)));
  return lp;
}

void require_data(const LabeledFrameSet& data) {
  if (data.empty()) throw InvalidArgument("empty training set");
  if (data.dim() == 0) throw InvalidArgument("zero-dimensional training set");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!all_finite(data.row(i))) throw InvalidArgument("non-finite training feature");
  }
}

}  // namespace

double DiagGaussian::log_density(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    double d = x[j] - mean[j];
    s += kLog2Pi + std::log(var[j]) + d * d / var[j];
  }
  return -0.5 * s;
}

DiagGaussian fit_diag_gaussian(const LabeledFrameSet& data, std::span<const std::size_t> rows, bool* floored) {
  const std::size_t d = data.dim();
  DiagGaussian g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  if (rows.empty()) {
    std::fill(g.var.begin(), g.var.end(), 1.0);
    if (floored) *floored = true;
    return g;
  }
  const double n = static_cast<double>(rows.size());
  for (std::size_t i : rows) {
    auto x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) g.mean[j] += x[j];
  }
  for (double& m : g.mean) m /= n;
  for (std::size_t i : rows) {
    auto x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      double e = x[j] - g.mean[j];
      g.var[j] += e * e;
    }
  }
  for (double& v : g.var) {
    v /= n;
    if (v < kVarianceFloor) {
      v = kVarianceFloor;
      if (floored) *floored = true;
    }
  }
  return g;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of an empty sample");
  q = std::clamp(q, 0.0, 1.0);
  auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

void clamp_posterior(std::span<double> p) {
  const std::size_t n = p.size();
  if (n == 0) return;
  if (n == 1) {
    p[0] = 1.0;
    return;
  }
  const double keep = 1.0 - static_cast<double>(n) * kEpsilon;
  for (double& v : p) v = kEpsilon + keep * std::clamp(v, 0.0, 1.0);
}

double GmmParams::Mixture::log_density(std::span<const double> x) const {
  std::vector<double> a(components.size());
  for (std::size_t k = 0; k < components.size(); ++k) a[k] = log_weight[k] + components[k].log_density(x);
  return log_sum_exp(a);
}

std::vector<double> GmmParams::responsibilities(std::size_t cls, std::span<const double> x) const {
  const auto& mix = classes.at(cls);
  std::vector<double> a(mix.components.size());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = mix.log_weight[k] + mix.components[k].log_density(x);
  double z = log_sum_exp(a);
  for (double& v : a) v = std::exp(v - z);
  return a;
}

EnsembleMember::EnsembleMember(ClassifierKind kind, std::vector<ClassId> known_labels, Params params,
                               SupportModel support, std::size_t dim, std::int64_t trained_slot,
                               TrainingDiagnostics diagnostics)
    : kind_(kind),
      known_labels_(std::move(known_labels)),
      params_(std::move(params)),
      support_(std::move(support)),
      dim_(dim),
      trained_slot_(trained_slot),
      diagnostics_(std::move(diagnostics)) {}

std::size_t EnsembleMember::outcome_count() const {
  return known_labels_.size() + (has_other_outcome() ? 1 : 0);
}

std::vector<double> EnsembleMember::score_frame(std::span<const double> x) const {
  std::vector<double> out(outcome_count());
  score_into(x, out);
  return out;
}

void EnsembleMember::score_into(std::span<const double> x, std::span<double> out) const {
  check_input(x, dim_);
  if (const auto* nb = std::get_if<GaussianNbParams>(&params_)) {
    for (std::size_t k = 0; k < nb->classes.size(); ++k) out[k] = nb->log_prior[k] + nb->classes[k].log_density(x);
    normalize_log_scores(out);
  } else if (const auto* gmm = std::get_if<GmmParams>(&params_)) {
    for (std::size_t k = 0; k < gmm->classes.size(); ++k) out[k] = gmm->log_prior[k] + gmm->classes[k].log_density(x);
    normalize_log_scores(out);
  } else if (const auto* lr = std::get_if<LogisticParams>(&params_)) {
    const std::size_t K = lr->bias.size();
    for (std::size_t k = 0; k < K; ++k) {
      double s = lr->bias[k];
      const double* w = lr->weights.data() + k * dim_;
      for (std::size_t j = 0; j < dim_; ++j) s += w[j] * (x[j] - lr->shift[j]) / lr->scale[j];
      out[k] = s;
    }
    normalize_log_scores(out);
  } else {
    const auto& oc = std::get<OneClassParams>(params_);
    double m = (oc.density.log_density(x) - oc.log_threshold) / oc.scale;
    // Stable logistic.
    double target = m >= 0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
    out[0] = target;
    out[1] = 1.0 - target;
    clamp_posterior(out);
  }
}

double EnsembleMember::support_margin(std::size_t k, std::span<const double> x) const {
  return support_.classes.at(k).log_density(x) - support_.log_threshold.at(k);
}

EnsembleMember train_gaussian_nb(const LabeledFrameSet& data) {
  require_data(data);
  auto known = data.distinct_labels();
  if (known.size() < 2) throw InvalidArgument("naive Bayes needs at least two labels");
  auto rows = rows_by_label(data, known);

  TrainingDiagnostics diag;
  GaussianNbParams p;
  for (std::size_t k = 0; k < known.size(); ++k) {
    bool floored = false;
    p.classes.push_back(fit_diag_gaussian(data, rows[k], &floored));
    if (rows[k].size() < 2) diag.warnings.push_back("class " + std::to_string(known[k]) + " has a single frame");
    diag.variance_floored |= floored;
  }
  p.log_prior = log_frequencies(rows, data.size());
  auto support = build_support(data, rows);
  return EnsembleMember(ClassifierKind::gaussian_nb, std::move(known), std::move(p), std::move(support), data.dim(),
                        0, std::move(diag));
}

namespace {

struct EmResult {
  GmmParams::Mixture mixture;
  std::vector<double> trace;
  int iterations = 0;
  int reseeds = 0;
  bool converged = false;
};

EmResult fit_mixture(const LabeledFrameSet& data, const std::vector<std::size_t>& rows, int components, int max_iter,
                     double tol, std::mt19937_64& rng) {
  const std::size_t d = data.dim();
  const std::size_t n = rows.size();
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(std::max(components, 1)), n);
  const DiagGaussian base = fit_diag_gaussian(data, rows);

  // Farthest-point seeding from a random first centre.
  std::vector<std::size_t> centres;
  centres.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  while (centres.size() < m) {
    auto c = data.row(rows[centres.back()]);
    std::size_t far = 0;
    for (std::size_t i = 0; i < n; ++i) {
      auto x = data.row(rows[i]);
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) dist += (x[j] - c[j]) * (x[j] - c[j]);
      nearest[i] = std::min(nearest[i], dist);
      if (nearest[i] > nearest[far]) far = i;
    }
    centres.push_back(far);
  }

  EmResult res;
  auto& mix = res.mixture;
  for (std::size_t k = 0; k < m; ++k) {
    auto c = data.row(rows[centres[k]]);
    mix.components.push_back({std::vector<double>(c.begin(), c.end()), base.var});
    mix.log_weight.push_back(-std::log(static_cast<double>(m)));
  }

  std::vector<double> resp(n * m);
  std::vector<double> a(m);
  auto e_step = [&]() {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto x = data.row(rows[i]);
      for (std::size_t k = 0; k < m; ++k) a[k] = mix.log_weight[k] + mix.components[k].log_density(x);
      double z = log_sum_exp(a);
      ll += z;
      for (std::size_t k = 0; k < m; ++k) resp[i * m + k] = std::exp(a[k] - z);
    }
    return ll;
  };
  auto m_step = [&]() {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    bool reseeded = false;
    for (std::size_t k = 0; k < m; ++k) {
      double nk = 0.0;
      for (std::size_t i = 0; i < n; ++i) nk += resp[i * m + k];
      auto& comp = mix.components[k];
      if (nk < 1e-10) {
        auto x = data.row(rows[pick(rng)]);
        comp.mean.assign(x.begin(), x.end());
        comp.var = base.var;
        mix.log_weight[k] = -std::log(static_cast<double>(m));
        ++res.reseeds;
        reseeded = true;
        continue;
      }
      std::fill(comp.mean.begin(), comp.mean.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        auto x = data.row(rows[i]);
        double r = resp[i * m + k];
        for (std::size_t j = 0; j < d; ++j) comp.mean[j] += r * x[j];
      }
      for (double& v : comp.mean) v /= nk;
      std::fill(comp.var.begin(), comp.var.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        auto x = data.row(rows[i]);
        double r = resp[i * m + k];
        for (std::size_t j = 0; j < d; ++j) {
          double e = x[j] - comp.mean[j];
          comp.var[j] += r * e * e;
        }
      }
      for (double& v : comp.var) v = std::max(v / nk, kVarianceFloor);
      mix.log_weight[k] = std::log(nk / static_cast<double>(n));
    }
    if (reseeded) {
      std::vector<double> w(mix.log_weight);
      double z = log_sum_exp(w);
      for (double& v : mix.log_weight) v -= z;
    }
  };

  double ll = e_step();
  res.trace.push_back(ll);
  for (int it = 1; it <= max_iter; ++it) {
    m_step();
    double next = e_step();
    res.trace.push_back(next);
    res.iterations = it;
    bool done = next - ll < tol;
    ll = next;
    if (done) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace

EnsembleMember train_gmm(const LabeledFrameSet& data, const GmmOptions& options) {
  require_data(data);
  if (options.components < 1) throw InvalidArgument("GMM needs at least one component");
  auto known = data.distinct_labels();
  if (known.size() < 2) throw InvalidArgument("GMM classifier needs at least two labels");
  auto rows = rows_by_label(data, known);

  TrainingDiagnostics diag;
  GmmParams p;
  for (std::size_t k = 0; k < known.size(); ++k) {
    if (rows[k].size() < static_cast<std::size_t>(options.components)) {
      diag.warnings.push_back("class " + std::to_string(known[k]) + " has fewer frames than components");
    }
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    auto em = fit_mixture(data, rows[k], options.components, options.max_iter, options.tol, rng);
    diag.iterations = std::max(diag.iterations, em.iterations);
    diag.reseeds += em.reseeds;
    diag.converged = diag.converged && em.converged;
    diag.log_likelihood_traces.push_back(std::move(em.trace));
    p.classes.push_back(std::move(em.mixture));
  }
  p.log_prior = log_frequencies(rows, data.size());
  auto support = build_support(data, rows);
  return EnsembleMember(ClassifierKind::gmm, std::move(known), std::move(p), std::move(support), data.dim(), 0,
                        std::move(diag));
}

double logistic_objective(const LogisticProblem& pb, std::span<const double> theta) {
  const std::size_t d = pb.dim, K = pb.classes, n = pb.size();
  const double* W = theta.data();
  const double* b = theta.data() + K * d;
  std::vector<double> s(K);
  double nll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = pb.z.data() + i * d;
    for (std::size_t k = 0; k < K; ++k) {
      double v = b[k];
      for (std::size_t j = 0; j < d; ++j) v += W[k * d + j] * z[j];
      s[k] = v;
    }
    nll += log_sum_exp(s) - s[static_cast<std::size_t>(pb.y[i])];
  }
  double reg = 0.0;
  for (std::size_t i = 0; i < K * d; ++i) reg += W[i] * W[i];
  return nll / static_cast<double>(n) + 0.5 * pb.l2 * reg;
}

std::vector<double> logistic_gradient(const LogisticProblem& pb, std::span<const double> theta) {
  const std::size_t d = pb.dim, K = pb.classes, n = pb.size();
  const double* W = theta.data();
  const double* b = theta.data() + K * d;
  std::vector<double> g(pb.parameter_count(), 0.0);
  double* gW = g.data();
  double* gb = g.data() + K * d;
  std::vector<double> s(K);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = pb.z.data() + i * d;
    for (std::size_t k = 0; k < K; ++k) {
      double v = b[k];
      for (std::size_t j = 0; j < d; ++j) v += W[k * d + j] * z[j];
      s[k] = v;
    }
    double lz = log_sum_exp(s);
    for (std::size_t k = 0; k < K; ++k) {
      double r = std::exp(s[k] - lz) - (static_cast<std::size_t>(pb.y[i]) == k ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j) gW[k * d + j] += r * z[j];
      gb[k] += r;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < K * d; ++i) gW[i] = gW[i] * inv_n + pb.l2 * W[i];
  for (std::size_t k = 0; k < K; ++k) gb[k] *= inv_n;
  return g;
}

EnsembleMember train_logistic(const LabeledFrameSet& data, const LogisticOptions& options) {
  require_data(data);
  if (options.l2 < 0 || options.step <= 0 || options.epochs < 0) throw InvalidArgument("bad logistic options");
  auto known = data.distinct_labels();
  if (known.size() < 2) throw InvalidArgument("logistic regression needs at least two labels");
  auto rows = rows_by_label(data, known);
  const std::size_t d = data.dim(), n = data.size(), K = known.size();

  LogisticParams p;
  p.shift.assign(d, 0.0);
  p.scale.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) p.shift[j] += x[j];
  }
  for (double& v : p.shift) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) p.scale[j] += (x[j] - p.shift[j]) * (x[j] - p.shift[j]);
  }
  for (double& v : p.scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < 1e-12) v = 1.0;
  }

  LogisticProblem pb;
  pb.dim = d;
  pb.classes = K;
  pb.l2 = options.l2;
  pb.z.resize(n * d);
  pb.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = data.row(i);
    for (std::size_t j = 0; j < d; ++j) pb.z[i * d + j] = (x[j] - p.shift[j]) / p.scale[j];
    pb.y[i] = static_cast<int>(std::lower_bound(known.begin(), known.end(), data.label(i)) - known.begin());
  }

  TrainingDiagnostics diag;
  diag.converged = false;
  std::vector<double> theta(pb.parameter_count(), 0.0);
  std::vector<double> cand(theta.size());
  double J = logistic_objective(pb, theta);
  for (int e = 0; e < options.epochs; ++e) {
    auto g = logistic_gradient(pb, theta);
    double gn = 0.0;
    for (double v : g) gn += v * v;
    if (std::sqrt(gn) < options.grad_tol) {
      diag.converged = true;
      break;
    }
    // Backtrack so a too-large step on high-dimensional data cannot diverge.
    double step = options.step;
    double Jc = J;
    while (true) {
      for (std::size_t i = 0; i < theta.size(); ++i) cand[i] = theta[i] - step * g[i];
      Jc = logistic_objective(pb, cand);
      if (Jc <= J || step < 1e-12) break;
      step *= 0.5;
    }
    if (Jc > J) break;
    theta.swap(cand);
    J = Jc;
    diag.iterations = e + 1;
  }
  if (!diag.converged) diag.warnings.push_back("logistic regression did not reach the gradient tolerance");

  p.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(K * d));
  p.bias.assign(theta.begin() + static_cast<std::ptrdiff_t>(K * d), theta.end());
  auto support = build_support(data, rows);
  return EnsembleMember(ClassifierKind::logistic, std::move(known), std::move(p), std::move(support), d, 0,
                        std::move(diag));
}

EnsembleMember train_one_class(const LabeledFrameSet& data, const OneClassOptions& options) {
  require_data(data);
  if (!(options.quantile > 0.0 && options.quantile < 1.0)) throw InvalidArgument("one-class quantile must be in (0,1)");
  auto known = data.distinct_labels();
  if (known.size() != 1) throw InvalidArgument("one-class training needs exactly one label");
  auto rows = rows_by_label(data, known);

  TrainingDiagnostics diag;
  OneClassParams p;
  bool floored = false;
  p.density = fit_diag_gaussian(data, rows[0], &floored);
  diag.variance_floored = floored;
  if (data.size() < 2) diag.warnings.push_back("one-class member trained on a single frame");

  std::vector<double> ll;
  for (std::size_t i = 0; i < data.size(); ++i) ll.push_back(p.density.log_density(data.row(i)));
  double mean = std::accumulate(ll.begin(), ll.end(), 0.0) / static_cast<double>(ll.size());
  double var = 0.0;
  for (double v : ll) var += (v - mean) * (v - mean);
  double sd = std::sqrt(var / static_cast<double>(ll.size()));
  p.scale = sd > 1e-6 ? sd : 1.0;
  p.log_threshold = empirical_quantile(ll, options.quantile);

  auto support = build_support(data, rows);
  return EnsembleMember(ClassifierKind::one_class, std::move(known), std::move(p), std::move(support), data.dim(), 0,
                        std::move(diag));
}

}  // namespace nevil
