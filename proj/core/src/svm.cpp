#include "kupred/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "kupred/errors.hpp"

#include <json.hpp>

namespace kupred::svm {

Kernel kernel_from_string(std::string_view s) {
  if (s == "linear") return Kernel::Linear;
  if (s == "poly") return Kernel::Poly;
  if (s == "rbf") return Kernel::Rbf;
  if (s == "sigmoid") return Kernel::Sigmoid;
  throw ConfigError("unknown kernel: " + std::string(s));
}

std::string to_string(Kernel k) {
  switch (k) {
    case Kernel::Linear: return "linear";
    case Kernel::Poly: return "poly";
    case Kernel::Rbf: return "rbf";
    case Kernel::Sigmoid: return "sigmoid";
  }
  return "?";
}

void SvmParams::validate() const {
  if (!(c > 0.0)) throw ConfigError("svm: C must be > 0");
  if (gamma < 0.0) throw ConfigError("svm: gamma must be >= 0");
  if (degree < 1) throw ConfigError("svm: degree must be >= 1");
}

double kernel_eval(const SvmParams& params, std::span<const double> x,
                   std::span<const double> y) {
  if (x.size() != y.size())
    throw ArgumentError("kernel_eval: dimension mismatch");
  switch (params.kernel) {
    case Kernel::Linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return s;
    }
    case Kernel::Poly: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return std::pow(params.gamma * s + params.coef0, params.degree);
    }
    case Kernel::Rbf: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        d2 += d * d;
      }
      return std::exp(-params.gamma * d2);
    }
    case Kernel::Sigmoid: {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
      return std::tanh(params.gamma * s + params.coef0);
    }
  }
  throw ArgumentError("kernel_eval: bad kernel enum");
}

namespace {

constexpr double kAlphaEps = 1e-10;

// Platt-style SMO working state.
class SmoSolver {
public:
  SmoSolver(const Matrix& x, const std::vector<int>& y,
            const SvmParams& params, const SmoConfig& cfg)
      : x_(x), y_(y), params_(params), cfg_(cfg), n_(x.size()),
        alpha_(n_, 0.0), error_(n_), bias_(0.0) {
    cache_full_ = n_ <= cfg.cache_rows_limit;
    if (cache_full_) {
      cache_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i; j < n_; ++j)
          cache_[i * n_ + j] = cache_[j * n_ + i] =
              kernel_eval(params_, x_[i], x_[j]);
    }
    // alpha = 0 everywhere, so f(x_i) = bias = 0 initially.
    for (std::size_t i = 0; i < n_; ++i) error_[i] = -y_[i];
  }

  void solve() {
    long iterations = 0;
    bool examine_all = true;
    int passes_without_progress = 0;
    while (passes_without_progress < cfg_.max_passes &&
           iterations < cfg_.max_iterations) {
      int changed = 0;
      if (examine_all) {
        for (std::size_t i = 0; i < n_ && iterations < cfg_.max_iterations;
             ++i)
          changed += examine(i, iterations);
      } else {
        for (std::size_t i = 0; i < n_ && iterations < cfg_.max_iterations;
             ++i)
          if (alpha_[i] > kAlphaEps && alpha_[i] < params_.c - kAlphaEps)
            changed += examine(i, iterations);
      }
      if (examine_all) {
        if (changed == 0)
          ++passes_without_progress;
        else
          passes_without_progress = 0;
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
    iterations_ = iterations;
    recenter_bias();
  }

  double dual_objective() const {
    double obj = 0.0;
    for (std::size_t i = 0; i < n_; ++i) obj += alpha_[i];
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] <= kAlphaEps) continue;
      for (std::size_t j = 0; j < n_; ++j) {
        if (alpha_[j] <= kAlphaEps) continue;
        obj -= 0.5 * alpha_[i] * alpha_[j] * y_[i] * y_[j] * k(i, j);
      }
    }
    return obj;
  }

  double max_kkt_violation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double r = y_[i] * error_[i];
      if (alpha_[i] < params_.c - kAlphaEps) worst = std::max(worst, -r);
      if (alpha_[i] > kAlphaEps) worst = std::max(worst, r);
    }
    return worst;
  }

  BinaryModel extract(int label_neg, int label_pos) const {
    BinaryModel m;
    m.params = params_;
    m.label_neg = label_neg;
    m.label_pos = label_pos;
    m.bias = bias_;
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] > kAlphaEps) {
        m.support_vectors.push_back(x_[i]);
        m.dual_coefs.push_back(alpha_[i] * y_[i]);
      }
    }
    return m;
  }

  long iterations() const { return iterations_; }

private:
  double k(std::size_t i, std::size_t j) const {
    if (cache_full_) return cache_[i * n_ + j];
    return kernel_eval(params_, x_[i], x_[j]);
  }

  // When the last step leaves no free alphas the averaged threshold can
  // sit anywhere in the feasible interval; recenter it so the reported
  // violations reflect the best threshold the final alphas admit.
  void recenter_bias() {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      // g_i is the threshold-free decision value.
      double g = error_[i] + y_[i] + bias_;
      double bound = g - y_[i];
      bool can_rise = alpha_[i] < params_.c - kAlphaEps;
      bool can_fall = alpha_[i] > kAlphaEps;
      if ((y_[i] > 0 && can_rise) || (y_[i] < 0 && can_fall))
        hi = std::min(hi, bound);
      if ((y_[i] < 0 && can_rise) || (y_[i] > 0 && can_fall))
        lo = std::max(lo, bound);
    }
    if (!std::isfinite(lo) && !std::isfinite(hi)) return;
    double new_bias;
    if (!std::isfinite(lo))
      new_bias = hi;
    else if (!std::isfinite(hi))
      new_bias = lo;
    else
      new_bias = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < n_; ++i) error_[i] -= new_bias - bias_;
    bias_ = new_bias;
  }

  int examine(std::size_t i2, long& iterations) {
    double r2 = y_[i2] * error_[i2];
    bool violates = (r2 < -cfg_.tolerance && alpha_[i2] < params_.c - kAlphaEps) ||
                    (r2 > cfg_.tolerance && alpha_[i2] > kAlphaEps);
    if (!violates) return 0;

    // Second-choice heuristic: maximize |E1 - E2| over non-bound points.
    std::size_t best = n_;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (i == i2 || alpha_[i] <= kAlphaEps || alpha_[i] >= params_.c - kAlphaEps)
        continue;
      double gap = std::abs(error_[i] - error_[i2]);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best < n_ && take_step(best, i2)) {
      ++iterations;
      return 1;
    }
    // Fall back to scanning everything from a deterministic start.
    for (std::size_t off = 0; off < n_; ++off) {
      std::size_t i1 = (i2 + 1 + off) % n_;
      if (i1 == i2) continue;
      if (take_step(i1, i2)) {
        ++iterations;
        return 1;
      }
    }
    return 0;
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    double a1 = alpha_[i1], a2 = alpha_[i2];
    int y1 = y_[i1], y2 = y_[i2];
    double e1 = error_[i1], e2 = error_[i2];
    double s = y1 * y2;

    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(params_.c, params_.c + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - params_.c);
      hi = std::min(params_.c, a1 + a2);
    }
    if (lo >= hi) return false;

    double k11 = k(i1, i1), k12 = k(i1, i2), k22 = k(i2, i2);
    double eta = k11 + k22 - 2.0 * k12;
    double a2_new;
    if (eta > 0) {
      a2_new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Flat or concave direction: evaluate the objective at both ends.
      double f1 = y1 * (e1 + bias_) - a1 * k11 - s * a2 * k12;
      double f2 = y2 * (e2 + bias_) - s * a1 * k12 - a2 * k22;
      double l1 = a1 + s * (a2 - lo);
      double h1 = a1 + s * (a2 - hi);
      double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 +
                      0.5 * lo * lo * k22 + s * lo * l1 * k12;
      double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 +
                      0.5 * hi * hi * k22 + s * hi * h1 * k12;
      if (obj_lo < obj_hi - 1e-12)
        a2_new = lo;
      else if (obj_lo > obj_hi + 1e-12)
        a2_new = hi;
      else
        return false;
    }
    if (std::abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;

    double a1_new = a1 + s * (a2 - a2_new);
    if (a1_new < 0) a1_new = 0;
    if (a1_new > params_.c) a1_new = params_.c;

    double b1 = e1 + y1 * (a1_new - a1) * k11 + y2 * (a2_new - a2) * k12 +
                bias_;
    double b2 = e2 + y1 * (a1_new - a1) * k12 + y2 * (a2_new - a2) * k22 +
                bias_;
    double new_bias;
    if (a1_new > kAlphaEps && a1_new < params_.c - kAlphaEps)
      new_bias = b1;
    else if (a2_new > kAlphaEps && a2_new < params_.c - kAlphaEps)
      new_bias = b2;
    else
      new_bias = 0.5 * (b1 + b2);

    double d1 = y1 * (a1_new - a1);
    double d2 = y2 * (a2_new - a2);
    for (std::size_t i = 0; i < n_; ++i)
      error_[i] += d1 * k(i1, i) + d2 * k(i2, i) - (new_bias - bias_);

    alpha_[i1] = a1_new;
    alpha_[i2] = a2_new;
    bias_ = new_bias;
    return true;
  }

  const Matrix& x_;
  const std::vector<int>& y_;
  SvmParams params_;
  SmoConfig cfg_;
  std::size_t n_;
  std::vector<double> alpha_;
  std::vector<double> error_;  // f(x_i) - y_i
  double bias_;
  bool cache_full_ = false;
  std::vector<double> cache_;
  long iterations_ = 0;
};

}  // namespace

double BinaryModel::decision(std::span<const double> x) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < support_vectors.size(); ++i)
    sum += dual_coefs[i] * kernel_eval(params, support_vectors[i], x);
  return sum - bias;
}

BinaryModel train_binary(const Matrix& features, const std::vector<int>& labels,
                         const SvmParams& params, const SmoConfig& smo,
                         TrainInfo* info) {
  params.validate();
  if (features.size() != labels.size())
    throw ArgumentError("train_binary: features/labels length mismatch");
  if (features.empty()) throw DataError("train_binary: empty training set");
  const std::size_t dim = features[0].size();
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim)
      throw ArgumentError("train_binary: ragged feature rows");
    for (double v : features[i])
      if (!std::isfinite(v))
        throw ArgumentError("train_binary: non-finite feature value");
    if (labels[i] == 1)
      has_pos = true;
    else if (labels[i] == -1)
      has_neg = true;
    else
      throw ArgumentError("train_binary: labels must be -1 or +1");
  }
  if (!has_pos || !has_neg)
    throw DataError("train_binary: need at least one example of each class");

  SmoSolver solver(features, labels, params, smo);
  solver.solve();
  if (info) {
    info->dual_objective = solver.dual_objective();
    info->max_kkt_violation = solver.max_kkt_violation();
    info->iterations = solver.iterations();
  }
  return solver.extract(-1, 1);
}

int MulticlassModel::predict(std::span<const double> x) const {
  std::vector<int> votes(classes.size(), 0);
  for (const auto& m : models) {
    int winner = m.decision(x) > 0 ? m.label_pos : m.label_neg;
    auto it = std::lower_bound(classes.begin(), classes.end(), winner);
    votes[static_cast<std::size_t>(it - classes.begin())]++;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < votes.size(); ++i)
    if (votes[i] > votes[best]) best = i;  // ties keep the lowest class
  return classes[best];
}

MulticlassModel train_multiclass(const Matrix& features,
                                 const std::vector<int>& labels,
                                 const SvmParams& params,
                                 const SmoConfig& smo) {
  if (features.size() != labels.size())
    throw ArgumentError("train_multiclass: features/labels length mismatch");
  std::set<int> class_set(labels.begin(), labels.end());
  if (class_set.size() < 2)
    throw DataError("train_multiclass: need at least 2 classes");

  MulticlassModel model;
  model.classes.assign(class_set.begin(), class_set.end());
  for (std::size_t a = 0; a < model.classes.size(); ++a) {
    for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
      int ca = model.classes[a], cb = model.classes[b];
      Matrix sub_x;
      std::vector<int> sub_y;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == ca) {
          sub_x.push_back(features[i]);
          sub_y.push_back(-1);
        } else if (labels[i] == cb) {
          sub_x.push_back(features[i]);
          sub_y.push_back(1);
        }
      }
      BinaryModel bm = train_binary(sub_x, sub_y, params, smo);
      bm.label_neg = ca;
      bm.label_pos = cb;
      model.models.push_back(std::move(bm));
    }
  }
  return model;
}

void save_model(const MulticlassModel& model, std::ostream& out) {
  nlohmann::json j;
  j["classes"] = model.classes;
  j["models"] = nlohmann::json::array();
  for (const auto& m : model.models) {
    nlohmann::json jm;
    jm["c"] = m.params.c;
    jm["kernel"] = to_string(m.params.kernel);
    jm["gamma"] = m.params.gamma;
    jm["coef0"] = m.params.coef0;
    jm["degree"] = m.params.degree;
    jm["label_neg"] = m.label_neg;
    jm["label_pos"] = m.label_pos;
    jm["bias"] = m.bias;
    jm["support_vectors"] = m.support_vectors;
    jm["dual_coefs"] = m.dual_coefs;
    j["models"].push_back(std::move(jm));
  }
  out << j.dump(1) << "\n";
}

MulticlassModel load_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  MulticlassModel model;
  model.classes = j.at("classes").get<std::vector<int>>();
  for (const auto& jm : j.at("models")) {
    BinaryModel m;
    m.params.c = jm.at("c").get<double>();
    m.params.kernel = kernel_from_string(jm.at("kernel").get<std::string>());
    m.params.gamma = jm.at("gamma").get<double>();
    m.params.coef0 = jm.at("coef0").get<double>();
    m.params.degree = jm.at("degree").get<int>();
    m.label_neg = jm.at("label_neg").get<int>();
    m.label_pos = jm.at("label_pos").get<int>();
    m.bias = jm.at("bias").get<double>();
    m.support_vectors = jm.at("support_vectors").get<Matrix>();
    m.dual_coefs = jm.at("dual_coefs").get<std::vector<double>>();
    model.models.push_back(std::move(m));
  }
  return model;
}

}  // namespace kupred::svm
