#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kupred::svm {

using Matrix = std::vector<std::vector<double>>;

enum class Kernel { Linear, Poly, Rbf, Sigmoid };

Kernel kernel_from_string(std::string_view s);
std::string to_string(Kernel k);

struct SvmParams {
  double c = 1.0;
  Kernel kernel = Kernel::Rbf;
  double gamma = 0.0;   // 0 is a legal tuning-range value, not "auto"
  double coef0 = 0.0;
  int degree = 3;

  void validate() const;
};

struct SmoConfig {
  double tolerance = 1e-3;       // KKT tolerance
  int max_passes = 10;           // passes without progress before stopping
  long max_iterations = 200000;  // hard safety cap on pair updates
  std::size_t cache_rows_limit = 4096;  // full kernel cache below this
};

double kernel_eval(const SvmParams& params, std::span<const double> x,
                   std::span<const double> y);

struct BinaryModel {
  SvmParams params;
  int label_neg = 0;  // class mapped to -1
  int label_pos = 1;  // class mapped to +1
  Matrix support_vectors;
  std::vector<double> dual_coefs;  // alpha_i * y_i, every alpha_i > 0
  double bias = 0.0;

  double decision(std::span<const double> x) const;
};

struct TrainInfo {
  double dual_objective = 0.0;
  double max_kkt_violation = 0.0;
  long iterations = 0;
};

// Platt-style SMO on the soft-margin dual. Labels must be -1/+1 and both
// present.
BinaryModel train_binary(const Matrix& features, const std::vector<int>& labels,
                         const SvmParams& params, const SmoConfig& smo = {},
                         TrainInfo* info = nullptr);

struct MulticlassModel {
  std::vector<int> classes;          // sorted ascending
  std::vector<BinaryModel> models;   // one per unordered class pair

  // Majority vote; ties broken by lowest class index.
  int predict(std::span<const double> x) const;
};

MulticlassModel train_multiclass(const Matrix& features,
                                 const std::vector<int>& labels,
                                 const SvmParams& params,
                                 const SmoConfig& smo = {});

void save_model(const MulticlassModel& model, std::ostream& out);
MulticlassModel load_model(std::istream& in);

}  // namespace kupred::svm
