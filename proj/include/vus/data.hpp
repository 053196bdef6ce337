#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "vus/common.hpp"

namespace vus {

/// One study subject: test value, covariates, verification flag and
/// (possibly missing) trinomial disease class in {1,2,3}.
struct Subject {
  double t = 0.0;
  Eigen::VectorXd a;
  bool verified = false;
  std::optional<int> disease;
};

/// Per-subject pseudo-indicators of the three classes. Only finiteness is
/// an invariant: PDR weights may be negative.
struct WeightTriple {
  double w1 = 0.0;
  double w2 = 0.0;
  double w3 = 0.0;
};

enum class Method { FI, MSI, IPW, PDR, Naive, Full };

const char* method_name(Method m);

/// Column-oriented sample. `d_obs` is 0 when the disease status is missing
/// (unverified subjects); `d_true` is 0 unless the dataset was simulated with
/// retained truth. `a1_cols` lists the covariate columns entering the
/// verification model; the remaining columns are the instrumental block A2.
class Dataset {
 public:
  Eigen::VectorXd t;
  Eigen::MatrixXd a;  // n x m
  std::vector<std::uint8_t> v;
  std::vector<int> d_obs;
  std::vector<int> d_true;
  std::vector<std::string> covariate_names;
  std::vector<int> a1_cols;

  int n() const { return static_cast<int>(t.size()); }
  int n_covariates() const { return static_cast<int>(a.cols()); }
  int n_verified() const;

  /// Values of the A1 block for subject i, in a1_cols order.
  Eigen::VectorXd a1(int i) const;

  /// Covariate columns not in a1_cols (the instrumental block), sorted.
  std::vector<int> a2_cols() const;

  static Dataset from_subjects(const std::vector<Subject>& subjects,
                               std::vector<std::string> covariate_names,
                               std::vector<int> a1_cols);

  /// Structural checks: sizes agree, v binary, d codes valid, a1_cols a
  /// subset of columns without duplicates. Throws SchemaError.
  void validate() const;
};

}  // namespace vus
