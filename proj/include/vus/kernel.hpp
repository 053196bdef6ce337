#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vus/data.hpp"

namespace vus {

/// Tie-aware three-class concordance kernel. Returns 1 for t_i < t_l < t_r,
/// 1/2 for the two single-tie patterns t_i < t_l = t_r and t_i = t_l < t_r,
/// 1/6 when all three are tied, 0 otherwise.
double kernel_i(double t_i, double t_l, double t_r);

/// Weighted kernel sums over ordered triples of distinct subject indices:
///   numerator = sum K(t_i,t_l,t_r) w1_i w2_l w3_r,  count = sum w1_i w2_l w3_r.
struct KernelSums {
  double numerator = 0.0;
  double count = 0.0;
};

/// Sort order and tie groups of a test-value vector; built once, reused by
/// every weighted accumulation over the same t.
class SortedByTest {
 public:
  explicit SortedByTest(const Eigen::VectorXd& t);

  int n() const { return static_cast<int>(group_of_.size()); }
  int n_groups() const { return static_cast<int>(group_begin_.size()); }
  int group_of(int subject) const { return group_of_[subject]; }
  /// Subjects of group g (indices into the original order).
  const std::vector<int>& members(int g) const { return members_[g]; }

 private:
  std::vector<int> group_of_;
  std::vector<int> group_begin_;
  std::vector<std::vector<int>> members_;
};

/// O(n) accumulation (after sorting) of the triple sums via per-group prefix
/// and suffix aggregates with explicit handling of the 1/2 and 1/6 tie terms.
KernelSums weighted_kernel_sums(const SortedByTest& sorted,
                                const std::vector<double>& w1,
                                const std::vector<double>& w2,
                                const std::vector<double>& w3);

/// Exact O(n^3) triple loop; the testing oracle for the fast path.
KernelSums weighted_kernel_sums_naive(const Eigen::VectorXd& t,
                                      const std::vector<double>& w1,
                                      const std::vector<double>& w2,
                                      const std::vector<double>& w3);

/// Ratio of weighted kernel sum to weighted count. Throws ZeroDenominator.
double vus_from_sums(const KernelSums& sums);

double vus_naive(const std::vector<WeightTriple>& weights, const Eigen::VectorXd& t);
double vus_fast(const std::vector<WeightTriple>& weights, const Eigen::VectorXd& t);

/// Per-subject conditional kernel/count sums with subject i placed in each of
/// the three class roles; the building block of the variance projection term.
/// For each i (excluding i from the (l,r) pair ranges):
///   num[k][i]  = sum over ordered pairs of distinct others of
///                K(triple with i in role k) * (other two weights)
///   cnt[k][i]  = matching weight-only sum.
struct PositionSums {
  std::array<std::vector<double>, 3> num;
  std::array<std::vector<double>, 3> cnt;
};

PositionSums position_sums(const SortedByTest& sorted,
                           const std::vector<double>& w1,
                           const std::vector<double>& w2,
                           const std::vector<double>& w3);

PositionSums position_sums_naive(const Eigen::VectorXd& t,
                                 const std::vector<double>& w1,
                                 const std::vector<double>& w2,
                                 const std::vector<double>& w3);

/// Splits weight triples into the three per-class vectors.
void split_weights(const std::vector<WeightTriple>& w,
                   std::vector<double>& w1,
                   std::vector<double>& w2,
                   std::vector<double>& w3);

}  // namespace vus
