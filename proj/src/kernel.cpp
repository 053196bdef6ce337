#include "vus/kernel.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace vus {

namespace {

inline int cmp3(double a, double b) { return a < b ? 0 : (a == b ? 1 : 2); }

// Rows: cmp(t_i, t_l); columns: cmp(t_l, t_r). One table for all four
// coefficient cases so the tie handling cannot drift between code paths.
constexpr double kKernelTable[3][3] = {
    {1.0, 0.5, 0.0},
    {0.5, 1.0 / 6.0, 0.0},
    {0.0, 0.0, 0.0},
};

}  // namespace

double kernel_i(double t_i, double t_l, double t_r) {
  return kKernelTable[cmp3(t_i, t_l)][cmp3(t_l, t_r)];
}

SortedByTest::SortedByTest(const Eigen::VectorXd& t) {
  const int n = static_cast<int>(t.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return t[a] < t[b]; });
  group_of_.assign(n, 0);
  for (int pos = 0; pos < n; ++pos) {
    const int subj = order[pos];
    if (pos == 0 || t[subj] != t[order[pos - 1]]) {
      group_begin_.push_back(pos);
      members_.emplace_back();
    }
    group_of_[subj] = static_cast<int>(members_.size()) - 1;
    members_.back().push_back(subj);
  }
}

namespace {

// Per-group aggregates of the weight vectors.
struct GroupAgg {
  std::vector<double> w1, w2, w3;     // group sums
  std::vector<double> x12, x13, x23;  // within-group sum of products
  std::vector<double> x123;
};

GroupAgg group_aggregates(const SortedByTest& s, const std::vector<double>& w1,
                          const std::vector<double>& w2,
                          const std::vector<double>& w3) {
  const int G = s.n_groups();
  GroupAgg a;
  a.w1.assign(G, 0.0);
  a.w2.assign(G, 0.0);
  a.w3.assign(G, 0.0);
  a.x12.assign(G, 0.0);
  a.x13.assign(G, 0.0);
  a.x23.assign(G, 0.0);
  a.x123.assign(G, 0.0);
  for (int g = 0; g < G; ++g) {
    for (int j : s.members(g)) {
      a.w1[g] += w1[j];
      a.w2[g] += w2[j];
      a.w3[g] += w3[j];
      a.x12[g] += w1[j] * w2[j];
      a.x13[g] += w1[j] * w3[j];
      a.x23[g] += w2[j] * w3[j];
      a.x123[g] += w1[j] * w2[j] * w3[j];
    }
  }
  return a;
}

// Sum over ordered triples of distinct indices within one index set:
// sum x_i y_l z_r = XYZ - X*Syz - Y*Sxz - Z*Sxy + 2*Sxyz.
inline double distinct_triple_sum(double X, double Y, double Z, double Sxy,
                                  double Sxz, double Syz, double Sxyz) {
  return X * Y * Z - X * Syz - Y * Sxz - Z * Sxy + 2.0 * Sxyz;
}

}  // namespace

KernelSums weighted_kernel_sums(const SortedByTest& s,
                                const std::vector<double>& w1,
                                const std::vector<double>& w2,
                                const std::vector<double>& w3) {
  const int G = s.n_groups();
  const GroupAgg a = group_aggregates(s, w1, w2, w3);

  // Suffix sums of class-3 group weight, prefix sums of class-1.
  std::vector<double> suff3(G + 1, 0.0);
  for (int g = G - 1; g >= 0; --g) suff3[g] = suff3[g + 1] + a.w3[g];
  KahanSum num;
  double pre1 = 0.0;
  for (int g = 0; g < G; ++g) {
    const double p12 = a.w1[g] * a.w2[g] - a.x12[g];
    const double p23 = a.w2[g] * a.w3[g] - a.x23[g];
    num.add(a.w2[g] * pre1 * suff3[g + 1]);  // strict ordering
    num.add(0.5 * pre1 * p23);               // t_i < t_l = t_r
    num.add(0.5 * p12 * suff3[g + 1]);       // t_i = t_l < t_r
    num.add((1.0 / 6.0) * distinct_triple_sum(a.w1[g], a.w2[g], a.w3[g],
                                              a.x12[g], a.x13[g], a.x23[g],
                                              a.x123[g]));
    pre1 += a.w1[g];
  }

  const int n = s.n();
  double S1 = 0.0, S2 = 0.0, S3 = 0.0, X12 = 0.0, X13 = 0.0, X23 = 0.0,
         X123 = 0.0;
  for (int i = 0; i < n; ++i) {
    S1 += w1[i];
    S2 += w2[i];
    S3 += w3[i];
    X12 += w1[i] * w2[i];
    X13 += w1[i] * w3[i];
    X23 += w2[i] * w3[i];
    X123 += w1[i] * w2[i] * w3[i];
  }
  KernelSums out;
  out.numerator = num.value();
  out.count = distinct_triple_sum(S1, S2, S3, X12, X13, X23, X123);
  return out;
}

KernelSums weighted_kernel_sums_naive(const Eigen::VectorXd& t,
                                      const std::vector<double>& w1,
                                      const std::vector<double>& w2,
                                      const std::vector<double>& w3) {
  const int n = static_cast<int>(t.size());
  KahanSum num, cnt;
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      if (l == i) continue;
      const double w12 = w1[i] * w2[l];
      for (int r = 0; r < n; ++r) {
        if (r == i || r == l) continue;
        const double w = w12 * w3[r];
        cnt.add(w);
        num.add(w * kernel_i(t[i], t[l], t[r]));
      }
    }
  }
  KernelSums out;
  out.numerator = num.value();
  out.count = cnt.value();
  return out;
}

double vus_from_sums(const KernelSums& sums) {
  if (sums.count == 0.0) throw ZeroDenominator();
  return sums.numerator / sums.count;
}

void split_weights(const std::vector<WeightTriple>& w, std::vector<double>& w1,
                   std::vector<double>& w2, std::vector<double>& w3) {
  const std::size_t n = w.size();
  w1.resize(n);
  w2.resize(n);
  w3.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w1[i] = w[i].w1;
    w2[i] = w[i].w2;
    w3[i] = w[i].w3;
  }
}

double vus_naive(const std::vector<WeightTriple>& weights,
                 const Eigen::VectorXd& t) {
  std::vector<double> w1, w2, w3;
  split_weights(weights, w1, w2, w3);
  return vus_from_sums(weighted_kernel_sums_naive(t, w1, w2, w3));
}

double vus_fast(const std::vector<WeightTriple>& weights,
                const Eigen::VectorXd& t) {
  std::vector<double> w1, w2, w3;
  split_weights(weights, w1, w2, w3);
  SortedByTest sorted(t);
  return vus_from_sums(weighted_kernel_sums(sorted, w1, w2, w3));
}

PositionSums position_sums(const SortedByTest& s, const std::vector<double>& w1,
                           const std::vector<double>& w2,
                           const std::vector<double>& w3) {
  const int n = s.n();
  const int G = s.n_groups();
  const GroupAgg a = group_aggregates(s, w1, w2, w3);

  // suffix aggregates over groups strictly above g
  std::vector<double> T3(G + 1, 0.0);   // sum of W3
  std::vector<double> SA(G + 1, 0.0);   // sum of W2_g' * T3(g'+1)  (strictly increasing pair)
  std::vector<double> SB(G + 1, 0.0);   // sum of within-group pair sums P23
  for (int g = G - 1; g >= 0; --g) {
    T3[g] = T3[g + 1] + a.w3[g];
    SA[g] = SA[g + 1] + a.w2[g] * T3[g + 1];
    SB[g] = SB[g + 1] + (a.w2[g] * a.w3[g] - a.x23[g]);
  }
  // prefix aggregates over groups strictly below g
  std::vector<double> L1(G + 1, 0.0);  // sum of W1
  std::vector<double> SC(G + 1, 0.0);  // sum of W2_g'' * L1(g'')
  std::vector<double> SD(G + 1, 0.0);  // sum of within-group pair sums P12
  for (int g = 0; g < G; ++g) {
    L1[g + 1] = L1[g] + a.w1[g];
    SC[g + 1] = SC[g] + a.w2[g] * L1[g];
    SD[g + 1] = SD[g] + (a.w1[g] * a.w2[g] - a.x12[g]);
  }

  double S1 = 0, S2 = 0, S3 = 0, X12 = 0, X13 = 0, X23 = 0;
  for (int i = 0; i < n; ++i) {
    S1 += w1[i];
    S2 += w2[i];
    S3 += w3[i];
    X12 += w1[i] * w2[i];
    X13 += w1[i] * w3[i];
    X23 += w2[i] * w3[i];
  }

  PositionSums out;
  for (auto& v : out.num) v.assign(n, 0.0);
  for (auto& v : out.cnt) v.assign(n, 0.0);

  for (int i = 0; i < n; ++i) {
    const int g = s.group_of(i);
    const double W1g = a.w1[g], W2g = a.w2[g], W3g = a.w3[g];
    // pair sums within i's group with subject i removed
    const double p23i =
        (W2g - w2[i]) * (W3g - w3[i]) - (a.x23[g] - w2[i] * w3[i]);
    const double p13i =
        (W1g - w1[i]) * (W3g - w3[i]) - (a.x13[g] - w1[i] * w3[i]);
    const double p12i =
        (W1g - w1[i]) * (W2g - w2[i]) - (a.x12[g] - w1[i] * w2[i]);

    // role 1: i in the class-1 slot, (l, r) drawn from the others
    out.num[0][i] = SA[g + 1] + 0.5 * SB[g + 1] +
                    0.5 * (W2g - w2[i]) * T3[g + 1] + (1.0 / 6.0) * p23i;
    // role 2: i in the class-2 slot
    out.num[1][i] = L1[g] * T3[g + 1] + 0.5 * L1[g] * (W3g - w3[i]) +
                    0.5 * (W1g - w1[i]) * T3[g + 1] + (1.0 / 6.0) * p13i;
    // role 3: i in the class-3 slot
    out.num[2][i] = SC[g] + 0.5 * L1[g] * (W2g - w2[i]) + 0.5 * SD[g] +
                    (1.0 / 6.0) * p12i;

    out.cnt[0][i] = (S2 - w2[i]) * (S3 - w3[i]) - (X23 - w2[i] * w3[i]);
    out.cnt[1][i] = (S1 - w1[i]) * (S3 - w3[i]) - (X13 - w1[i] * w3[i]);
    out.cnt[2][i] = (S1 - w1[i]) * (S2 - w2[i]) - (X12 - w1[i] * w2[i]);
  }
  return out;
}

PositionSums position_sums_naive(const Eigen::VectorXd& t,
                                 const std::vector<double>& w1,
                                 const std::vector<double>& w2,
                                 const std::vector<double>& w3) {
  const int n = static_cast<int>(t.size());
  PositionSums out;
  for (auto& v : out.num) v.assign(n, 0.0);
  for (auto& v : out.cnt) v.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    KahanSum n1, n2, n3, c1, c2, c3;
    for (int l = 0; l < n; ++l) {
      if (l == i) continue;
      for (int r = 0; r < n; ++r) {
        if (r == i || r == l) continue;
        n1.add(kernel_i(t[i], t[l], t[r]) * w2[l] * w3[r]);
        c1.add(w2[l] * w3[r]);
        n2.add(kernel_i(t[l], t[i], t[r]) * w1[l] * w3[r]);
        c2.add(w1[l] * w3[r]);
        n3.add(kernel_i(t[l], t[r], t[i]) * w1[l] * w2[r]);
        c3.add(w1[l] * w2[r]);
      }
    }
    out.num[0][i] = n1.value();
    out.num[1][i] = n2.value();
    out.num[2][i] = n3.value();
    out.cnt[0][i] = c1.value();
    out.cnt[1][i] = c2.value();
    out.cnt[2][i] = c3.value();
  }
  return out;
}

}  // namespace vus
