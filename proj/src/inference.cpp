#include "vus/inference.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vus {

ScoreStack build_score_stack(const MeanScoreProblem& problem,
                             const DiseaseFit& disease, const Gamma& gamma) {
  const Dataset& data = *problem.data;
  const int n = data.n();
  const int p_eta = problem.p_eta;
  const int q = problem.q;

  ScoreStack st;
  st.u = Eigen::MatrixXd::Zero(n, p_eta);
  st.s = Eigen::MatrixXd::Zero(n, q);
  st.h_eta = Eigen::MatrixXd::Zero(p_eta, p_eta);

  for (int i = 0; i < n; ++i) {
    st.s.row(i) = s_term(gamma, problem, i).transpose();
    if (data.v[i]) {
      const Eigen::VectorXd x = problem.x_dis.row(i).transpose();
      st.u.row(i) = score_u(disease.eta_hat, x, data.d_obs[i]).transpose();
      st.h_eta += score_u_jacobian(disease.eta_hat, x);
    }
  }
  const ScoreJacobians j = jacobian_s(gamma, problem, false);
  st.h_s_gamma = j.d_gamma;
  st.h_s_eta = j.d_eta;
  return st;
}

std::vector<double> lambda_hats(const SortedByTest& sorted,
                                const std::vector<WeightTriple>& w,
                                double mu_hat) {
  const int n = sorted.n();
  std::vector<double> w1, w2, w3;
  split_weights(w, w1, w2, w3);
  const PositionSums ps = position_sums(sorted, w1, w2, w3);
  std::vector<double> out(n);
  const double norm = 1.0 / (static_cast<double>(n - 1) * (n - 2));
  for (int i = 0; i < n; ++i) {
    const double g1 = w1[i] * (ps.num[0][i] - mu_hat * ps.cnt[0][i]);
    const double g2 = w2[i] * (ps.num[1][i] - mu_hat * ps.cnt[1][i]);
    const double g3 = w3[i] * (ps.num[2][i] - mu_hat * ps.cnt[2][i]);
    out[i] = (g1 + g2 + g3) * norm;
  }
  return out;
}

std::vector<double> lambda_hats_naive(const Eigen::VectorXd& t,
                                      const std::vector<WeightTriple>& w,
                                      double mu_hat) {
  const int n = static_cast<int>(t.size());
  std::vector<double> w1, w2, w3;
  split_weights(w, w1, w2, w3);
  const PositionSums ps = position_sums_naive(t, w1, w2, w3);
  std::vector<double> out(n);
  const double norm = 1.0 / (static_cast<double>(n - 1) * (n - 2));
  for (int i = 0; i < n; ++i) {
    const double g1 = w1[i] * (ps.num[0][i] - mu_hat * ps.cnt[0][i]);
    const double g2 = w2[i] * (ps.num[1][i] - mu_hat * ps.cnt[1][i]);
    const double g3 = w3[i] * (ps.num[2][i] - mu_hat * ps.cnt[2][i]);
    out[i] = (g1 + g2 + g3) * norm;
  }
  return out;
}

Eigen::VectorXd average_g_jacobian(const SortedByTest& sorted,
                                   const std::vector<WeightTriple>& w,
                                   const WeightDerivs& derivs, double mu_hat) {
  const int n = sorted.n();
  std::vector<double> w1, w2, w3;
  split_weights(w, w1, w2, w3);
  const int p_eta = static_cast<int>(derivs.d_eta[0].cols());
  const int q = static_cast<int>(derivs.d_gamma[0].cols());
  Eigen::VectorXd jac = Eigen::VectorXd::Zero(p_eta + q);
  const double norm = 1.0 / (static_cast<double>(n - 1) * (n - 2));

  std::vector<double> dcol(n);
  auto component = [&](int k_class, const std::vector<double>& d) {
    // derivative vector in role k_class, plain weights in the other two roles
    KernelSums s{};
    switch (k_class) {
      case 0: s = weighted_kernel_sums(sorted, d, w2, w3); break;
      case 1: s = weighted_kernel_sums(sorted, w1, d, w3); break;
      default: s = weighted_kernel_sums(sorted, w1, w2, d); break;
    }
    return s.numerator - mu_hat * s.count;
  };

  for (int c = 0; c < p_eta + q; ++c) {
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Eigen::MatrixXd& m =
          c < p_eta ? derivs.d_eta[k] : derivs.d_gamma[k];
      const int col = c < p_eta ? c : c - p_eta;
      if (m.col(col).isZero(0.0)) continue;
      for (int i = 0; i < n; ++i) dcol[i] = m(i, col);
      total += component(k, dcol);
    }
    jac[c] = total * norm;
  }
  return jac;
}

std::vector<double> q_hats(const ScoreStack& stack,
                           const Eigen::VectorXd& avg_jacobian,
                           const std::vector<int>* estimated) {
  const int p_eta = static_cast<int>(stack.h_eta.rows());
  const int q = static_cast<int>(stack.h_s_gamma.rows());
  const int n = static_cast<int>(stack.u.rows());
  const int dim = p_eta + q;

  std::vector<int> cols;
  if (estimated) {
    cols = *estimated;
  } else {
    cols.resize(dim);
    for (int c = 0; c < dim; ++c) cols[c] = c;
  }
  const int d = static_cast<int>(cols.size());

  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(dim, dim);
  block.topLeftCorner(p_eta, p_eta) = stack.h_eta;
  block.bottomLeftCorner(q, p_eta) = stack.h_s_eta;
  block.bottomRightCorner(q, q) = stack.h_s_gamma;

  Eigen::MatrixXd m(d, d);
  Eigen::VectorXd jac(d);
  for (int r = 0; r < d; ++r) {
    jac[r] = avg_jacobian[cols[r]];
    for (int c = 0; c < d; ++c) m(r, c) = block(cols[r], cols[c]);
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(d - 1);
  if (!(smin > 0.0) || smax / smin > 1e12)
    throw SingularInformation(smin > 0.0 ? smax / smin : INFINITY);

  // Q_i = -avg_jac * M^{-1} * stack_i; one transpose-solve, then dot products.
  const Eigen::VectorXd yt =
      Eigen::PartialPivLU<Eigen::MatrixXd>(m.transpose()).solve(jac);

  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double dot = 0.0;
    for (int r = 0; r < d; ++r) {
      const int c = cols[r];
      const double stack_val =
          c < p_eta ? stack.u(i, c) : stack.s(i, c - p_eta);
      dot += yt[r] * stack_val;
    }
    out[i] = -dot;
  }
  return out;
}

double asymptotic_se_from_parts(const std::vector<double>& lambda,
                                const std::vector<double>& q,
                                const std::vector<WeightTriple>& w) {
  const int n = static_cast<int>(w.size());
  double p1 = 0, p2 = 0, p3 = 0;
  for (const auto& wi : w) {
    p1 += wi.w1;
    p2 += wi.w2;
    p3 += wi.w3;
  }
  p1 /= n;
  p2 /= n;
  p3 /= n;
  if (p1 == 0.0) throw ZeroClassPrevalence(1);
  if (p2 == 0.0) throw ZeroClassPrevalence(2);
  if (p3 == 0.0) throw ZeroClassPrevalence(3);

  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += lambda[i] + q[i];
  mean /= n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = lambda[i] + q[i] - mean;
    ss += c * c;
  }
  const double sigma2 = ss / (n - 1) / ((p1 * p2 * p3) * (p1 * p2 * p3));
  return std::sqrt(sigma2 / n);
}

double asymptotic_se(Method method, const Dataset& data,
                     const DiseaseFit& disease, const SolverReport& report,
                     Link link, LambdaPath path) {
  const PseudoWeights w = pseudo_weights(method, data, &disease, &report, link);
  const SortedByTest sorted(data.t);
  const double mu = vus_from_sums([&] {
    std::vector<double> w1, w2, w3;
    split_weights(w.w, w1, w2, w3);
    return weighted_kernel_sums(sorted, w1, w2, w3);
  }());
  const std::vector<double> lam = path == LambdaPath::Fast
                                      ? lambda_hats(sorted, w.w, mu)
                                      : lambda_hats_naive(data.t, w.w, mu);
  std::vector<double> qs(data.n(), 0.0);
  if (method != Method::Naive && method != Method::Full) {
    const MeanScoreProblem problem = prepare_problem(data, disease, link, true);
    const ScoreStack stack = build_score_stack(problem, disease, report.gamma_hat);
    const WeightDerivs derivs =
        pseudo_weight_derivs(method, data, disease, report, link);
    const Eigen::VectorXd jac = average_g_jacobian(sorted, w.w, derivs, mu);
    qs = q_hats(stack, jac);
  }
  return asymptotic_se_from_parts(lam, qs, w.w);
}

SandwichCovariances sandwich_covariances(const ScoreStack& stack, int n) {
  const int p_eta = static_cast<int>(stack.h_eta.rows());
  const int q = static_cast<int>(stack.h_s_gamma.rows());

  auto check_solve = [](const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(a.rows() - 1);
    if (!(smin > 0.0) || smax / smin > 1e12)
      throw SingularInformation(smin > 0.0 ? smax / smin : INFINITY);
  };
  check_solve(stack.h_eta);
  check_solve(stack.h_s_gamma);

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu_eta(stack.h_eta);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu_gamma(stack.h_s_gamma);

  Eigen::MatrixXd b_eta = Eigen::MatrixXd::Zero(p_eta, p_eta);
  for (int i = 0; i < stack.u.rows(); ++i)
    b_eta += stack.u.row(i).transpose() * stack.u.row(i);
  Eigen::MatrixXd sigma_eta =
      n * lu_eta.solve(lu_eta.solve(b_eta).transpose()).transpose();

  // f_i = s_i - (sum ds/deta')(sum dVu/deta')^{-1} V_i u_i
  const Eigen::MatrixXd coupling =
      Eigen::PartialPivLU<Eigen::MatrixXd>(stack.h_eta.transpose())
          .solve(stack.h_s_eta.transpose())
          .transpose();
  Eigen::MatrixXd b_gamma = Eigen::MatrixXd::Zero(q, q);
  for (int i = 0; i < stack.s.rows(); ++i) {
    const Eigen::VectorXd f =
        stack.s.row(i).transpose() - coupling * stack.u.row(i).transpose();
    b_gamma += f * f.transpose();
  }
  Eigen::MatrixXd sigma_gamma =
      n * lu_gamma.solve(lu_gamma.solve(b_gamma).transpose()).transpose();

  SandwichCovariances out;
  out.sigma_eta = 0.5 * (sigma_eta + sigma_eta.transpose());
  out.sigma_gamma = 0.5 * (sigma_gamma + sigma_gamma.transpose());
  return out;
}

std::vector<WaldTest> gamma_wald_tests(const Gamma& gamma_hat,
                                       const Eigen::MatrixXd& sigma_gamma,
                                       int n,
                                       const std::vector<std::string>& a1_names) {
  std::vector<std::string> names = {"Intercept", "T"};
  for (const auto& a : a1_names) names.push_back(a);
  names.push_back("D1");
  names.push_back("D2");
  const Eigen::VectorXd g = gamma_hat.as_vector();
  std::vector<WaldTest> out;
  for (int j = 0; j < g.size(); ++j) {
    WaldTest t;
    t.name = names[j];
    t.estimate = g[j];
    t.se = std::sqrt(std::max(0.0, sigma_gamma(j, j)) / n);
    t.z = t.se > 0 ? t.estimate / t.se : 0.0;
    t.p_value = t.se > 0 ? normal_two_sided_p(t.z) : 1.0;
    out.push_back(t);
  }
  return out;
}

namespace {

Dataset resample_rows(const Dataset& data, std::mt19937_64& rng) {
  const int n = data.n();
  std::uniform_int_distribution<int> pick(0, n - 1);
  Dataset out;
  out.t.resize(n);
  out.a.resize(n, data.a.cols());
  out.v.resize(n);
  out.d_obs.resize(n);
  out.d_true.resize(n);
  out.covariate_names = data.covariate_names;
  out.a1_cols = data.a1_cols;
  for (int i = 0; i < n; ++i) {
    const int j = pick(rng);
    out.t[i] = data.t[j];
    out.a.row(i) = data.a.row(j);
    out.v[i] = data.v[j];
    out.d_obs[i] = data.d_obs[j];
    out.d_true[i] = data.d_true[j];
  }
  return out;
}

}  // namespace

BootstrapSummary bootstrap_ses(const std::vector<Method>& methods,
                               const Dataset& data, const DiseaseDesign& design,
                               Link link, int B, std::uint64_t seed) {
  if (B < 2) throw Error("bootstrap needs B >= 2");
  const int nm = static_cast<int>(methods.size());
  std::vector<std::vector<double>> per_resample(B);
  std::vector<std::uint8_t> ok(B, 0);

  parallel_for(B, [&](int b) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    try {
      const Dataset res = resample_rows(data, rng);
      const DiseaseFit dfit = fit_disease(res, design);
      if (!dfit.converged) return;
      const MeanScoreProblem problem = prepare_problem(res, dfit, link);
      const SolverReport rep = solve_gamma(problem);
      if (!rep.converged) return;
      std::vector<double> est(nm);
      for (int m = 0; m < nm; ++m)
        est[m] = estimate_vus(methods[m], res, &dfit, &rep, link);
      per_resample[b] = std::move(est);
      ok[b] = 1;
    } catch (const Error&) {
      // dropped and counted
    }
  });

  BootstrapSummary out;
  out.requested = B;
  out.estimates.resize(nm);
  for (int b = 0; b < B; ++b) {
    if (!ok[b]) {
      ++out.failed;
      continue;
    }
    for (int m = 0; m < nm; ++m) out.estimates[m].push_back(per_resample[b][m]);
  }
  const int survivors = B - out.failed;
  if (survivors < (B + 1) / 2) throw TooFewSuccessfulResamples(survivors, B);

  out.se.resize(nm);
  for (int m = 0; m < nm; ++m) {
    const auto& e = out.estimates[m];
    double mean = 0.0;
    for (double x : e) mean += x;
    mean /= survivors;
    double ss = 0.0;
    for (double x : e) ss += (x - mean) * (x - mean);
    out.se[m] = survivors > 1 ? std::sqrt(ss / (survivors - 1)) : 0.0;
  }
  return out;
}

double bootstrap_se(Method method, const Dataset& data,
                    const DiseaseDesign& design, Link link, int B,
                    std::uint64_t seed, int* n_failed) {
  const BootstrapSummary s = bootstrap_ses({method}, data, design, link, B, seed);
  if (n_failed) *n_failed = s.failed;
  return s.se[0];
}

}  // namespace vus
