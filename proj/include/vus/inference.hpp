#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "vus/estimators.hpp"

namespace vus {

enum class LambdaPath { Fast, Naive };

/// Per-subject stacked scores and summed score Jacobians of the two
/// estimating equations, at (eta_hat, gamma_hat). Shared by the variance
/// estimator across methods and by the sandwich covariances.
struct ScoreStack {
  Eigen::MatrixXd u;          // n x p_eta, rows V_i u_i(eta_hat)'
  Eigen::MatrixXd s;          // n x q, rows s_i(gamma_hat; eta_hat)'
  Eigen::MatrixXd h_eta;      // sum_i d(V_i u_i)/d eta'
  Eigen::MatrixXd h_s_eta;    // sum_i d s_i / d eta'
  Eigen::MatrixXd h_s_gamma;  // sum_i d s_i / d gamma'
};

ScoreStack build_score_stack(const MeanScoreProblem& problem,
                             const DiseaseFit& disease, const Gamma& gamma);

/// U-statistic projection terms: for each subject, the three-role sum of
/// estimating terms G over ordered pairs of the other subjects, normalized by
/// (n-1)(n-2). Their mean is zero at the plug-in VUS.
std::vector<double> lambda_hats(const SortedByTest& sorted,
                                const std::vector<WeightTriple>& w,
                                double mu_hat);
std::vector<double> lambda_hats_naive(const Eigen::VectorXd& t,
                                      const std::vector<WeightTriple>& w,
                                      double mu_hat);

/// Mean over ordered distinct triples of the derivative of the estimating
/// term G with respect to (eta, gamma), times n: the printed normalization
/// by (n-1)(n-2). Length p_eta + q.
Eigen::VectorXd average_g_jacobian(const SortedByTest& sorted,
                                   const std::vector<WeightTriple>& w,
                                   const WeightDerivs& derivs, double mu_hat);

/// Per-subject correction for the estimation error of (eta_hat, gamma_hat):
/// the average G-Jacobian applied through the solved block system to the
/// stacked scores. `estimated` optionally masks which parameter components
/// are treated as estimated (default: all). Throws SingularInformation.
std::vector<double> q_hats(const ScoreStack& stack,
                           const Eigen::VectorXd& avg_jacobian,
                           const std::vector<int>* estimated = nullptr);

/// Standard error of the plug-in VUS from the influence decomposition:
/// sigma_hat/sqrt(n) with
///   sigma^2 = var(Lambda_i + Q_i) / (P1 P2 P3)^2,  P_k = mean pseudo weight.
double asymptotic_se_from_parts(const std::vector<double>& lambda,
                                const std::vector<double>& q,
                                const std::vector<WeightTriple>& w);

/// Convenience: full pipeline for one method.
double asymptotic_se(Method method, const Dataset& data,
                     const DiseaseFit& disease, const SolverReport& report,
                     Link link, LambdaPath path = LambdaPath::Fast);

/// Appendix-style sandwich covariances of sqrt(n)(eta_hat - eta0) and
/// sqrt(n)(gamma_hat - gamma0).
struct SandwichCovariances {
  Eigen::MatrixXd sigma_eta;
  Eigen::MatrixXd sigma_gamma;
};
SandwichCovariances sandwich_covariances(const ScoreStack& stack, int n);

struct WaldTest {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
};

std::vector<WaldTest> gamma_wald_tests(const Gamma& gamma_hat,
                                       const Eigen::MatrixXd& sigma_gamma,
                                       int n, const std::vector<std::string>& a1_names);

struct BootstrapSummary {
  int requested = 0;
  int failed = 0;
  std::vector<double> se;  // per requested method
  std::vector<std::vector<double>> estimates;  // per method, surviving resamples
};

/// Nonparametric bootstrap: resample subjects with replacement, refit both
/// models, re-estimate each method. Failed resamples are dropped and counted.
/// Deterministic given the seed. Throws TooFewSuccessfulResamples when fewer
/// than half the resamples survive.
BootstrapSummary bootstrap_ses(const std::vector<Method>& methods,
                               const Dataset& data, const DiseaseDesign& design,
                               Link link, int B, std::uint64_t seed);
double bootstrap_se(Method method, const Dataset& data,
                    const DiseaseDesign& design, Link link, int B,
                    std::uint64_t seed, int* n_failed = nullptr);

struct VusResult {
  Method method = Method::FI;
  double estimate = 0.0;
  double asd = 0.0;
  std::optional<double> bsd;
  std::pair<double, double> ci95{0.0, 0.0};        // from asd
  std::optional<std::pair<double, double>> ci95_boot;
  bool out_of_range = false;  // raw estimate outside [0,1] (IPW/PDR possible)
  double clipped = 0.0;       // convenience value clamped to [0,1]
  double min_pi_verified = 1.0;
  int n_large_weights = 0;
};

}  // namespace vus
