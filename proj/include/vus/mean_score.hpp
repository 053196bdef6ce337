#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vus/data.hpp"
#include "vus/disease.hpp"
#include "vus/verification.hpp"

namespace vus {

/// Prepared per-dataset context for mean-score evaluation: cached regressor
/// rows, A1 blocks and verified-subject class probabilities at eta_hat.
struct MeanScoreProblem {
  const Dataset* data = nullptr;
  Link link;
  int q = 0;      // dim(gamma)
  int p_eta = 0;  // dim(eta)

  std::vector<Eigen::VectorXd> a1;     // per-subject A1 values
  Eigen::MatrixXd x_dis;               // n x (p_eta/2) disease regressor rows
  std::vector<Rho3> rho1;              // rho_{k(1)}(eta_hat) per subject
  std::vector<int> d1, d2;             // observed indicators (verified rows)
  Eigen::MatrixXd z_obs;               // n x q, observed-pattern Z (verified rows)
  std::array<Eigen::MatrixXd, 3> z_pat;  // n x q, Z under each disease pattern

  int n() const { return data->n(); }
};

MeanScoreProblem prepare_problem(const Dataset& data, const DiseaseFit& fit,
                                 Link link, bool allow_unconverged = false);

/// Score residual r(lp, v) with h = Z r: the GLM score contribution per unit
/// of Z. For the logit link r = v - F(lp); for probit the ML weighting
/// f/(F(1-F)) is folded in, computed through the inverse Mills ratio.
double score_residual(Link link, double lp, int v);
double score_residual_dlp(Link link, double lp, int v);

/// Contribution of subject i to the empirical mean score: the verified branch
/// Z_i r(lp_i, 1), or the rho_{k(0)}-weighted combination over the three
/// disease patterns for an unverified subject.
Eigen::VectorXd s_term(const Gamma& gamma, const MeanScoreProblem& problem, int i);

/// Sum of s_term over subjects. With fixed_rho = true the unverified weights
/// are the rho_{k(1)} triples themselves (no gamma dependence); this is the
/// MAR-imputed weighted GLM score used to seed the solver.
Eigen::VectorXd mean_score(const Gamma& gamma, const MeanScoreProblem& problem,
                           bool fixed_rho = false);

struct ScoreJacobians {
  Eigen::MatrixXd d_gamma;  // q x q
  Eigen::MatrixXd d_eta;    // q x p_eta
};

/// Analytic Jacobians of the summed mean score with respect to gamma and,
/// through rho_{k(1)} inside rho_{k(0)}, with respect to eta. want_eta = false
/// skips the eta block (the solver only needs d_gamma).
ScoreJacobians jacobian_s(const Gamma& gamma, const MeanScoreProblem& problem,
                          bool fixed_rho = false, bool want_eta = true);

struct SolverReport {
  Gamma gamma_hat;
  double norm_at_solution = 0.0;  // ||S_bar||^2 / n^2 at gamma_hat
  int iterations = 0;
  bool converged = false;
  int multistart_index = -1;
  double min_pi_verified = 1.0;
  Eigen::VectorXd mean_score_at_solution;
};

/// Box bound applied to every coefficient during optimization.
constexpr double kGammaBound = 30.0;
/// Convergence criterion on the squared scaled score norm.
constexpr double kScoreNormTol = 1e-10;

/// Default starting points: the MAR-imputed weighted GLM fit, the same fit
/// with the nonignorability coefficients zeroed, and all zeros.
std::vector<Gamma> default_starts(const MeanScoreProblem& problem);

/// Minimizes ||S_bar(gamma; eta_hat)||^2 over the coefficient box by damped
/// Gauss-Newton (Levenberg-Marquardt) steps with the analytic Jacobian,
/// keeping the best run over the supplied starts. converged requires the
/// score-norm criterion, not merely optimizer termination.
SolverReport solve_gamma(const MeanScoreProblem& problem,
                         const std::vector<Gamma>& starts);
SolverReport solve_gamma(const MeanScoreProblem& problem);

}  // namespace vus
