#pragma once

#include <Eigen/Dense>
#include <vector>

#include "vus/data.hpp"
#include "vus/verification.hpp"

namespace vus {

/// Covariate part of the disease-model regressors besides (1, t): each term
/// is a dataset covariate column raised to an integer power. Basis expansions
/// (e.g. a squared covariate in a deliberately misspecified working model)
/// are expressed here by the caller; the model itself is agnostic.
struct DiseaseDesign {
  struct Term {
    int col = 0;
    int power = 1;
  };
  std::vector<Term> terms;

  static DiseaseDesign all_covariates(int m);
  int n_terms() const { return static_cast<int>(terms.size()); }
};

/// Multinomial-logit coefficients for classes 1 and 2 against reference
/// class 3; each block is (intercept, t, covariate terms...).
struct Eta {
  Eigen::VectorXd eta1;
  Eigen::VectorXd eta2;

  int block_dim() const { return static_cast<int>(eta1.size()); }
  int dim() const { return 2 * block_dim(); }
  Eigen::VectorXd as_vector() const;
  static Eta from_vector(const Eigen::VectorXd& v);
  static Eta zeros(int block_dim);
};

struct DiseaseFit {
  Eta eta_hat;
  Eigen::MatrixXd sigma_eta_hat;  // covariance of sqrt(n_verified) (eta_hat - eta0)
  bool converged = false;
  bool quasi_separation = false;
  int n_verified = 0;
  int iterations = 0;
  double loglik = 0.0;
  DiseaseDesign design;
};

/// Full regressor row (1, t, covariate terms) for subject i.
Eigen::VectorXd disease_row(const Dataset& data, const DiseaseDesign& design, int i);

/// Conditional (V=1) class probabilities at a regressor row; computed with a
/// max shift before exponentiation, rho3 as the complement.
Rho3 rho_v1(const Eta& eta, const Eigen::VectorXd& x);

/// Per-observation score of the multinomial logit: for k in {1,2},
/// block_k = (D_k - rho_k) x.  d is the observed class in {1,2,3}.
Eigen::VectorXd score_u(const Eta& eta, const Eigen::VectorXd& x, int d);

/// Per-observation Hessian of the log-likelihood (equals d u / d eta');
/// negative semidefinite.
Eigen::MatrixXd score_u_jacobian(const Eta& eta, const Eigen::VectorXd& x);

/// Per-observation log-likelihood, for finite-difference checks and step control.
double loglik_term(const Eta& eta, const Eigen::VectorXd& x, int d);

/// Damped Newton fit on the verified subjects. Throws
/// MissingClassAmongVerified / RankDeficientDesign on structural defects;
/// non-convergence is reported through the flag, not thrown.
DiseaseFit fit_disease(const Dataset& data, const DiseaseDesign& design);
DiseaseFit fit_disease(const Dataset& data);

}  // namespace vus
