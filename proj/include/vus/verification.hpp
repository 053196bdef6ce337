#pragma once

#include <Eigen/Dense>
#include <utility>

#include "vus/common.hpp"

namespace vus {

enum class LinkKind { Logit, Probit };

/// Binary-response link: strictly increasing cdf mapping the reals onto (0,1).
struct Link {
  LinkKind kind = LinkKind::Logit;

  double cdf(double x) const {
    return kind == LinkKind::Logit ? 1.0 / (1.0 + std::exp(-x)) : norm_cdf(x);
  }
  double pdf(double x) const {
    if (kind == LinkKind::Logit) {
      const double p = cdf(x);
      return p * (1.0 - p);
    }
    return norm_pdf(x);
  }
  const char* name() const { return kind == LinkKind::Logit ? "logit" : "probit"; }
};

/// Verification-model coefficients, ordered (beta0, beta1, beta21..., lambda1, lambda2).
struct Gamma {
  double beta0 = 0.0;
  double beta1 = 0.0;
  Eigen::VectorXd beta21;
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  int dim() const { return 4 + static_cast<int>(beta21.size()); }
  Eigen::VectorXd as_vector() const;
  static Gamma from_vector(const Eigen::VectorXd& g, int n_a1);
  static Gamma zeros(int n_a1);
};

/// beta0 + beta1 t + beta21' a1 + lambda1 d1 + lambda2 d2
double linear_predictor(const Gamma& g, double t, const Eigen::VectorXd& a1,
                        int d1, int d2);

/// Pr(V = 1 | T, A1, D1, D2). Throws InvalidDiseaseIndicators when d1 = d2 = 1.
double pi(const Gamma& g, Link link, double t, const Eigen::VectorXd& a1,
          int d1, int d2);

/// Verification odds ratios against the (d1,d2) = (0,0) pattern:
///   R1 = Odd(1,0)/Odd(0,0),  R2 = Odd(0,1)/Odd(0,0),  Odd = pi/(1-pi).
/// Under the logit link these equal (exp(lambda1), exp(lambda2)) exactly.
std::pair<double, double> odds_ratio_pair(const Gamma& g, Link link, double t,
                                          const Eigen::VectorXd& a1);

/// log(R1), log(R2); the stable representation used internally.
std::pair<double, double> log_odds_ratio_pair(const Gamma& g, Link link,
                                              double t, const Eigen::VectorXd& a1);

/// A probability triple over the three disease classes.
struct Rho3 {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double operator[](int k) const { return k == 0 ? r1 : (k == 1 ? r2 : r3); }
};

/// Disease probabilities for unverified subjects from the verified-subject
/// triple via Bayes' rule and the verification odds ratios:
///   rho1(0) = rho1(1) R2 / Den, rho2(0) = rho2(1) R1 / Den, rho3(0) = complement,
///   Den = rho1(1) R2 + rho2(1) R1 + rho3(1) R1 R2.
/// Throws DegenerateDenominator if Den underflows to zero.
Rho3 rho_v0_from_log_ratios(const Rho3& rho1, double log_r1, double log_r2);
Rho3 rho_v0(const Rho3& rho1, const Gamma& g, Link link, double t,
            const Eigen::VectorXd& a1);

/// d rho_k(0) / d log(R_j) for k = 1..3, j = 1..2, evaluated at rho0.
/// Column j holds the three class derivatives with respect to log R_j.
Eigen::Matrix<double, 3, 2> rho_v0_grad_log_ratios(const Rho3& rho0);

/// Gradients of log R1 and log R2 with respect to gamma (layout as Gamma).
/// Zero outside the lambda components for the logit link.
void log_odds_ratio_grads(const Gamma& g, Link link, double t,
                          const Eigen::VectorXd& a1, Eigen::VectorXd& dlog_r1,
                          Eigen::VectorXd& dlog_r2);

}  // namespace vus
