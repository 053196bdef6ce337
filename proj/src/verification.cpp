#include "vus/verification.hpp"

#include <algorithm>

namespace vus {

Eigen::VectorXd Gamma::as_vector() const {
  Eigen::VectorXd out(dim());
  out[0] = beta0;
  out[1] = beta1;
  for (int j = 0; j < beta21.size(); ++j) out[2 + j] = beta21[j];
  out[dim() - 2] = lambda1;
  out[dim() - 1] = lambda2;
  return out;
}

Gamma Gamma::from_vector(const Eigen::VectorXd& g, int n_a1) {
  if (g.size() != 4 + n_a1) throw Error("gamma vector has wrong dimension");
  Gamma out;
  out.beta0 = g[0];
  out.beta1 = g[1];
  out.beta21 = g.segment(2, n_a1);
  out.lambda1 = g[2 + n_a1];
  out.lambda2 = g[3 + n_a1];
  return out;
}

Gamma Gamma::zeros(int n_a1) {
  Gamma out;
  out.beta21 = Eigen::VectorXd::Zero(n_a1);
  return out;
}

double linear_predictor(const Gamma& g, double t, const Eigen::VectorXd& a1,
                        int d1, int d2) {
  return g.beta0 + g.beta1 * t + g.beta21.dot(a1) + g.lambda1 * d1 +
         g.lambda2 * d2;
}

double pi(const Gamma& g, Link link, double t, const Eigen::VectorXd& a1,
          int d1, int d2) {
  if (d1 == 1 && d2 == 1) throw InvalidDiseaseIndicators();
  return link.cdf(linear_predictor(g, t, a1, d1, d2));
}

namespace {

// log(pi/(1-pi)) for one disease pattern.
double log_odd(const Gamma& g, Link link, double t, const Eigen::VectorXd& a1,
               int d1, int d2) {
  const double lp = linear_predictor(g, t, a1, d1, d2);
  if (link.kind == LinkKind::Logit) return lp;
  return log_norm_cdf(lp) - log_norm_cdf(-lp);
}

}  // namespace

std::pair<double, double> log_odds_ratio_pair(const Gamma& g, Link link,
                                              double t,
                                              const Eigen::VectorXd& a1) {
  if (link.kind == LinkKind::Logit) return {g.lambda1, g.lambda2};
  const double base = log_odd(g, link, t, a1, 0, 0);
  return {log_odd(g, link, t, a1, 1, 0) - base,
          log_odd(g, link, t, a1, 0, 1) - base};
}

std::pair<double, double> odds_ratio_pair(const Gamma& g, Link link, double t,
                                          const Eigen::VectorXd& a1) {
  const auto [l1, l2] = log_odds_ratio_pair(g, link, t, a1);
  return {std::exp(l1), std::exp(l2)};
}

Rho3 rho_v0_from_log_ratios(const Rho3& rho1, double log_r1, double log_r2) {
  const double r1 = std::exp(log_r1);
  const double r2 = std::exp(log_r2);
  const double u1 = rho1.r1 * r2;
  const double u2 = rho1.r2 * r1;
  const double u3 = rho1.r3 * r1 * r2;
  const double den = u1 + u2 + u3;
  if (std::isfinite(den) && den > 0.0) {
    Rho3 out;
    out.r1 = u1 / den;
    out.r2 = u2 / den;
    out.r3 = 1.0 - out.r1 - out.r2;
    return out;
  }
  // Overflow/underflow: redo on the log scale with a max shift.
  const double t1 = rho1.r1 > 0 ? std::log(rho1.r1) + log_r2 : -INFINITY;
  const double t2 = rho1.r2 > 0 ? std::log(rho1.r2) + log_r1 : -INFINITY;
  const double t3 = rho1.r3 > 0 ? std::log(rho1.r3) + log_r1 + log_r2 : -INFINITY;
  const double m = std::max({t1, t2, t3});
  if (!std::isfinite(m)) throw DegenerateDenominator();
  const double e1 = std::exp(t1 - m);
  const double e2 = std::exp(t2 - m);
  const double e3 = std::exp(t3 - m);
  const double d = e1 + e2 + e3;
  Rho3 out;
  out.r1 = e1 / d;
  out.r2 = e2 / d;
  out.r3 = 1.0 - out.r1 - out.r2;
  return out;
}

Rho3 rho_v0(const Rho3& rho1, const Gamma& g, Link link, double t,
            const Eigen::VectorXd& a1) {
  const auto [l1, l2] = log_odds_ratio_pair(g, link, t, a1);
  return rho_v0_from_log_ratios(rho1, l1, l2);
}

Eigen::Matrix<double, 3, 2> rho_v0_grad_log_ratios(const Rho3& rho0) {
  // log u_k is linear in (log R1, log R2) with coefficient pattern c:
  //   c(1,.) = (0,1), c(2,.) = (1,0), c(3,.) = (1,1)
  // d rho_k / d l_j = rho_k (c_kj - sum_m rho_m c_mj)
  static const double c[3][2] = {{0, 1}, {1, 0}, {1, 1}};
  Eigen::Matrix<double, 3, 2> out;
  for (int j = 0; j < 2; ++j) {
    const double mean_c =
        rho0.r1 * c[0][j] + rho0.r2 * c[1][j] + rho0.r3 * c[2][j];
    for (int k = 0; k < 3; ++k) out(k, j) = rho0[k] * (c[k][j] - mean_c);
  }
  return out;
}

namespace {

// d log Odd / d lp = f(lp) / (F(lp)(1 - F(lp))), computed stably.
double dlog_odd_dlp(Link link, double lp) {
  if (link.kind == LinkKind::Logit) return 1.0;
  return inverse_mills(lp) + inverse_mills(-lp);
}

// Z row for a disease pattern, in Gamma layout.
Eigen::VectorXd z_row(double t, const Eigen::VectorXd& a1, int d1, int d2) {
  Eigen::VectorXd z(4 + a1.size());
  z[0] = 1.0;
  z[1] = t;
  for (int j = 0; j < a1.size(); ++j) z[2 + j] = a1[j];
  z[2 + a1.size()] = d1;
  z[3 + a1.size()] = d2;
  return z;
}

}  // namespace

void log_odds_ratio_grads(const Gamma& g, Link link, double t,
                          const Eigen::VectorXd& a1, Eigen::VectorXd& dlog_r1,
                          Eigen::VectorXd& dlog_r2) {
  const int q = g.dim();
  dlog_r1 = Eigen::VectorXd::Zero(q);
  dlog_r2 = Eigen::VectorXd::Zero(q);
  if (link.kind == LinkKind::Logit) {
    dlog_r1[q - 2] = 1.0;
    dlog_r2[q - 1] = 1.0;
    return;
  }
  const double lp00 = linear_predictor(g, t, a1, 0, 0);
  const double lp10 = linear_predictor(g, t, a1, 1, 0);
  const double lp01 = linear_predictor(g, t, a1, 0, 1);
  const double w00 = dlog_odd_dlp(link, lp00);
  dlog_r1 = dlog_odd_dlp(link, lp10) * z_row(t, a1, 1, 0) -
            w00 * z_row(t, a1, 0, 0);
  dlog_r2 = dlog_odd_dlp(link, lp01) * z_row(t, a1, 0, 1) -
            w00 * z_row(t, a1, 0, 0);
}

}  // namespace vus
