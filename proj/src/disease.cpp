#include "vus/disease.hpp"

#include <algorithm>
#include <cmath>

namespace vus {

DiseaseDesign DiseaseDesign::all_covariates(int m) {
  DiseaseDesign d;
  for (int c = 0; c < m; ++c) d.terms.push_back({c, 1});
  return d;
}

Eigen::VectorXd Eta::as_vector() const {
  Eigen::VectorXd out(dim());
  out.head(block_dim()) = eta1;
  out.tail(block_dim()) = eta2;
  return out;
}

Eta Eta::from_vector(const Eigen::VectorXd& v) {
  const int p = static_cast<int>(v.size()) / 2;
  Eta out;
  out.eta1 = v.head(p);
  out.eta2 = v.tail(p);
  return out;
}

Eta Eta::zeros(int block_dim) {
  Eta out;
  out.eta1 = Eigen::VectorXd::Zero(block_dim);
  out.eta2 = Eigen::VectorXd::Zero(block_dim);
  return out;
}

Eigen::VectorXd disease_row(const Dataset& data, const DiseaseDesign& design,
                            int i) {
  Eigen::VectorXd x(2 + design.n_terms());
  x[0] = 1.0;
  x[1] = data.t[i];
  for (int j = 0; j < design.n_terms(); ++j) {
    const auto& term = design.terms[j];
    double val = data.a(i, term.col);
    double out = 1.0;
    for (int p = 0; p < term.power; ++p) out *= val;
    x[2 + j] = out;
  }
  return x;
}

Rho3 rho_v1(const Eta& eta, const Eigen::VectorXd& x) {
  const double g1 = eta.eta1.dot(x);
  const double g2 = eta.eta2.dot(x);
  const double m = std::max({0.0, g1, g2});
  const double e0 = std::exp(-m);
  const double e1 = std::exp(g1 - m);
  const double e2 = std::exp(g2 - m);
  const double den = e0 + e1 + e2;
  Rho3 out;
  out.r1 = e1 / den;
  out.r2 = e2 / den;
  out.r3 = 1.0 - out.r1 - out.r2;
  return out;
}

Eigen::VectorXd score_u(const Eta& eta, const Eigen::VectorXd& x, int d) {
  const Rho3 rho = rho_v1(eta, x);
  const int p = static_cast<int>(x.size());
  Eigen::VectorXd u(2 * p);
  u.head(p) = ((d == 1 ? 1.0 : 0.0) - rho.r1) * x;
  u.tail(p) = ((d == 2 ? 1.0 : 0.0) - rho.r2) * x;
  return u;
}

Eigen::MatrixXd score_u_jacobian(const Eta& eta, const Eigen::VectorXd& x) {
  const Rho3 rho = rho_v1(eta, x);
  const int p = static_cast<int>(x.size());
  const Eigen::MatrixXd xx = x * x.transpose();
  Eigen::MatrixXd h(2 * p, 2 * p);
  h.topLeftCorner(p, p) = -rho.r1 * (1.0 - rho.r1) * xx;
  h.topRightCorner(p, p) = rho.r1 * rho.r2 * xx;
  h.bottomLeftCorner(p, p) = rho.r1 * rho.r2 * xx;
  h.bottomRightCorner(p, p) = -rho.r2 * (1.0 - rho.r2) * xx;
  return h;
}

double loglik_term(const Eta& eta, const Eigen::VectorXd& x, int d) {
  const double g1 = eta.eta1.dot(x);
  const double g2 = eta.eta2.dot(x);
  const double m = std::max({0.0, g1, g2});
  const double lse = m + std::log(std::exp(-m) + std::exp(g1 - m) + std::exp(g2 - m));
  return (d == 1 ? g1 : (d == 2 ? g2 : 0.0)) - lse;
}

DiseaseFit fit_disease(const Dataset& data) {
  return fit_disease(data, DiseaseDesign::all_covariates(data.n_covariates()));
}

DiseaseFit fit_disease(const Dataset& data, const DiseaseDesign& design) {
  std::vector<int> rows;
  int class_count[4] = {0, 0, 0, 0};
  for (int i = 0; i < data.n(); ++i) {
    if (data.v[i]) {
      rows.push_back(i);
      class_count[data.d_obs[i]]++;
    }
  }
  for (int k = 1; k <= 3; ++k)
    if (class_count[k] == 0) throw MissingClassAmongVerified(k);

  const int nv = static_cast<int>(rows.size());
  const int p = 2 + design.n_terms();
  Eigen::MatrixXd X(nv, p);
  std::vector<int> d(nv);
  for (int r = 0; r < nv; ++r) {
    X.row(r) = disease_row(data, design, rows[r]).transpose();
    d[r] = data.d_obs[rows[r]];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p)
    throw RankDeficientDesign("disease design matrix is rank deficient (rank " +
                              std::to_string(qr.rank()) + " of " + std::to_string(p) + ")");

  DiseaseFit fit;
  fit.design = design;
  fit.n_verified = nv;

  Eta eta = Eta::zeros(p);
  auto total_loglik = [&](const Eta& e) {
    double ll = 0.0;
    for (int r = 0; r < nv; ++r) ll += loglik_term(e, X.row(r).transpose(), d[r]);
    return ll;
  };
  double ll = total_loglik(eta);

  const int max_iter = 100;
  bool converged = false;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    Eigen::VectorXd U = Eigen::VectorXd::Zero(2 * p);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * p, 2 * p);
    for (int r = 0; r < nv; ++r) {
      const Eigen::VectorXd x = X.row(r).transpose();
      U += score_u(eta, x, d[r]);
      H += score_u_jacobian(eta, x);
    }
    if (U.cwiseAbs().maxCoeff() <= 1e-8) {
      converged = true;
      break;
    }
    Eigen::VectorXd step = (-H).ldlt().solve(U);
    if (!step.allFinite()) break;
    // step halving on likelihood decrease
    double scale = 1.0;
    Eta cand;
    double ll_new = -INFINITY;
    const Eigen::VectorXd theta = eta.as_vector();
    for (int half = 0; half < 40; ++half) {
      cand = Eta::from_vector(theta + scale * step);
      ll_new = total_loglik(cand);
      if (ll_new >= ll - 1e-12) break;
      scale *= 0.5;
    }
    const double rel_step = (scale * step).norm() / (1.0 + theta.norm());
    eta = cand;
    ll = ll_new;
    if (eta.as_vector().cwiseAbs().maxCoeff() > 30.0) fit.quasi_separation = true;
    if (rel_step < 1e-10) {
      converged = U.cwiseAbs().maxCoeff() <= 1e-8;
      ++iter;
      break;
    }
  }

  // Sandwich covariance of sqrt(n_verified) (eta_hat - eta0): A^{-1} B A^{-T}
  // with A the summed score Jacobian and B the summed outer score products.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * p, 2 * p);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * p, 2 * p);
  for (int r = 0; r < nv; ++r) {
    const Eigen::VectorXd x = X.row(r).transpose();
    A += score_u_jacobian(eta, x);
    const Eigen::VectorXd u = score_u(eta, x, d[r]);
    B += u * u.transpose();
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const Eigen::MatrixXd Ainv_B = lu.solve(B);
  Eigen::MatrixXd sigma = static_cast<double>(nv) *
                          lu.solve(Ainv_B.transpose()).transpose();
  fit.sigma_eta_hat = 0.5 * (sigma + sigma.transpose());

  fit.eta_hat = eta;
  fit.converged = converged;
  fit.iterations = iter;
  fit.loglik = ll;
  return fit;
}

}  // namespace vus
