#include "vus/estimators.hpp"

#include <cmath>

namespace vus {

namespace {

constexpr int kD1[3] = {1, 0, 0};
constexpr int kD2[3] = {0, 1, 0};

WeightTriple one_hot(int d) {
  WeightTriple w;
  w.w1 = d == 1;
  w.w2 = d == 2;
  w.w3 = d == 3;
  return w;
}

WeightTriple from_rho(const Rho3& r) { return {r.r1, r.r2, r.r3}; }

struct SubjectModel {
  Rho3 rho1;
  Rho3 rho0;
  double pi = 1.0;  // verified subjects only, at the observed pattern
};

SubjectModel subject_model(const Dataset& data, const DiseaseFit& disease,
                           const Gamma& gamma, Link link, int i,
                           bool need_rho0) {
  SubjectModel m;
  const Eigen::VectorXd x = disease_row(data, disease.design, i);
  m.rho1 = rho_v1(disease.eta_hat, x);
  const Eigen::VectorXd a1 = data.a1(i);
  if (need_rho0) m.rho0 = rho_v0(m.rho1, gamma, link, data.t[i], a1);
  if (data.v[i]) {
    const int d = data.d_obs[i];
    m.pi = pi(gamma, link, data.t[i], a1, d == 1, d == 2);
  }
  return m;
}

}  // namespace

PseudoWeights pseudo_weights(Method method, const Dataset& data,
                             const DiseaseFit* disease,
                             const SolverReport* report, Link link,
                             bool force) {
  const int n = data.n();
  PseudoWeights out;
  out.method = method;
  out.w.resize(n);

  if (method == Method::Naive) {
    for (int i = 0; i < n; ++i)
      out.w[i] = data.v[i] ? one_hot(data.d_obs[i]) : WeightTriple{};
    return out;
  }
  if (method == Method::Full) {
    for (int i = 0; i < n; ++i) {
      if (data.d_true[i] == 0)
        throw Error("full-data method requires retained true disease status");
      out.w[i] = one_hot(data.d_true[i]);
    }
    return out;
  }

  if (disease == nullptr || report == nullptr)
    throw Error("method requires disease and verification fits");
  if (!disease->converged || !report->converged) {
    if (!force) throw Error("model fits did not converge; pass force to override");
    out.forced = true;
  }
  const Gamma& gamma = report->gamma_hat;
  const bool need_rho0 = method != Method::IPW;
  double min_pi = 1.0;
  for (int i = 0; i < n; ++i) {
    const SubjectModel m = subject_model(data, *disease, gamma, link, i, need_rho0);
    const bool verified = data.v[i] != 0;
    if (verified) {
      if (m.pi <= 0.0) throw NonPositivePi();
      min_pi = std::min(min_pi, m.pi);
    }
    WeightTriple w;
    switch (method) {
      case Method::FI:
        w = verified ? from_rho(m.rho1) : from_rho(m.rho0);
        break;
      case Method::MSI:
        w = verified ? one_hot(data.d_obs[i]) : from_rho(m.rho0);
        break;
      case Method::IPW:
        if (verified) {
          w = one_hot(data.d_obs[i]);
          w.w1 /= m.pi;
          w.w2 /= m.pi;
          w.w3 /= m.pi;
        }
        break;
      case Method::PDR:
        if (verified) {
          const WeightTriple d = one_hot(data.d_obs[i]);
          const double adj = (1.0 - m.pi) / m.pi;
          w.w1 = d.w1 / m.pi - m.rho0.r1 * adj;
          w.w2 = d.w2 / m.pi - m.rho0.r2 * adj;
          w.w3 = d.w3 / m.pi - m.rho0.r3 * adj;
        } else {
          w = from_rho(m.rho0);
        }
        break;
      default:
        break;
    }
    if (std::fabs(w.w1) > 50 || std::fabs(w.w2) > 50 || std::fabs(w.w3) > 50)
      ++out.n_large;
    out.w[i] = w;
  }
  out.min_pi_verified = min_pi;
  return out;
}

double estimate_vus(Method method, const Dataset& data,
                    const DiseaseFit* disease, const SolverReport* report,
                    Link link) {
  if (data.n() < 3) throw Error("VUS needs at least three subjects");
  const PseudoWeights w = pseudo_weights(method, data, disease, report, link);
  return vus_fast(w.w, data.t);
}

WeightDerivs pseudo_weight_derivs(Method method, const Dataset& data,
                                  const DiseaseFit& disease,
                                  const SolverReport& report, Link link) {
  const int n = data.n();
  const Gamma& gamma = report.gamma_hat;
  const int q = gamma.dim();
  const int p_eta = disease.eta_hat.dim();
  const int pb = p_eta / 2;

  WeightDerivs out;
  for (int k = 0; k < 3; ++k) {
    out.d_eta[k] = Eigen::MatrixXd::Zero(n, p_eta);
    out.d_gamma[k] = Eigen::MatrixXd::Zero(n, q);
  }
  if (method == Method::Naive || method == Method::Full) return out;

  Eigen::VectorXd dlr1, dlr2;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = disease_row(data, disease.design, i);
    const Eigen::VectorXd a1 = data.a1(i);
    const Rho3 rho1 = rho_v1(disease.eta_hat, x);
    const bool verified = data.v[i] != 0;

    Rho3 rho0;
    Eigen::Matrix<double, 3, 2> drho0_dl;
    std::array<Eigen::VectorXd, 3> drho0_dgamma;
    if (method != Method::IPW) {
      rho0 = rho_v0(rho1, gamma, link, data.t[i], a1);
      drho0_dl = rho_v0_grad_log_ratios(rho0);
      log_odds_ratio_grads(gamma, link, data.t[i], a1, dlr1, dlr2);
      for (int k = 0; k < 3; ++k)
        drho0_dgamma[k] = drho0_dl(k, 0) * dlr1 + drho0_dl(k, 1) * dlr2;
    }

    // d rho(v)_k / d eta_block_j = rho_k (delta_kj - rho_j) x
    auto eta_grad_row = [&](const Rho3& rho, int k) {
      Eigen::RowVectorXd row(p_eta);
      for (int j = 0; j < 2; ++j)
        row.segment(j * pb, pb) =
            rho[k] * ((k == j ? 1.0 : 0.0) - rho[j]) * x.transpose();
      return row;
    };

    if (!verified) {
      if (method == Method::IPW) continue;
      for (int k = 0; k < 3; ++k) {
        out.d_eta[k].row(i) = eta_grad_row(rho0, k);
        out.d_gamma[k].row(i) = drho0_dgamma[k].transpose();
      }
      continue;
    }

    const int d = data.d_obs[i];
    const double lp = linear_predictor(gamma, data.t[i], a1, d == 1, d == 2);
    const double pi_i = link.cdf(lp);
    const Eigen::VectorXd z = [&] {
      Eigen::VectorXd v(q);
      v[0] = 1.0;
      v[1] = data.t[i];
      for (int j = 0; j < a1.size(); ++j) v[2 + j] = a1[j];
      v[q - 2] = d == 1;
      v[q - 1] = d == 2;
      return v;
    }();
    const Eigen::VectorXd dpi = link.pdf(lp) * z;

    switch (method) {
      case Method::FI:
        for (int k = 0; k < 3; ++k) out.d_eta[k].row(i) = eta_grad_row(rho1, k);
        break;
      case Method::MSI:
        break;  // observed one-hot: no parameter dependence
      case Method::IPW:
        for (int k = 0; k < 3; ++k) {
          const double dk = (d == k + 1) ? 1.0 : 0.0;
          if (dk != 0.0)
            out.d_gamma[k].row(i) = (-dk / (pi_i * pi_i)) * dpi.transpose();
        }
        break;
      case Method::PDR:
        for (int k = 0; k < 3; ++k) {
          const double dk = (d == k + 1) ? 1.0 : 0.0;
          const double adj = (1.0 - pi_i) / pi_i;
          out.d_eta[k].row(i) = -adj * eta_grad_row(rho0, k);
          out.d_gamma[k].row(i) =
              ((rho0[k] - dk) / (pi_i * pi_i)) * dpi.transpose() -
              adj * drho0_dgamma[k].transpose();
        }
        break;
      default:
        break;
    }
  }
  return out;
}

}  // namespace vus
