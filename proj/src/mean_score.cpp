#include "vus/mean_score.hpp"

#include <algorithm>
#include <cmath>

namespace vus {

MeanScoreProblem prepare_problem(const Dataset& data, const DiseaseFit& fit,
                                 Link link, bool allow_unconverged) {
  if (!fit.converged && !allow_unconverged)
    throw Error("disease model fit did not converge");
  MeanScoreProblem p;
  p.data = &data;
  p.link = link;
  p.q = 4 + static_cast<int>(data.a1_cols.size());
  p.p_eta = fit.eta_hat.dim();
  const int n = data.n();
  p.a1.resize(n);
  p.x_dis.resize(n, fit.eta_hat.block_dim());
  p.rho1.resize(n);
  p.d1.assign(n, 0);
  p.d2.assign(n, 0);
  p.z_obs = Eigen::MatrixXd::Zero(n, p.q);
  for (auto& z : p.z_pat) z = Eigen::MatrixXd::Zero(n, p.q);
  for (int i = 0; i < n; ++i) {
    p.a1[i] = data.a1(i);
    const Eigen::VectorXd x = disease_row(data, fit.design, i);
    p.x_dis.row(i) = x.transpose();
    p.rho1[i] = rho_v1(fit.eta_hat, x);
    if (data.v[i]) {
      p.d1[i] = data.d_obs[i] == 1;
      p.d2[i] = data.d_obs[i] == 2;
    }
    Eigen::RowVectorXd base(p.q);
    base[0] = 1.0;
    base[1] = data.t[i];
    for (int j = 0; j < p.a1[i].size(); ++j) base[2 + j] = p.a1[i][j];
    base[p.q - 2] = 0.0;
    base[p.q - 1] = 0.0;
    for (int k = 0; k < 3; ++k) {
      p.z_pat[k].row(i) = base;
      p.z_pat[k](i, p.q - 2) = k == 0;
      p.z_pat[k](i, p.q - 1) = k == 1;
    }
    p.z_obs.row(i) = base;
    p.z_obs(i, p.q - 2) = p.d1[i];
    p.z_obs(i, p.q - 1) = p.d2[i];
  }
  return p;
}

double score_residual(Link link, double lp, int v) {
  if (link.kind == LinkKind::Logit)
    return v == 1 ? 1.0 / (1.0 + std::exp(lp)) : -1.0 / (1.0 + std::exp(-lp));
  return v == 1 ? inverse_mills(lp) : -inverse_mills(-lp);
}

double score_residual_dlp(Link link, double lp, int v) {
  if (link.kind == LinkKind::Logit) {
    const double f = 1.0 / (1.0 + std::exp(-lp));
    return -f * (1.0 - f);
  }
  if (v == 1) {
    const double m = inverse_mills(lp);
    return -m * (lp + m);
  }
  const double m = inverse_mills(-lp);
  return -m * (m - lp);
}

Eigen::VectorXd s_term(const Gamma& gamma, const MeanScoreProblem& p, int i) {
  const Dataset& data = *p.data;
  const Eigen::VectorXd g = gamma.as_vector();
  if (data.v[i]) {
    const double lp = p.z_obs.row(i).dot(g);
    return p.z_obs.row(i).transpose() * score_residual(p.link, lp, 1);
  }
  const Rho3 rho0 = rho_v0(p.rho1[i], gamma, p.link, data.t[i], p.a1[i]);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(p.q);
  for (int k = 0; k < 3; ++k) {
    const double lp = p.z_pat[k].row(i).dot(g);
    s += rho0[k] * score_residual(p.link, lp, 0) * p.z_pat[k].row(i).transpose();
  }
  return s;
}

Eigen::VectorXd mean_score(const Gamma& gamma, const MeanScoreProblem& p,
                           bool fixed_rho) {
  const Dataset& data = *p.data;
  const Eigen::VectorXd g = gamma.as_vector();
  const bool logit = p.link.kind == LinkKind::Logit;
  Eigen::VectorXd total = Eigen::VectorXd::Zero(p.q);
  for (int i = 0; i < p.n(); ++i) {
    if (data.v[i]) {
      const double lp = p.z_obs.row(i).dot(g);
      total += score_residual(p.link, lp, 1) * p.z_obs.row(i).transpose();
      continue;
    }
    Rho3 w;
    if (fixed_rho) {
      w = p.rho1[i];
    } else if (logit) {
      w = rho_v0_from_log_ratios(p.rho1[i], gamma.lambda1, gamma.lambda2);
    } else {
      w = rho_v0(p.rho1[i], gamma, p.link, data.t[i], p.a1[i]);
    }
    for (int k = 0; k < 3; ++k) {
      const double lp = p.z_pat[k].row(i).dot(g);
      total +=
          w[k] * score_residual(p.link, lp, 0) * p.z_pat[k].row(i).transpose();
    }
  }
  return total;
}

ScoreJacobians jacobian_s(const Gamma& gamma, const MeanScoreProblem& p,
                          bool fixed_rho, bool want_eta) {
  const Dataset& data = *p.data;
  const int pb = p.p_eta / 2;
  const Eigen::VectorXd g = gamma.as_vector();
  const bool logit = p.link.kind == LinkKind::Logit;
  ScoreJacobians out;
  out.d_gamma = Eigen::MatrixXd::Zero(p.q, p.q);
  out.d_eta = Eigen::MatrixXd::Zero(p.q, p.p_eta);

  Eigen::VectorXd dlr1(p.q), dlr2(p.q), wgrad(p.q);
  for (int i = 0; i < p.n(); ++i) {
    if (data.v[i]) {
      const double lp = p.z_obs.row(i).dot(g);
      out.d_gamma += score_residual_dlp(p.link, lp, 1) *
                     p.z_obs.row(i).transpose() * p.z_obs.row(i);
      continue;
    }
    Rho3 w;
    Eigen::Matrix<double, 3, 2> drho_dl;
    if (fixed_rho) {
      w = p.rho1[i];
    } else {
      if (logit) {
        w = rho_v0_from_log_ratios(p.rho1[i], gamma.lambda1, gamma.lambda2);
        dlr1.setZero();
        dlr2.setZero();
        dlr1[p.q - 2] = 1.0;
        dlr2[p.q - 1] = 1.0;
      } else {
        w = rho_v0(p.rho1[i], gamma, p.link, data.t[i], p.a1[i]);
        log_odds_ratio_grads(gamma, p.link, data.t[i], p.a1[i], dlr1, dlr2);
      }
      drho_dl = rho_v0_grad_log_ratios(w);
    }
    for (int k = 0; k < 3; ++k) {
      const double lp = p.z_pat[k].row(i).dot(g);
      const double r = score_residual(p.link, lp, 0);
      out.d_gamma += w[k] * score_residual_dlp(p.link, lp, 0) *
                     p.z_pat[k].row(i).transpose() * p.z_pat[k].row(i);
      if (fixed_rho) continue;
      // weight sensitivity to gamma through the log odds ratios
      wgrad = drho_dl(k, 0) * dlr1 + drho_dl(k, 1) * dlr2;
      out.d_gamma += r * p.z_pat[k].row(i).transpose() * wgrad.transpose();
      if (!want_eta) continue;
      // weight sensitivity to eta: d rho_k(0) / d g_j = rho_k(0) (delta_kj - rho_j(0))
      for (int j = 0; j < 2; ++j) {
        const double b = w[k] * ((k == j ? 1.0 : 0.0) - w[j]);
        out.d_eta.block(0, j * pb, p.q, pb) +=
            (r * b) * p.z_pat[k].row(i).transpose() * p.x_dis.row(i);
      }
    }
  }
  return out;
}

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& g) {
  return g.cwiseMax(-kGammaBound).cwiseMin(kGammaBound);
}

struct LmRun {
  Eigen::VectorXd gamma;
  double f = INFINITY;
  int iterations = 0;
};

// Damped Gauss-Newton on f = ||S_bar/n||^2 within the coefficient box.
// With freeze_lambda the two nonignorability components are held fixed and
// only the beta block moves (profile step for the fallback start grid).
LmRun minimize_score_norm(const MeanScoreProblem& p, const Eigen::VectorXd& start,
                          bool fixed_rho, bool freeze_lambda = false) {
  const int n_a1 = static_cast<int>(p.data->a1_cols.size());
  const double inv_n = 1.0 / p.n();
  auto fval = [&](const Eigen::VectorXd& g) {
    const Eigen::VectorXd r =
        mean_score(Gamma::from_vector(g, n_a1), p, fixed_rho) * inv_n;
    return r.squaredNorm();
  };

  LmRun run;
  run.gamma = clamp_box(start);
  run.f = fval(run.gamma);
  const int q = static_cast<int>(start.size());
  const int n_free = freeze_lambda ? q - 2 : q;
  double nu = 1e-3;
  const int max_iter = freeze_lambda ? 60 : 150;
  for (int iter = 0; iter < max_iter; ++iter) {
    run.iterations = iter + 1;
    const Gamma g = Gamma::from_vector(run.gamma, n_a1);
    const Eigen::VectorXd r = mean_score(g, p, fixed_rho) * inv_n;
    const Eigen::MatrixXd Jfull =
        jacobian_s(g, p, fixed_rho, false).d_gamma * inv_n;
    const Eigen::MatrixXd J = Jfull.leftCols(n_free);
    const Eigen::VectorXd grad = 2.0 * J.transpose() * r;
    if (run.f <= 1e-28 || grad.lpNorm<Eigen::Infinity>() <= 1e-14) break;

    const Eigen::MatrixXd JtJ = J.transpose() * J;
    Eigen::VectorXd diag = JtJ.diagonal().cwiseMax(1e-12);
    bool accepted = false;
    for (int tries = 0; tries < 25; ++tries) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += nu * diag;
      const Eigen::VectorXd delta_free = A.ldlt().solve(-J.transpose() * r);
      if (!delta_free.allFinite()) {
        nu *= 4.0;
        continue;
      }
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(q);
      delta.head(n_free) = delta_free;
      const Eigen::VectorXd cand = clamp_box(run.gamma + delta);
      const double fc = fval(cand);
      if (fc < run.f) {
        const double step = (cand - run.gamma).lpNorm<Eigen::Infinity>();
        run.gamma = cand;
        run.f = fc;
        nu = std::max(nu / 3.0, 1e-12);
        accepted = true;
        if (step <= 1e-13 * (1.0 + run.gamma.lpNorm<Eigen::Infinity>()))
          iter = max_iter;  // no meaningful progress possible
        break;
      }
      nu *= 4.0;
      if (nu > 1e12) break;
    }
    if (!accepted) break;
  }
  return run;
}

}  // namespace

std::vector<Gamma> default_starts(const MeanScoreProblem& p) {
  const int n_a1 = static_cast<int>(p.data->a1_cols.size());
  std::vector<Gamma> starts;
  // (a) MAR-imputed weighted GLM: unverified subjects contribute the three
  // disease patterns weighted by rho_{k(1)}; lambda picked up from that fit.
  const LmRun mar = minimize_score_norm(p, Gamma::zeros(n_a1).as_vector(), true);
  const Gamma mar_fit = Gamma::from_vector(mar.gamma, n_a1);
  starts.push_back(mar_fit);
  // (b) the same fit with the nonignorability coefficients zeroed
  Gamma no_ni = mar_fit;
  no_ni.lambda1 = 0.0;
  no_ni.lambda2 = 0.0;
  starts.push_back(no_ni);
  // (c) all zeros
  starts.push_back(Gamma::zeros(n_a1));
  return starts;
}

SolverReport solve_gamma(const MeanScoreProblem& p) {
  return solve_gamma(p, default_starts(p));
}

namespace {

// Condition number of the scaled score Jacobian at a candidate solution.
double root_condition(const MeanScoreProblem& p, const Eigen::VectorXd& gamma) {
  const int n_a1 = static_cast<int>(p.data->a1_cols.size());
  const Eigen::MatrixXd J =
      jacobian_s(Gamma::from_vector(gamma, n_a1), p, false, false).d_gamma /
      p.n();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  return smin > 0.0 ? svd.singularValues()(0) / smin : INFINITY;
}

struct Candidate {
  LmRun run;
  int index = -1;
  bool converged = false;
  bool regular = false;
  double cond = INFINITY;
};

// Roots at the coefficient box or with a near-singular score Jacobian are
// degenerate solutions of the mean score equation (unidentified directions,
// e.g. samples with no unverified subject of some class). A regular root is
// preferred whenever one is found; among degenerate roots the least singular
// one wins.
Candidate evaluate_candidate(const MeanScoreProblem& p, LmRun run, int index) {
  Candidate c;
  c.run = std::move(run);
  c.index = index;
  c.converged = c.run.f <= kScoreNormTol;
  if (c.converged) {
    c.cond = root_condition(p, c.run.gamma);
    const bool at_bound =
        c.run.gamma.cwiseAbs().maxCoeff() >= kGammaBound - 1e-6;
    c.regular = !at_bound && c.cond <= 1e6;
  }
  return c;
}

bool better_candidate(const Candidate& a, const Candidate& b) {
  if (a.converged != b.converged) return a.converged;
  if (a.regular != b.regular) return a.regular;
  if (a.converged && !a.regular && a.cond != b.cond) return a.cond < b.cond;
  return a.run.f < b.run.f;
}

}  // namespace

SolverReport solve_gamma(const MeanScoreProblem& p,
                         const std::vector<Gamma>& starts) {
  if (starts.empty()) throw Error("solve_gamma requires at least one start");
  const int n_a1 = static_cast<int>(p.data->a1_cols.size());

  Candidate best;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    Candidate c = evaluate_candidate(
        p, minimize_score_norm(p, starts[s].as_vector(), false),
        static_cast<int>(s));
    if (best.index < 0 || better_candidate(c, best)) best = c;
    if (best.regular && best.run.f <= kScoreNormTol * 1e-6) break;
  }

  // Fallback start grid over the nonignorability plane when no regular root
  // was found: profile the beta block at fixed (lambda1, lambda2), then
  // release everything. Catches roots whose basin the default starts miss.
  if (!best.regular) {
    const Eigen::VectorXd anchor =
        best.converged ? best.run.gamma : starts[0].as_vector();
    int index = static_cast<int>(starts.size());
    for (const double l1 : {-4.0, -2.0, 0.0, 2.0}) {
      for (const double l2 : {-4.0, -2.0, 0.0, 2.0}) {
        Eigen::VectorXd g0 = anchor;
        g0[g0.size() - 2] = l1;
        g0[g0.size() - 1] = l2;
        const LmRun profile = minimize_score_norm(p, g0, false, true);
        Candidate c = evaluate_candidate(
            p, minimize_score_norm(p, profile.gamma, false), index++);
        if (better_candidate(c, best)) best = c;
        if (best.regular && best.run.f <= kScoreNormTol * 1e-6) break;
      }
      if (best.regular && best.run.f <= kScoreNormTol * 1e-6) break;
    }
  }

  SolverReport report;
  report.gamma_hat = Gamma::from_vector(best.run.gamma, n_a1);
  report.norm_at_solution = best.run.f;
  report.iterations = best.run.iterations;
  report.converged = best.converged;
  report.multistart_index = best.index;
  report.mean_score_at_solution = mean_score(report.gamma_hat, p, false);

  double min_pi = 1.0;
  const Dataset& data = *p.data;
  for (int i = 0; i < p.n(); ++i) {
    if (!data.v[i]) continue;
    const double lp =
        linear_predictor(report.gamma_hat, data.t[i], p.a1[i], p.d1[i], p.d2[i]);
    min_pi = std::min(min_pi, p.link.cdf(lp));
  }
  report.min_pi_verified = min_pi;
  return report;
}

}  // namespace vus
