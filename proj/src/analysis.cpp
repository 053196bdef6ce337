#include "vus/analysis.hpp"

#include <cmath>

namespace vus {

std::vector<std::string> design_term_names(const Dataset& data,
                                           const DiseaseDesign& design) {
  std::vector<std::string> names;
  for (const auto& term : design.terms) {
    std::string base = data.covariate_names[term.col];
    if (term.power != 1) base += "^" + std::to_string(term.power);
    names.push_back(base);
  }
  return names;
}

std::vector<WaldTest> disease_wald_tests(const DiseaseFit& fit,
                                         const std::vector<std::string>& term_names) {
  std::vector<std::string> block = {"Intercept", "T"};
  for (const auto& t : term_names) block.push_back(t);
  const Eigen::VectorXd theta = fit.eta_hat.as_vector();
  const int pb = fit.eta_hat.block_dim();
  std::vector<WaldTest> out;
  for (int j = 0; j < theta.size(); ++j) {
    WaldTest t;
    t.name = (j < pb ? "class1:" : "class2:") + block[j % pb];
    t.estimate = theta[j];
    t.se = std::sqrt(std::max(0.0, fit.sigma_eta_hat(j, j)) / fit.n_verified);
    t.z = t.se > 0 ? t.estimate / t.se : 0.0;
    t.p_value = t.se > 0 ? normal_two_sided_p(t.z) : 1.0;
    out.push_back(t);
  }
  return out;
}

AnalysisResult analyze(const Dataset& data, const AnalysisOptions& options) {
  AnalysisResult res;
  const DiseaseDesign design =
      options.design ? *options.design
                     : DiseaseDesign::all_covariates(data.n_covariates());

  res.disease = fit_disease(data, design);
  res.disease_tests =
      disease_wald_tests(res.disease, design_term_names(data, design));
  if (!res.disease.converged) {
    res.failure = "disease model fit did not converge";
    return res;
  }

  const MeanScoreProblem problem = prepare_problem(data, res.disease, options.link);
  res.gamma = solve_gamma(problem);
  if (!res.gamma.converged) {
    res.failure = "mean score solver did not converge";
    return res;
  }

  const ScoreStack stack =
      build_score_stack(problem, res.disease, res.gamma.gamma_hat);
  res.covariances = sandwich_covariances(stack, data.n());
  std::vector<std::string> a1_names;
  for (int c : data.a1_cols) a1_names.push_back(data.covariate_names[c]);
  res.verification_tests = gamma_wald_tests(
      res.gamma.gamma_hat, res.covariances.sigma_gamma, data.n(), a1_names);

  std::vector<Method> methods = options.methods;
  if (options.include_naive) methods.push_back(Method::Naive);
  if (options.include_full) methods.push_back(Method::Full);

  const SortedByTest sorted(data.t);
  for (Method m : methods) {
    VusResult r;
    r.method = m;
    const bool model_based = m != Method::Naive && m != Method::Full;
    const PseudoWeights w =
        pseudo_weights(m, data,
                       model_based ? &res.disease : nullptr,
                       model_based ? &res.gamma : nullptr, options.link);
    std::vector<double> w1, w2, w3;
    split_weights(w.w, w1, w2, w3);
    r.estimate = vus_from_sums(weighted_kernel_sums(sorted, w1, w2, w3));
    r.out_of_range = r.estimate < 0.0 || r.estimate > 1.0;
    r.clipped = std::min(1.0, std::max(0.0, r.estimate));
    r.min_pi_verified = w.min_pi_verified;
    r.n_large_weights = w.n_large;
    if (options.with_asd) {
      const std::vector<double> lam =
          options.lambda_path == LambdaPath::Fast
              ? lambda_hats(sorted, w.w, r.estimate)
              : lambda_hats_naive(data.t, w.w, r.estimate);
      std::vector<double> qs(data.n(), 0.0);
      if (model_based) {
        const WeightDerivs derivs =
            pseudo_weight_derivs(m, data, res.disease, res.gamma, options.link);
        const Eigen::VectorXd jac =
            average_g_jacobian(sorted, w.w, derivs, r.estimate);
        qs = q_hats(stack, jac);
      }
      r.asd = asymptotic_se_from_parts(lam, qs, w.w);
      r.ci95 = {r.estimate - 1.96 * r.asd, r.estimate + 1.96 * r.asd};
    }
    res.vus.push_back(r);
  }

  if (options.bootstrap_B > 0) {
    const BootstrapSummary boot = bootstrap_ses(
        methods, data, design, options.link, options.bootstrap_B, options.seed);
    res.bootstrap_failed = boot.failed;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      res.vus[m].bsd = boot.se[m];
      res.vus[m].ci95_boot = {res.vus[m].estimate - 1.96 * boot.se[m],
                              res.vus[m].estimate + 1.96 * boot.se[m]};
    }
  }

  res.ok = true;
  return res;
}

}  // namespace vus
