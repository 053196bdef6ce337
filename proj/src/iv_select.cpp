#include "vus/iv_select.hpp"

#include <algorithm>

namespace vus {

namespace {

// Joint Wald test of the two coefficients (one per logit block) of a
// disease-model term: chi-square with 2 df.
double term_p_value(const DiseaseFit& fit, int term_index) {
  const int pb = fit.eta_hat.block_dim();
  const int j1 = 2 + term_index;        // within block 1
  const int j2 = pb + 2 + term_index;   // within block 2
  Eigen::Vector2d est(fit.eta_hat.eta1[2 + term_index],
                      fit.eta_hat.eta2[2 + term_index]);
  Eigen::Matrix2d cov;
  cov << fit.sigma_eta_hat(j1, j1), fit.sigma_eta_hat(j1, j2),
      fit.sigma_eta_hat(j2, j1), fit.sigma_eta_hat(j2, j2);
  cov /= fit.n_verified;
  const Eigen::Vector2d sol = cov.ldlt().solve(est);
  const double w = est.dot(sol);
  return chisq2_sf(std::max(0.0, w));
}

}  // namespace

IvSelectionReport iv_select(const Dataset& data, const IvSelectOptions& options) {
  IvSelectionReport report;
  const int m = data.n_covariates();
  if (m < 2) throw Error("iv selection needs at least two candidate covariates");

  // Step (i): backward stepwise on the conditional disease model.
  std::vector<int> retained(m);
  for (int c = 0; c < m; ++c) retained[c] = c;
  DiseaseFit fit;
  std::vector<double> last_p;
  for (;;) {
    DiseaseDesign design;
    for (int c : retained) design.terms.push_back({c, 1});
    fit = fit_disease(data, design);
    last_p.assign(retained.size(), 1.0);
    int worst = -1;
    double worst_p = options.alpha;
    for (std::size_t j = 0; j < retained.size(); ++j) {
      last_p[j] = term_p_value(fit, static_cast<int>(j));
      if (last_p[j] > worst_p) {
        worst_p = last_p[j];
        worst = static_cast<int>(j);
      }
    }
    if (worst < 0 || retained.empty()) break;
    retained.erase(retained.begin() + worst);
    if (retained.empty()) {
      // intercept + T disease model; proceed with a warning flag
      report.disease_model_empty = true;
      fit = fit_disease(data, DiseaseDesign{});
      last_p.clear();
      break;
    }
  }
  {
    std::vector<char> kept(m, 0);
    for (int c : retained) kept[c] = 1;
    std::size_t jj = 0;
    for (int c = 0; c < m; ++c) {
      IvSelectionReport::Step1Entry e;
      e.name = data.covariate_names[c];
      e.retained = kept[c];
      e.p_value = kept[c] && jj < last_p.size() ? last_p[jj++] : 1.0;
      report.step1.push_back(e);
    }
  }

  // Step (ii): one retained covariate at a time in the verification model.
  std::vector<int> a1_cols;
  for (int c : retained) {
    IvSelectionReport::Step2Entry e;
    e.name = data.covariate_names[c];
    Dataset one = data;
    one.a1_cols = {c};
    try {
      const MeanScoreProblem problem = prepare_problem(one, fit, options.link);
      const SolverReport rep = solve_gamma(problem);
      if (!rep.converged) {
        e.converged = false;
      } else {
        const ScoreStack stack = build_score_stack(problem, fit, rep.gamma_hat);
        const SandwichCovariances cov = sandwich_covariances(stack, one.n());
        const auto tests = gamma_wald_tests(rep.gamma_hat, cov.sigma_gamma,
                                            one.n(), {e.name});
        e.p_value = tests[2].p_value;  // the covariate sits after intercept, T
        e.significant = e.p_value <= options.alpha;
      }
    } catch (const Error&) {
      e.converged = false;
    }
    if (e.significant) a1_cols.push_back(c);
    report.step2.push_back(e);
  }

  // Step (iii): final solve with T and the significant block A1.
  Dataset final_data = data;
  final_data.a1_cols = a1_cols;
  for (int c : a1_cols) report.a1.push_back(data.covariate_names[c]);
  for (int c : retained)
    if (std::find(a1_cols.begin(), a1_cols.end(), c) == a1_cols.end())
      report.a2.push_back(data.covariate_names[c]);

  const MeanScoreProblem problem = prepare_problem(final_data, fit, options.link);
  report.final_gamma = solve_gamma(problem);
  report.final_converged = report.final_gamma.converged;
  if (report.final_converged) {
    const ScoreStack stack =
        build_score_stack(problem, fit, report.final_gamma.gamma_hat);
    const SandwichCovariances cov = sandwich_covariances(stack, final_data.n());
    report.final_tests = gamma_wald_tests(report.final_gamma.gamma_hat,
                                          cov.sigma_gamma, final_data.n(),
                                          report.a1);
  }
  return report;
}

}  // namespace vus
