#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vus/inference.hpp"

namespace vus {

struct AnalysisOptions {
  Link link{LinkKind::Logit};
  std::optional<DiseaseDesign> design;  // default: all covariates, untransformed
  std::vector<Method> methods{Method::FI, Method::MSI, Method::IPW, Method::PDR};
  bool include_naive = true;
  bool include_full = false;  // simulation truth required
  bool with_asd = true;
  int bootstrap_B = 0;
  std::uint64_t seed = 1;
  LambdaPath lambda_path = LambdaPath::Fast;
};

struct AnalysisResult {
  bool ok = false;
  std::string failure;  // set when !ok (non-convergence)
  DiseaseFit disease;
  SolverReport gamma;
  SandwichCovariances covariances;
  std::vector<WaldTest> disease_tests;       // per coefficient of eta
  std::vector<WaldTest> verification_tests;  // per coefficient of gamma
  std::vector<VusResult> vus;                // options.methods order, then Naive/Full
  int bootstrap_failed = 0;
};

/// End-to-end estimation on one dataset: conditional disease fit, mean-score
/// solve, pseudo-weight VUS estimates, asymptotic and optional bootstrap SEs.
/// Structural errors throw; numerical non-convergence is reported via ok.
AnalysisResult analyze(const Dataset& data, const AnalysisOptions& options);

std::vector<WaldTest> disease_wald_tests(const DiseaseFit& fit,
                                         const std::vector<std::string>& term_names);

/// Names of the disease-design terms, e.g. "A1^2" for a squared column.
std::vector<std::string> design_term_names(const Dataset& data,
                                           const DiseaseDesign& design);

}  // namespace vus
