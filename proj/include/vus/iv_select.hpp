#pragma once

#include <string>
#include <vector>

#include "vus/analysis.hpp"

namespace vus {

struct IvSelectionReport {
  struct Step1Entry {
    std::string name;
    double p_value = 1.0;  // joint 2-df Wald test across the two logit blocks
    bool retained = false;
  };
  struct Step2Entry {
    std::string name;
    double p_value = 1.0;  // Wald p of the covariate in the verification model
    bool significant = false;
    bool converged = true;
  };
  std::vector<Step1Entry> step1;
  std::vector<Step2Entry> step2;
  std::vector<std::string> a1;  // final verification-model covariates
  std::vector<std::string> a2;  // instrumental block
  bool disease_model_empty = false;  // all covariates dropped at step 1
  SolverReport final_gamma;
  std::vector<WaldTest> final_tests;
  bool final_converged = false;
};

struct IvSelectOptions {
  Link link{LinkKind::Logit};
  double alpha = 0.05;
};

/// Three-step instrumental-variable selection: backward stepwise on the
/// conditional disease model, one-at-a-time mean-score Wald screening of the
/// retained covariates in the verification model, then a final solve with
/// T and the significant block A1.
IvSelectionReport iv_select(const Dataset& data, const IvSelectOptions& options);

}  // namespace vus
