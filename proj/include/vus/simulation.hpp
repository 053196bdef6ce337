#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vus/analysis.hpp"

namespace vus {

enum class ScenarioId { I, II, III, IIIHigh, IV, V, VI };

const char* scenario_name(ScenarioId id);
std::optional<ScenarioId> scenario_from_string(const std::string& s);

/// Generative scenario plus the working-model configuration used when
/// fitting; the two may deliberately disagree (misspecification studies).
struct ScenarioSpec {
  ScenarioId id = ScenarioId::I;
  int n = 0;

  std::vector<std::string> covariate_names;
  DiseaseDesign working_disease;        // conditional disease model terms
  std::vector<int> working_a1_cols;     // verification-model covariates
  Link working_link{LinkKind::Logit};

  std::optional<Eigen::VectorXd> true_gamma;  // set when the working model is correct
  double paper_true_vus = 0.0;
  double paper_verification_rate = 0.0;

  static ScenarioSpec by_id(ScenarioId id, int n);
};

/// Draws a dataset exactly per the scenario's generative model, retaining the
/// true disease class of every subject.
Dataset generate(const ScenarioSpec& spec, std::uint64_t seed);

/// Monte Carlo approximation of the population VUS: full-data plug-in on one
/// large generated sample.
double true_vus(ScenarioId id, int n_big, std::uint64_t seed);

struct MethodSummary {
  Method method = Method::FI;
  double mean_estimate = 0.0;
  double relative_bias_pct = 0.0;
  double mcsd = 0.0;
  double mean_asd = 0.0;
  std::optional<double> mean_bsd;
  double coverage_asy_pct = 0.0;
  std::optional<double> coverage_bst_pct;
};

struct McReport {
  ScenarioId scenario = ScenarioId::I;
  int n = 0;
  int requested_reps = 0;
  int failed_reps = 0;
  bool unreliable = false;  // more than 5% of replicates failed
  double true_vus_used = 0.0;
  std::vector<MethodSummary> methods;
  std::vector<std::string> gamma_names;
  std::vector<double> gamma_means;  // Monte Carlo means of the solver estimates
};

/// Runs the Monte Carlo experiment: per replicate generate, fit the working
/// models, estimate, and score CIs against the scenario's stated true VUS.
/// Replicate r uses seed derive_seed(seed, r); failures are excluded and
/// counted. bootstrap_B = 0 disables the bootstrap columns.
McReport run_mc(const ScenarioSpec& spec, int reps, int bootstrap_B,
                std::uint64_t seed);

/// Table 2/3-style column layout: Method, Bias, MCSD, ASD, BSD, CP.Asy, CP.Bst.
std::string mc_report_text(const McReport& report);
std::vector<std::vector<std::string>> mc_report_rows(const McReport& report);

}  // namespace vus
