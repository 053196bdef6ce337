#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "vus/data.hpp"
#include "vus/disease.hpp"
#include "vus/kernel.hpp"
#include "vus/mean_score.hpp"
#include "vus/verification.hpp"

namespace vus {

struct PseudoWeights {
  Method method = Method::FI;
  std::vector<WeightTriple> w;
  double min_pi_verified = 1.0;  // 1 when pi is not used by the method
  int n_large = 0;               // count of |weight| > 50
  bool forced = false;           // built despite an unconverged fit
};

/// Builds the per-subject pseudo-disease weight triples for a method.
///   FI : rho(1) for verified, rho(0) for unverified
///   MSI: observed one-hot for verified, rho(0) for unverified
///   IPW: one-hot / pi for verified, zero otherwise
///   PDR: D_k/pi - rho(0)_k (1-pi)/pi for verified, rho(0) for unverified
///   Naive: observed one-hot for verified, zero otherwise
///   Full: one-hot from retained simulation truth
/// disease/report may be null for Naive (both) and Full (both).
PseudoWeights pseudo_weights(Method method, const Dataset& data,
                             const DiseaseFit* disease,
                             const SolverReport* report, Link link,
                             bool force = false);

/// Plug-in VUS: vus_fast applied to the method's pseudo weights.
double estimate_vus(Method method, const Dataset& data,
                    const DiseaseFit* disease, const SolverReport* report,
                    Link link);

/// Derivatives of the pseudo weights with respect to the estimated model
/// parameters, per class: n x dim(eta) and n x dim(gamma). Zero matrices for
/// Naive/Full (parameter-free weights).
struct WeightDerivs {
  std::array<Eigen::MatrixXd, 3> d_eta;
  std::array<Eigen::MatrixXd, 3> d_gamma;
};

WeightDerivs pseudo_weight_derivs(Method method, const Dataset& data,
                                  const DiseaseFit& disease,
                                  const SolverReport& report, Link link);

}  // namespace vus
