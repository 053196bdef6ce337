#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vus {

// ---------------------------------------------------------------------------
// Error types. Structural problems throw; numerical non-convergence is
// reported through flags/diagnostics on the result objects instead.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroDenominator : Error {
  ZeroDenominator() : Error("weighted triple count is zero") {}
};
struct RankDeficientDesign : Error {
  explicit RankDeficientDesign(const std::string& what) : Error(what) {}
};
struct MissingClassAmongVerified : Error {
  explicit MissingClassAmongVerified(int k)
      : Error("no verified subject of class " + std::to_string(k)) {}
};
struct UnverifiedSubject : Error {
  UnverifiedSubject() : Error("operation requires a verified subject") {}
};
struct InvalidDiseaseIndicators : Error {
  InvalidDiseaseIndicators() : Error("d1 = d2 = 1 is not a valid disease pattern") {}
};
struct DegenerateDenominator : Error {
  DegenerateDenominator() : Error("Bayes reweighting denominator underflowed to zero") {}
};
struct NonPositivePi : Error {
  NonPositivePi() : Error("verification probability <= 0 for a verified subject") {}
};
struct SingularInformation : Error {
  explicit SingularInformation(double cond)
      : Error("information matrix numerically singular (cond ~ " + std::to_string(cond) + ")") {}
};
struct ZeroClassPrevalence : Error {
  explicit ZeroClassPrevalence(int k)
      : Error("estimated prevalence of class " + std::to_string(k) + " is zero") {}
};
struct TooFewSuccessfulResamples : Error {
  TooFewSuccessfulResamples(int ok, int requested)
      : Error("only " + std::to_string(ok) + " of " + std::to_string(requested) +
              " bootstrap resamples succeeded") {}
};
struct SchemaError : Error {
  explicit SchemaError(const std::string& what) : Error(what) {}
};

// ---------------------------------------------------------------------------
// Compensated summation
// ---------------------------------------------------------------------------

/// Kahan accumulator; keeps n^3-scale cancellations under signed weights in check.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic per-task seed derivation (replicates, bootstrap resamples).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 1));
}

// ---------------------------------------------------------------------------
// Normal distribution helpers
// ---------------------------------------------------------------------------

inline double norm_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779399461;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244008444);
}

/// log erfc(z) for z >= 0, stable far into the tail where erfc underflows.
inline double log_erfc_pos(double z) {
  if (z < 25.0) return std::log(std::erfc(z));
  // asymptotic erfc(z) ~ exp(-z^2)/(z sqrt(pi)) (1 - 1/(2z^2) + 3/(4z^4) - ...)
  const double zi2 = 1.0 / (z * z);
  const double series = 1.0 + zi2 * (-0.5 + zi2 * (0.75 + zi2 * (-1.875 + zi2 * 6.5625)));
  return -z * z - std::log(z) - 0.5723649429247000870717137 + std::log(series);
}

inline double log_norm_cdf(double x) {
  const double z = -x * 0.7071067811865475244008444;
  if (z < 12.0) {
    const double p = norm_cdf(x);
    if (p > 1e-280) return std::log(p);
  }
  return -0.6931471805599453094172321 + log_erfc_pos(z);
}

/// phi(x)/Phi(x), computed in log space so deep tails stay finite.
inline double inverse_mills(double x) {
  static const double log_inv_sqrt_2pi = -0.9189385332046727417803297;
  return std::exp(log_inv_sqrt_2pi - 0.5 * x * x - log_norm_cdf(x));
}

/// Two-sided normal p-value for a z statistic.
inline double normal_two_sided_p(double z) {
  return std::erfc(std::fabs(z) * 0.7071067811865475244008444);
}

/// Survival function of a chi-square with 2 degrees of freedom.
inline double chisq2_sf(double x) { return std::exp(-0.5 * x); }

// ---------------------------------------------------------------------------
// Parallel map over an index range
// ---------------------------------------------------------------------------

/// Number of worker threads: VUS_THREADS env var, else hardware concurrency.
int worker_thread_count();

/// Runs fn(i) for i in [0, n). Work is distributed over worker_thread_count()
/// threads; fn must only touch slot i of any shared output so that results do
/// not depend on the schedule. Exceptions are rethrown on the calling thread.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace vus
