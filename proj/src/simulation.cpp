#include "vus/simulation.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace vus {

const char* scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::I: return "I";
    case ScenarioId::II: return "II";
    case ScenarioId::III: return "III";
    case ScenarioId::IIIHigh: return "IIIb";
    case ScenarioId::IV: return "IV";
    case ScenarioId::V: return "V";
    case ScenarioId::VI: return "VI";
  }
  return "?";
}

std::optional<ScenarioId> scenario_from_string(const std::string& s) {
  if (s == "I" || s == "1") return ScenarioId::I;
  if (s == "II" || s == "2") return ScenarioId::II;
  if (s == "III" || s == "3") return ScenarioId::III;
  if (s == "IIIb" || s == "III-high" || s == "3b") return ScenarioId::IIIHigh;
  if (s == "IV" || s == "4") return ScenarioId::IV;
  if (s == "V" || s == "5") return ScenarioId::V;
  if (s == "VI" || s == "6") return ScenarioId::VI;
  return std::nullopt;
}

ScenarioSpec ScenarioSpec::by_id(ScenarioId id, int n) {
  ScenarioSpec s;
  s.id = id;
  s.n = n;
  auto gamma_vec = [](std::initializer_list<double> v) {
    Eigen::VectorXd g(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) g[i++] = x;
    return g;
  };
  switch (id) {
    case ScenarioId::I:
      s.covariate_names = {"A"};
      s.working_disease.terms = {{0, 1}};
      s.working_a1_cols = {0};
      s.working_link = Link{LinkKind::Logit};
      s.true_gamma = gamma_vec({2.0, 0.5, -1.2, -2.0, -1.0});
      s.paper_true_vus = 0.791;
      s.paper_verification_rate = 0.57;
      break;
    case ScenarioId::II:
      s.covariate_names = {"A"};
      s.working_disease.terms = {{0, 1}};
      s.working_a1_cols = {};
      s.working_link = Link{LinkKind::Logit};
      s.true_gamma = gamma_vec({1.0, 1.0, -2.0, -1.0});
      s.paper_true_vus = 0.843;
      s.paper_verification_rate = 0.44;
      break;
    case ScenarioId::III:
      s.covariate_names = {"A1", "A2"};
      s.working_disease.terms = {{0, 1}, {1, 1}};
      s.working_a1_cols = {0};
      s.working_link = Link{LinkKind::Probit};
      s.true_gamma = gamma_vec({1.5, 1.0, -0.5, -2.0, -1.0});
      s.paper_true_vus = 0.457;
      s.paper_verification_rate = 0.47;
      break;
    case ScenarioId::IIIHigh:
      s.covariate_names = {"A1", "A2"};
      s.working_disease.terms = {{0, 1}, {1, 1}};
      s.working_a1_cols = {0};
      s.working_link = Link{LinkKind::Probit};
      s.true_gamma = gamma_vec({2.5, 1.0, -1.2, -2.0, -1.0});
      s.paper_true_vus = 0.457;
      s.paper_verification_rate = 0.72;
      break;
    case ScenarioId::IV:
      s.covariate_names = {"A"};
      s.working_disease.terms = {{0, 1}};
      s.working_a1_cols = {};  // A omitted from the verification model
      s.working_link = Link{LinkKind::Logit};
      s.paper_true_vus = 0.843;
      s.paper_verification_rate = 0.42;
      break;
    case ScenarioId::V:
      s.covariate_names = {"A1", "A2"};
      s.working_disease.terms = {{0, 1}, {1, 1}};
      s.working_a1_cols = {0};  // A2 omitted; probit instead of the true logit
      s.working_link = Link{LinkKind::Probit};
      s.paper_true_vus = 0.74;
      s.paper_verification_rate = 0.56;
      break;
    case ScenarioId::VI:
      s.covariate_names = {"A1", "A2"};
      s.working_disease.terms = {{0, 2}, {1, 1}};  // A1^2, A2; interaction omitted
      s.working_a1_cols = {0};
      s.working_link = Link{LinkKind::Logit};
      s.true_gamma = gamma_vec({1.0, 2.0, -1.5, -1.0, -2.0});
      s.paper_true_vus = 0.728;
      s.paper_verification_rate = 0.46;
      break;
  }
  return s;
}

namespace {

int draw_class(double p1, double p2, double u) {
  if (u < p1) return 1;
  if (u < p1 + p2) return 2;
  return 3;
}

// class from a two-logit multinomial model with reference class 3
int draw_class_logits(double g1, double g2, double u) {
  const double m = std::max({0.0, g1, g2});
  const double e0 = std::exp(-m), e1 = std::exp(g1 - m), e2 = std::exp(g2 - m);
  const double den = e0 + e1 + e2;
  return draw_class(e1 / den, e2 / den, u);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Dataset generate(const ScenarioSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> stdnorm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const int n = spec.n;
  Dataset ds;
  ds.covariate_names = spec.covariate_names;
  ds.a1_cols = spec.working_a1_cols;
  ds.t.resize(n);
  ds.a.resize(n, static_cast<int>(spec.covariate_names.size()));
  ds.v.resize(n);
  ds.d_obs.assign(n, 0);
  ds.d_true.assign(n, 0);

  for (int i = 0; i < n; ++i) {
    double t = 0.0, a1 = 0.0, a2 = 0.0;
    int d = 3;
    double pv = 0.5;
    switch (spec.id) {
      case ScenarioId::I: {
        // (T, A) bivariate normal, Cholesky of ((3.71, 1.36), (1.36, 3.13))
        const double z1 = stdnorm(rng), z2 = stdnorm(rng);
        const double l11 = std::sqrt(3.71);
        const double l21 = 1.36 / l11;
        const double l22 = std::sqrt(3.13 - l21 * l21);
        t = 3.7 + l11 * z1;
        a1 = 1.85 + l21 * z1 + l22 * z2;
        d = draw_class_logits(15.0 - 3.3 * t - 0.7 * a1,
                              9.5 - 1.7 * t - 0.3 * a1, unif(rng));
        pv = logistic(2.0 + 0.5 * t - 1.2 * a1 - 2.0 * (d == 1) - (d == 2));
        break;
      }
      case ScenarioId::II:
      case ScenarioId::IV: {
        d = draw_class(0.7, 0.2, unif(rng));
        t = (d - 1) + 0.5 * stdnorm(rng);
        a1 = 0.5 * (d - 1) + 0.5 * stdnorm(rng);
        pv = spec.id == ScenarioId::II
                 ? logistic(1.0 + t - 2.0 * (d == 1) - (d == 2))
                 : logistic(1.0 + t - 0.5 * a1 - 2.0 * (d == 1) - (d == 2));
        break;
      }
      case ScenarioId::III:
      case ScenarioId::IIIHigh: {
        d = draw_class(0.7, 0.2, unif(rng));
        t = 0.4 * (d - 1) + 0.5 * stdnorm(rng);
        a1 = 0.5 * (d - 1) + 0.5 * stdnorm(rng);
        if (d == 1) a2 = -2.0 + unif(rng);
        else if (d == 2) a2 = -1.0 + 2.0 * unif(rng);
        else a2 = 1.0 + unif(rng);
        const double base = spec.id == ScenarioId::III
                                ? 1.5 + t - 0.5 * a1
                                : 2.5 + t - 1.2 * a1;
        pv = norm_cdf(base - 2.0 * (d == 1) - (d == 2));
        break;
      }
      case ScenarioId::V:
      case ScenarioId::VI: {
        t = -3.0 + 6.0 * unif(rng);
        a1 = stdnorm(rng);
        a2 = unif(rng) < 0.6 ? 1.0 : 0.0;
        if (spec.id == ScenarioId::V) {
          d = draw_class_logits(5.0 - 6.0 * t + 2.0 * a1 + a2,
                                4.0 - 3.0 * t + 4.0 * a1 + 2.0 * a2, unif(rng));
          pv = logistic(1.0 + 1.5 * t - a1 + 2.0 * a2 - 1.5 * (d == 1) -
                        2.0 * (d == 2));
        } else {
          d = draw_class_logits(
              5.0 - 6.0 * t + 2.0 * a1 + a2 + a1 * a2,
              4.0 - 3.0 * t + 4.0 * a1 + 2.0 * a2 + 0.5 * a1 * a2, unif(rng));
          pv = logistic(1.0 + 2.0 * t - 1.5 * a1 - (d == 1) - 2.0 * (d == 2));
        }
        break;
      }
    }
    const bool verified = unif(rng) < pv;
    ds.t[i] = t;
    ds.a(i, 0) = a1;
    if (ds.a.cols() > 1) ds.a(i, 1) = a2;
    ds.v[i] = verified ? 1 : 0;
    ds.d_true[i] = d;
    ds.d_obs[i] = verified ? d : 0;
  }
  return ds;
}

double true_vus(ScenarioId id, int n_big, std::uint64_t seed) {
  const ScenarioSpec spec = ScenarioSpec::by_id(id, n_big);
  const Dataset data = generate(spec, seed);
  return estimate_vus(Method::Full, data, nullptr, nullptr, spec.working_link);
}

namespace {

struct ReplicateOutcome {
  bool ok = false;
  std::vector<double> estimate, asd, bsd;
  Eigen::VectorXd gamma;
};

}  // namespace

McReport run_mc(const ScenarioSpec& spec, int reps, int bootstrap_B,
                std::uint64_t seed) {
  const std::vector<Method> methods{Method::FI, Method::MSI, Method::IPW,
                                    Method::PDR};
  const int nm = static_cast<int>(methods.size());

  std::vector<ReplicateOutcome> outcomes(reps);
  parallel_for(reps, [&](int r) {
    const std::uint64_t rep_seed = derive_seed(seed, static_cast<std::uint64_t>(r));
    const Dataset data = generate(spec, rep_seed);
    AnalysisOptions opt;
    opt.link = spec.working_link;
    opt.design = spec.working_disease;
    opt.methods = methods;
    opt.include_naive = false;
    opt.with_asd = true;
    opt.bootstrap_B = bootstrap_B;
    opt.seed = derive_seed(rep_seed, 0x626f6f74ULL);  // bootstrap chain
    ReplicateOutcome& out = outcomes[r];
    try {
      const AnalysisResult res = analyze(data, opt);
      if (!res.ok) return;
      out.ok = true;
      out.gamma = res.gamma.gamma_hat.as_vector();
      for (int m = 0; m < nm; ++m) {
        out.estimate.push_back(res.vus[m].estimate);
        out.asd.push_back(res.vus[m].asd);
        if (bootstrap_B > 0) out.bsd.push_back(*res.vus[m].bsd);
      }
    } catch (const Error&) {
      out.ok = false;
    }
  });

  McReport rep;
  rep.scenario = spec.id;
  rep.n = spec.n;
  rep.requested_reps = reps;
  rep.true_vus_used = spec.paper_true_vus;

  const int q = 4 + static_cast<int>(spec.working_a1_cols.size());
  Eigen::VectorXd gamma_sum = Eigen::VectorXd::Zero(q);
  std::vector<std::vector<double>> est(nm), asd(nm), bsd(nm);
  int ok_count = 0;
  for (int r = 0; r < reps; ++r) {
    const ReplicateOutcome& o = outcomes[r];
    if (!o.ok) {
      ++rep.failed_reps;
      continue;
    }
    ++ok_count;
    gamma_sum += o.gamma;
    for (int m = 0; m < nm; ++m) {
      est[m].push_back(o.estimate[m]);
      asd[m].push_back(o.asd[m]);
      if (bootstrap_B > 0) bsd[m].push_back(o.bsd[m]);
    }
  }
  rep.unreliable = rep.failed_reps > 0.05 * reps;

  rep.gamma_names = {"beta0", "beta1"};
  for (int c : spec.working_a1_cols)
    rep.gamma_names.push_back("beta2," + spec.covariate_names[c]);
  rep.gamma_names.push_back("lambda1");
  rep.gamma_names.push_back("lambda2");
  rep.gamma_means.assign(q, 0.0);
  if (ok_count > 0)
    for (int j = 0; j < q; ++j) rep.gamma_means[j] = gamma_sum[j] / ok_count;

  const double truth = spec.paper_true_vus;
  for (int m = 0; m < nm; ++m) {
    MethodSummary s;
    s.method = methods[m];
    const auto& e = est[m];
    const int k = static_cast<int>(e.size());
    if (k == 0) {
      rep.methods.push_back(s);
      continue;
    }
    double mean = 0.0;
    for (double x : e) mean += x;
    mean /= k;
    double ss = 0.0;
    for (double x : e) ss += (x - mean) * (x - mean);
    s.mean_estimate = mean;
    s.relative_bias_pct = 100.0 * (mean - truth) / truth;
    s.mcsd = k > 1 ? std::sqrt(ss / (k - 1)) : 0.0;
    double asd_mean = 0.0;
    int cover_asy = 0;
    for (int r = 0; r < k; ++r) {
      asd_mean += asd[m][r];
      if (std::fabs(e[r] - truth) <= 1.96 * asd[m][r]) ++cover_asy;
    }
    s.mean_asd = asd_mean / k;
    s.coverage_asy_pct = 100.0 * cover_asy / k;
    if (bootstrap_B > 0) {
      double bsd_mean = 0.0;
      int cover_bst = 0;
      for (int r = 0; r < k; ++r) {
        bsd_mean += bsd[m][r];
        if (std::fabs(e[r] - truth) <= 1.96 * bsd[m][r]) ++cover_bst;
      }
      s.mean_bsd = bsd_mean / k;
      s.coverage_bst_pct = 100.0 * cover_bst / k;
    }
    rep.methods.push_back(s);
  }
  return rep;
}

namespace {

std::string fmt(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

}  // namespace

std::vector<std::vector<std::string>> mc_report_rows(const McReport& r) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Method", "Mean", "Bias(%)", "MCSD", "ASD", "BSD", "CP.Asy(%)",
                  "CP.Bst(%)"});
  for (const auto& m : r.methods) {
    rows.push_back({method_name(m.method), fmt(m.mean_estimate, 3),
                    fmt(m.relative_bias_pct, 1), fmt(m.mcsd, 3),
                    fmt(m.mean_asd, 3), m.mean_bsd ? fmt(*m.mean_bsd, 3) : "--",
                    fmt(m.coverage_asy_pct, 1),
                    m.coverage_bst_pct ? fmt(*m.coverage_bst_pct, 1) : "--"});
  }
  return rows;
}

std::string mc_report_text(const McReport& r) {
  std::string out;
  out += "Scenario " + std::string(scenario_name(r.scenario)) +
         ", n = " + std::to_string(r.n) + ", replicates = " +
         std::to_string(r.requested_reps - r.failed_reps) + " of " +
         std::to_string(r.requested_reps) + " (true VUS " +
         fmt(r.true_vus_used, 3) + ")\n";
  if (r.unreliable)
    out += "WARNING: more than 5% of replicates failed; estimates may be distorted\n";
  const auto rows = mc_report_rows(r);
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::string cell = row[c];
      cell.insert(0, width[c] - cell.size(), ' ');
      out += cell;
      out += c + 1 < row.size() ? "  " : "";
    }
    out += "\n";
  }
  out += "\nVerification-model coefficient means:\n";
  for (std::size_t j = 0; j < r.gamma_names.size(); ++j)
    out += "  " + r.gamma_names[j] + " = " + fmt(r.gamma_means[j], 3) + "\n";
  return out;
}

}  // namespace vus
