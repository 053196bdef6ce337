#include "vus/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vus/csv.hpp"
#include "vus/iv_select.hpp"
#include "vus/simulation.hpp"

namespace vus {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string fmt3(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

std::string fmt_p(double p) {
  if (p < 0.001) return "<0.001";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", p);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Link parse_link(const std::string& s) {
  if (s == "logit") return Link{LinkKind::Logit};
  if (s == "probit") return Link{LinkKind::Probit};
  throw CLI::ValidationError("--link must be logit or probit");
}

std::string wald_table(const std::vector<WaldTest>& tests) {
  std::string out = "  Coefficient        Est.       SE   p-value\n";
  for (const auto& t : tests) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-14s %8s %8s %9s\n", t.name.c_str(),
                  fmt3(t.estimate).c_str(), fmt3(t.se).c_str(),
                  fmt_p(t.p_value).c_str());
    out += buf;
  }
  return out;
}

struct EstimateConfig {
  std::string input;
  std::string test_col = "test";
  std::string covariates;
  std::string verified_col = "verified";
  std::string disease_col = "disease";
  std::string iv = "";
  std::string link = "logit";
  int bootstrap = 0;
  std::uint64_t seed = 1;
  std::string out = "vus_estimate";
  bool negate_test = false;
  double alpha = 0.05;
};

int cmd_estimate(const EstimateConfig& cfg) {
  const CsvTable table = read_csv(cfg.input);
  ColumnMap columns;
  columns.test = cfg.test_col;
  columns.covariates = split_list(cfg.covariates);
  columns.verified = cfg.verified_col;
  columns.disease = cfg.disease_col;
  const Link link = parse_link(cfg.link);

  std::vector<std::string> iv_names;
  bool auto_iv = cfg.iv == "auto";
  if (!auto_iv) iv_names = split_list(cfg.iv);

  Dataset data = dataset_from_csv(table, columns, auto_iv ? std::vector<std::string>{} : iv_names,
                                  cfg.negate_test);

  std::string iv_note;
  if (auto_iv) {
    IvSelectOptions iv_opt;
    iv_opt.link = link;
    iv_opt.alpha = cfg.alpha;
    const IvSelectionReport sel = iv_select(data, iv_opt);
    std::vector<int> a1_cols;
    for (const auto& name : sel.a1)
      for (int c = 0; c < data.n_covariates(); ++c)
        if (data.covariate_names[c] == name) a1_cols.push_back(c);
    data.a1_cols = a1_cols;
    iv_note = "Instrumental variables selected automatically: ";
    iv_note += sel.a2.empty() ? std::string("none") : std::string();
    for (std::size_t j = 0; j < sel.a2.size(); ++j)
      iv_note += (j ? ", " : "") + sel.a2[j];
    iv_note += "\n";
  }

  AnalysisOptions opt;
  opt.link = link;
  opt.bootstrap_B = cfg.bootstrap;
  opt.seed = cfg.seed;
  const AnalysisResult res = analyze(data, opt);
  if (!res.ok) {
    std::cerr << "error: " << res.failure << "\n";
    return kExitNumeric;
  }

  // Text report
  std::string text;
  text += "Verification bias-corrected VUS estimation\n";
  text += "Input: " + cfg.input + ", n = " + std::to_string(data.n()) +
          " (" + std::to_string(data.n_verified()) + " verified)\n";
  text += "Verification link: " + std::string(link.name()) + "\n";
  if (!iv_note.empty()) text += iv_note;
  std::string a1_list, a2_list;
  for (int c : data.a1_cols)
    a1_list += (a1_list.empty() ? "" : ", ") + data.covariate_names[c];
  for (int c : data.a2_cols())
    a2_list += (a2_list.empty() ? "" : ", ") + data.covariate_names[c];
  text += "Verification covariates A1: " + (a1_list.empty() ? "none" : a1_list) + "\n";
  text += "Instrumental covariates A2: " + (a2_list.empty() ? "none" : a2_list) + "\n";
  text += "\nConditional disease model (reference class 3):\n";
  text += wald_table(res.disease_tests);
  text += "\nVerification model:\n";
  text += wald_table(res.verification_tests);
  text += "\nVUS estimates:\n";
  text += "  Method   Est.      SE        95% CI";
  text += cfg.bootstrap > 0 ? "              BSD      95% CI (boot)\n" : "\n";
  for (const auto& r : res.vus) {
    char buf[240];
    if (r.bsd) {
      std::snprintf(buf, sizeof(buf),
                    "  %-6s %6s  %7s  (%s, %s)  %7s  (%s, %s)\n",
                    method_name(r.method), fmt3(r.estimate).c_str(),
                    fmt3(r.asd).c_str(), fmt3(r.ci95.first).c_str(),
                    fmt3(r.ci95.second).c_str(), fmt3(*r.bsd).c_str(),
                    fmt3(r.ci95_boot->first).c_str(),
                    fmt3(r.ci95_boot->second).c_str());
    } else {
      std::snprintf(buf, sizeof(buf), "  %-6s %6s  %7s  (%s, %s)\n",
                    method_name(r.method), fmt3(r.estimate).c_str(),
                    fmt3(r.asd).c_str(), fmt3(r.ci95.first).c_str(),
                    fmt3(r.ci95.second).c_str());
    }
    text += buf;
  }
  text += "\nDiagnostics:\n";
  double min_pi = 1.0;
  int out_of_range = 0;
  for (const auto& r : res.vus) {
    min_pi = std::min(min_pi, r.min_pi_verified);
    out_of_range += r.out_of_range;
  }
  text += "  min fitted verification probability (verified rows): " + fmt3(min_pi) + "\n";
  text += "  estimates outside [0,1]: " + std::to_string(out_of_range) + "\n";
  text += "  mean-score norm at solution: " + fmt_full(res.gamma.norm_at_solution) + "\n";
  text += "  solver multistart index: " + std::to_string(res.gamma.multistart_index) + "\n";
  if (cfg.bootstrap > 0)
    text += "  failed bootstrap resamples: " + std::to_string(res.bootstrap_failed) +
            " of " + std::to_string(cfg.bootstrap) + "\n";

  // CSV report
  CsvTable out;
  out.header = {"method", "estimate", "asd", "ci_low", "ci_high",
                "bsd", "ci_boot_low", "ci_boot_high", "out_of_range",
                "min_pi_verified"};
  for (const auto& r : res.vus) {
    std::vector<std::string> row{
        method_name(r.method), fmt_full(r.estimate), fmt_full(r.asd),
        fmt_full(r.ci95.first), fmt_full(r.ci95.second),
        r.bsd ? fmt_full(*r.bsd) : "",
        r.ci95_boot ? fmt_full(r.ci95_boot->first) : "",
        r.ci95_boot ? fmt_full(r.ci95_boot->second) : "",
        r.out_of_range ? "1" : "0", fmt_full(r.min_pi_verified)};
    out.rows.push_back(row);
  }
  CsvTable coef;
  coef.header = {"model", "coefficient", "estimate", "se", "z", "p"};
  for (const auto& t : res.disease_tests)
    coef.rows.push_back({"disease", t.name, fmt_full(t.estimate), fmt_full(t.se),
                         fmt_full(t.z), fmt_full(t.p_value)});
  for (const auto& t : res.verification_tests)
    coef.rows.push_back({"verification", t.name, fmt_full(t.estimate),
                         fmt_full(t.se), fmt_full(t.z), fmt_full(t.p_value)});

  write_text(cfg.out + ".txt", text);
  write_csv(cfg.out + "_vus.csv", out);
  write_csv(cfg.out + "_coefficients.csv", coef);
  std::cout << text;
  return kExitOk;
}

struct SimulateConfig {
  std::string scenario = "II";
  int n = 250;
  int reps = 1000;
  int bootstrap = 0;
  std::uint64_t seed = 1;
  std::string out = "vus_simulate";
  std::string export_data = "";
};

int cmd_simulate(const SimulateConfig& cfg) {
  const auto id = scenario_from_string(cfg.scenario);
  if (!id) {
    std::cerr << "error: unknown scenario '" << cfg.scenario
              << "' (expected I, II, III, IIIb, IV, V or VI)\n";
    return kExitUsage;
  }
  const ScenarioSpec spec = ScenarioSpec::by_id(*id, cfg.n);
  if (!cfg.export_data.empty()) {
    const Dataset data = generate(spec, derive_seed(cfg.seed, 0));
    write_csv(cfg.export_data, dataset_to_csv(data));
  }
  const McReport report = run_mc(spec, cfg.reps, cfg.bootstrap, cfg.seed);
  const std::string text = mc_report_text(report);

  CsvTable csv;
  csv.header = {"scenario", "n",   "reps",   "failed", "method", "mean",
                "bias_pct", "mcsd", "asd",    "bsd",    "cp_asy", "cp_bst"};
  for (const auto& m : report.methods) {
    csv.rows.push_back(
        {scenario_name(report.scenario), std::to_string(report.n),
         std::to_string(report.requested_reps), std::to_string(report.failed_reps),
         method_name(m.method), fmt_full(m.mean_estimate),
         fmt_full(m.relative_bias_pct), fmt_full(m.mcsd), fmt_full(m.mean_asd),
         m.mean_bsd ? fmt_full(*m.mean_bsd) : "", fmt_full(m.coverage_asy_pct),
         m.coverage_bst_pct ? fmt_full(*m.coverage_bst_pct) : ""});
  }
  CsvTable coef;
  coef.header = {"coefficient", "mc_mean"};
  for (std::size_t j = 0; j < report.gamma_names.size(); ++j)
    coef.rows.push_back({report.gamma_names[j], fmt_full(report.gamma_means[j])});

  write_text(cfg.out + ".txt", text);
  write_csv(cfg.out + ".csv", csv);
  write_csv(cfg.out + "_coefficients.csv", coef);
  std::cout << text;
  return kExitOk;
}

struct IvSelectConfig {
  std::string input;
  std::string test_col = "test";
  std::string covariates;
  std::string verified_col = "verified";
  std::string disease_col = "disease";
  std::string link = "logit";
  double alpha = 0.05;
  std::string out = "vus_iv_select";
  bool negate_test = false;
};

int cmd_iv_select(const IvSelectConfig& cfg) {
  const CsvTable table = read_csv(cfg.input);
  ColumnMap columns;
  columns.test = cfg.test_col;
  columns.covariates = split_list(cfg.covariates);
  columns.verified = cfg.verified_col;
  columns.disease = cfg.disease_col;
  const Dataset data = dataset_from_csv(table, columns, {}, cfg.negate_test);

  IvSelectOptions opt;
  opt.link = parse_link(cfg.link);
  opt.alpha = cfg.alpha;
  const IvSelectionReport report = iv_select(data, opt);

  std::string text = "Instrumental-variable selection (alpha = " +
                     fmt3(opt.alpha) + ", link = " + opt.link.name() + ")\n";
  text += "\nStep 1: backward stepwise on the conditional disease model\n";
  for (const auto& e : report.step1)
    text += "  " + e.name + ": " + (e.retained ? "retained (p = " + fmt_p(e.p_value) + ")"
                                               : "dropped") + "\n";
  if (report.disease_model_empty)
    text += "  WARNING: all covariates dropped; using intercept + T only\n";
  text += "\nStep 2: per-covariate mean-score Wald tests in the verification model\n";
  for (const auto& e : report.step2)
    text += "  " + e.name + ": p = " + fmt_p(e.p_value) +
            (e.converged ? "" : " (solver did not converge)") +
            (e.significant ? "  -> A1" : "  -> A2") + "\n";
  std::string a1_list, a2_list;
  for (const auto& s : report.a1) a1_list += (a1_list.empty() ? "" : ", ") + s;
  for (const auto& s : report.a2) a2_list += (a2_list.empty() ? "" : ", ") + s;
  text += "\nFinal partition:\n  A1 (verification model): " +
          (a1_list.empty() ? "none" : a1_list) + "\n  A2 (instrumental): " +
          (a2_list.empty() ? "none" : a2_list) + "\n";
  text += "\nFinal verification model" +
          std::string(report.final_converged ? "" : " (NOT CONVERGED)") + ":\n";
  text += wald_table(report.final_tests);

  CsvTable csv;
  csv.header = {"step", "covariate", "p_value", "outcome"};
  for (const auto& e : report.step1)
    csv.rows.push_back({"1", e.name, fmt_full(e.p_value),
                        e.retained ? "retained" : "dropped"});
  for (const auto& e : report.step2)
    csv.rows.push_back({"2", e.name, fmt_full(e.p_value),
                        e.significant ? "A1" : "A2"});
  write_text(cfg.out + ".txt", text);
  write_csv(cfg.out + ".csv", csv);
  std::cout << text;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Three-class VUS estimation under nonignorable verification bias"};
  app.require_subcommand(1);

  EstimateConfig est;
  CLI::App* estimate = app.add_subcommand(
      "estimate", "Estimate the VUS from a CSV dataset");
  estimate->add_option("--input", est.input, "input CSV file")->required();
  estimate->add_option("--test", est.test_col, "test value column");
  estimate->add_option("--covariates", est.covariates,
                       "comma-separated covariate columns")->required();
  estimate->add_option("--verified", est.verified_col, "verification flag column");
  estimate->add_option("--disease", est.disease_col, "disease class column");
  estimate->add_option("--iv", est.iv,
                       "comma-separated instrumental covariates, or 'auto'");
  estimate->add_option("--link", est.link, "verification link: logit|probit");
  estimate->add_option("--bootstrap", est.bootstrap, "bootstrap resamples (0 = off)");
  estimate->add_option("--seed", est.seed, "random seed");
  estimate->add_option("--out", est.out, "output file prefix");
  estimate->add_flag("--negate-test", est.negate_test,
                     "negate test values before analysis");
  estimate->add_option("--alpha", est.alpha, "significance level for iv=auto");

  SimulateConfig sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte Carlo reproduction of the simulation scenarios");
  simulate->add_option("--scenario", sim.scenario, "I|II|III|IIIb|IV|V|VI")->required();
  simulate->add_option("--n", sim.n, "sample size per replicate")->required();
  simulate->add_option("--reps", sim.reps, "number of replicates");
  simulate->add_option("--bootstrap", sim.bootstrap,
                       "bootstrap resamples per replicate (0 = off)");
  simulate->add_option("--seed", sim.seed, "random seed");
  simulate->add_option("--out", sim.out, "output file prefix");
  simulate->add_option("--export-data", sim.export_data,
                       "also write one generated dataset to this CSV path");

  IvSelectConfig ivc;
  CLI::App* ivsel = app.add_subcommand(
      "iv-select", "Three-step instrumental-variable selection");
  ivsel->add_option("--input", ivc.input, "input CSV file")->required();
  ivsel->add_option("--test", ivc.test_col, "test value column");
  ivsel->add_option("--covariates", ivc.covariates,
                    "comma-separated candidate covariates")->required();
  ivsel->add_option("--verified", ivc.verified_col, "verification flag column");
  ivsel->add_option("--disease", ivc.disease_col, "disease class column");
  ivsel->add_option("--link", ivc.link, "verification link: logit|probit");
  ivsel->add_option("--alpha", ivc.alpha, "significance level");
  ivsel->add_option("--out", ivc.out, "output file prefix");
  ivsel->add_flag("--negate-test", ivc.negate_test, "negate test values");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(est);
    if (simulate->parsed()) return cmd_simulate(sim);
    if (ivsel->parsed()) return cmd_iv_select(ivc);
  } catch (const SchemaError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const MissingClassAmongVerified& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace vus
