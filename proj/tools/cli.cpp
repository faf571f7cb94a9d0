#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "evalstats/comparison.hpp"
#include "evalstats/errors.hpp"
#include "evalstats/estimators.hpp"
#include "evalstats/ingestion.hpp"
#include "evalstats/power.hpp"
#include "evalstats/report.hpp"
#include "evalstats/simlab.hpp"

namespace evalstats::cli {
namespace {

using nlohmann::json;

struct OutputFlags {
  std::string format = "markdown";
  int digits = 4;
  bool percent = false;

  RenderOptions options() const { return {output_format_from_string(format), digits, percent}; }
};

void add_output_flags(CLI::App* cmd, OutputFlags& flags) {
  cmd->add_option("--format", flags.format, "Output format")
      ->check(CLI::IsMember({"markdown", "json", "plain"}))
      ->capture_default_str();
  cmd->add_option("--digits", flags.digits, "Significant digits in rendered numbers")
      ->check(CLI::Range(1, 17))
      ->capture_default_str();
  cmd->add_flag("--percent", flags.percent, "Render fractions as percentages");
}

void emit_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

std::string default_eval_name(const std::string& path, const std::string& given) {
  return given.empty() ? std::filesystem::path(path).stem().string() : given;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string input, model, eval, method = "clt";
  bool clustered = false;
  double level = 0.95;
  OutputFlags output;
};

int analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  const auto records = read_records(a.input);
  const auto ds = build_dataset(records, a.model, default_eval_name(a.input, a.eval));
  const auto aggregates = aggregate_resamples(ds);

  if (a.clustered && a.method == "bernoulli")
    throw std::invalid_argument("--clustered cannot be combined with --method bernoulli");

  std::vector<std::string> notes;
  PointEstimate estimate;
  std::optional<PointEstimate> reference;
  if (a.clustered) {
    estimate = se_clustered(aggregates);
    reference = se_clt(aggregates);
    if (estimate.n_clusters == estimate.n_questions)
      notes.push_back("every cluster holds a single question; the clustered SE equals the unclustered SE");
    notes.push_back("unclustered (CLT) SE: " + format_number(reference->se, a.output.digits, a.output.percent));
    if (estimate.clamped) notes.push_back("negative clustered variance clamped to zero");
  } else if (a.method == "bernoulli" || (a.method == "auto" && all_binary(aggregates))) {
    estimate = bernoulli_estimate(aggregates);
    reference = se_clt(aggregates);
    notes.push_back("method bernoulli (every question score is 0 or 1); CLT SE: " +
                    format_number(reference->se, a.output.digits, a.output.percent));
  } else {
    estimate = se_clt(aggregates);
    notes.push_back("method clt");
  }

  const auto ci = confidence_interval(estimate, a.level);
  notes.push_back(format_number(a.level * 100.0, 6) + "% CI: (" +
                  format_number(ci.lower, a.output.digits, a.output.percent) + ", " +
                  format_number(ci.upper, a.output.digits, a.output.percent) + ")");

  const std::vector<SingleModelRow> rows{{ds.eval_name, ds.model_id, estimate, ci, reference}};
  auto table = single_model_table(rows, a.clustered, a.output.options());
  table.notes = notes;
  table.warnings = ds.warnings;
  emit_warnings(ds.warnings, err);
  out << render(table, a.output.options().format);
  return kSuccess;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::string input, model_a, model_b, eval;
  bool paired = false, unpaired = false, clustered = false;
  double level = 0.95;
  OutputFlags output;
};

int compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
  const auto records = read_records(a.input);
  const auto eval = default_eval_name(a.input, a.eval);
  const auto ds_a = build_dataset(records, a.model_a, eval);
  const auto ds_b = build_dataset(records, a.model_b, eval);

  ComparisonResult result;
  std::vector<std::string> warnings = ds_a.warnings;
  warnings.insert(warnings.end(), ds_b.warnings.begin(), ds_b.warnings.end());
  if (a.unpaired) {
    const auto agg_a = aggregate_resamples(ds_a);
    const auto agg_b = aggregate_resamples(ds_b);
    const auto est_a = a.clustered ? se_clustered(agg_a) : se_clt(agg_a);
    const auto est_b = a.clustered ? se_clustered(agg_b) : se_clt(agg_b);
    result = unpaired_diff(est_a, est_b, a.level);
  } else {
    const auto pd = join_paired(ds_a, ds_b);
    result = a.clustered ? paired_clustered_diff(pd, a.level) : paired_diff(pd, a.level);
  }
  if (result.infinite_z) warnings.push_back("standard error is zero with a nonzero difference; z is infinite");

  const std::vector<PairwiseRow> rows{{eval, a.model_a, a.model_b, result}};
  auto table = pairwise_table(rows, a.output.options());
  table.notes.push_back("method " + std::string(to_string(result.method)));
  table.warnings = warnings;
  emit_warnings(warnings, err);
  out << render(table, a.output.options().format);
  return kSuccess;
}

// ---------------------------------------------------------------- power

struct PowerArgs {
  double alpha = 0.05, beta = 0.20;
  std::optional<double> delta;
  std::optional<std::size_t> n;
  std::optional<double> omega2, sigma2_a, sigma2_b;
  std::size_t k_a = 1, k_b = 1;
  std::string components_from, model_a, model_b;
  std::optional<std::size_t> subsample;
  std::uint64_t seed = 0;
  OutputFlags output;
};

std::vector<std::pair<std::string, std::string>> component_items(const ClusteredComponents& c, int digits) {
  return {{"omega2_clustered", format_number(c.omega2_clustered, digits)},
          {"omega2_clustered_debiased", format_number(c.omega2_clustered_debiased, digits)},
          {"sigma2_a_clustered", format_number(c.sigma2_a_clustered, digits)},
          {"sigma2_b_clustered", format_number(c.sigma2_b_clustered, digits)},
          {"k_a", std::to_string(c.k_a)},
          {"k_b", std::to_string(c.k_b)},
          {"n_questions", std::to_string(c.n_questions)},
          {"n_clusters", std::to_string(c.n_clusters)}};
}

ClusteredComponents components_from_file(const std::string& path, const std::string& model_a,
                                         const std::string& model_b,
                                         std::optional<std::size_t> subsample, std::uint64_t seed,
                                         std::vector<std::string>& warnings) {
  if (model_a.empty() || model_b.empty())
    throw std::invalid_argument("--model-a and --model-b are required with historical data");
  const auto records = read_records(path);
  const auto eval = std::filesystem::path(path).stem().string();
  const auto ds_a = build_dataset(records, model_a, eval);
  const auto ds_b = build_dataset(records, model_b, eval);
  auto pd = join_paired(ds_a, ds_b);
  if (subsample) pd = subsample_clusters(pd, *subsample, seed);
  warnings.insert(warnings.end(), pd.warnings.begin(), pd.warnings.end());
  return estimate_clustered_components(pd);
}

int power(const PowerArgs& a, std::ostream& out, std::ostream& err) {
  if (a.delta.has_value() == a.n.has_value())
    throw std::invalid_argument("give exactly one of --delta and --n");

  PowerSpec spec;
  spec.alpha = a.alpha;
  spec.beta = a.beta;
  spec.delta = a.delta;
  spec.n = a.n;
  spec.k_a = a.k_a;
  spec.k_b = a.k_b;

  std::vector<std::string> warnings;
  std::optional<ClusteredComponents> components;
  if (!a.components_from.empty()) {
    components = components_from_file(a.components_from, a.model_a, a.model_b, a.subsample, a.seed, warnings);
    spec.omega2 = components->omega2_clustered_debiased;
    spec.sigma2_a = components->sigma2_a_clustered;
    spec.sigma2_b = components->sigma2_b_clustered;
  } else if (!a.omega2) {
    throw std::invalid_argument("--omega2 is required unless --components-from is given");
  }
  if (a.omega2) spec.omega2 = *a.omega2;
  if (a.sigma2_a) spec.sigma2_a = *a.sigma2_a;
  if (a.sigma2_b) spec.sigma2_b = *a.sigma2_b;

  const auto result = spec.delta ? sample_size(spec) : mde(spec);
  warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
  emit_warnings(warnings, err);

  const auto format = a.output.options().format;
  if (format == OutputFormat::json) {
    json doc = {{"spec", to_json(spec)}, {"result", to_json(result)}, {"warnings", warnings}};
    doc["components"] = components ? to_json(*components) : json(nullptr);
    out << doc.dump(2) << '\n';
    return kSuccess;
  }
  const int d = a.output.digits;
  std::vector<std::pair<std::string, std::string>> items;
  if (result.required_n) {
    items.emplace_back("required n", std::to_string(*result.required_n));
    items.emplace_back("n before rounding", format_number(*result.n_real, std::max(d, 7)));
  } else {
    items.emplace_back("minimum detectable effect", format_number(*result.mde, d, a.output.percent));
  }
  items.emplace_back("z_{alpha/2}", format_number(result.z_alpha_half, std::max(d, 7)));
  items.emplace_back("z_beta", format_number(result.z_beta, std::max(d, 7)));
  items.emplace_back("effective variance", format_number(result.effective_variance, d));
  items.emplace_back("omega2", format_number(spec.omega2, d));
  items.emplace_back("sigma2_a / k_a", format_number(spec.sigma2_a, d) + " / " + std::to_string(spec.k_a));
  items.emplace_back("sigma2_b / k_b", format_number(spec.sigma2_b, d) + " / " + std::to_string(spec.k_b));
  items.emplace_back("alpha, beta", format_number(spec.alpha, d) + ", " + format_number(spec.beta, d));
  if (components) {
    for (auto& kv : component_items(*components, d)) items.push_back(std::move(kv));
  }
  out << render_key_values(items, format);
  return kSuccess;
}

// ---------------------------------------------------------------- estimate-components

struct ComponentsArgs {
  std::string input, model_a, model_b;
  std::optional<std::size_t> subsample;
  std::uint64_t seed = 0;
  OutputFlags output;
};

int estimate_components(const ComponentsArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const auto c = components_from_file(a.input, a.model_a, a.model_b, a.subsample, a.seed, warnings);
  emit_warnings(warnings, err);
  const auto format = a.output.options().format;
  if (format == OutputFormat::json) {
    out << json{{"components", to_json(c)}, {"warnings", warnings}}.dump(2) << '\n';
  } else {
    out << render_key_values(component_items(c, a.output.digits), format);
  }
  return kSuccess;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario, experiment = "auto", estimator, support = "0,1";
  std::uint64_t seed = 0;
  std::size_t reps = 1000;
  std::size_t n = 1000, k = 1, clusters = 100, cluster_size = 10;
  std::vector<std::size_t> ks;
  double rho = 0.5, delta = 0.0, icc = 0.5, level = 0.95, alpha = 0.05, beta = 0.20;
  bool paired = false;
  std::optional<std::size_t> power_n;
  std::string output_path, records_format = "jsonl";
  OutputFlags output{"json"};
};

std::pair<double, double> parse_support(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--support expects LO,HI");
  try {
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw std::invalid_argument("--support expects two numbers, got '" + text + "'");
  }
}

std::string render_sim_report(const SimReport& rep, const OutputFlags& flags) {
  const auto format = flags.options().format;
  if (format == OutputFormat::json) return to_json(rep).dump(2) + "\n";
  ReportTable table;
  table.headers = {"Metric", "Value", "MC SE", "Target"};
  const int d = flags.digits;
  for (const auto& m : rep.metrics) {
    table.rows.push_back({m.name, format_number(m.value, d), format_number(m.mc_se, 2),
                          m.target ? format_number(*m.target, d) : ""});
  }
  table.notes.push_back("experiment " + rep.experiment + " on " + std::string(to_string(rep.scenario.kind)) +
                        ", " + std::to_string(rep.replications) + " replications, seed " +
                        std::to_string(rep.seed));
  table.notes.insert(table.notes.end(), rep.notes.begin(), rep.notes.end());
  return render(table, format);
}

int simulate(const SimulateArgs& a, std::ostream& out, std::ostream&) {
  Scenario s;
  try {
    s.kind = scenario_kind_from_string(a.scenario);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  s.n_questions = a.n;
  s.k = a.k;
  s.rho = a.rho;
  s.delta = a.delta;
  s.n_clusters = a.clusters;
  s.cluster_size = a.cluster_size;
  s.icc = a.icc;
  s.paired = a.paired;
  std::tie(s.support_lo, s.support_hi) = parse_support(a.support);
  s.seed = a.seed;
  validate(s);

  std::string experiment = a.experiment;
  std::replace(experiment.begin(), experiment.end(), '_', '-');
  if (experiment == "auto") {
    switch (s.kind) {
      case ScenarioKind::uniform_bernoulli: experiment = "variance"; break;
      case ScenarioKind::correlated_uniform_pair: experiment = "paired-variance"; break;
      case ScenarioKind::clustered_hierarchical: experiment = "coverage"; break;
      case ScenarioKind::temperature_rounding: experiment = "temperature"; break;
    }
  }

  if (experiment == "generate") {
    const auto records = to_records(generate(s));
    const auto format = a.records_format == "csv" ? RecordFormat::csv : RecordFormat::jsonl;
    const auto text = serialize_records(records, format);
    if (a.output_path.empty()) {
      out << text;
    } else {
      std::ofstream file(a.output_path, std::ios::binary);
      if (!file) throw InputError("cannot write " + a.output_path);
      file << text;
    }
    return kSuccess;
  }

  SimReport rep;
  if (experiment == "variance") {
    std::vector<std::size_t> ks = a.ks.empty() ? std::vector<std::size_t>{s.k} : a.ks;
    rep = run_variance_experiment(s, ks, a.reps, a.seed);
  } else if (experiment == "paired-variance") {
    rep = run_paired_variance_experiment(s, a.reps, a.seed);
  } else if (experiment == "temperature") {
    rep = run_temperature_experiment(s, a.reps, a.seed);
  } else if (experiment == "components") {
    rep = run_components_experiment(s, a.reps, a.seed);
  } else if (experiment == "coverage") {
    CoverageEstimator est;
    if (a.estimator.empty()) {
      const bool paired = s.kind == ScenarioKind::correlated_uniform_pair || s.paired;
      const bool clustered = s.kind == ScenarioKind::clustered_hierarchical;
      est = paired ? (clustered ? CoverageEstimator::paired_clustered : CoverageEstimator::paired)
                   : (clustered ? CoverageEstimator::clustered : CoverageEstimator::clt);
    } else {
      est = coverage_estimator_from_string(a.estimator);
    }
    rep = run_coverage_experiment(s, est, a.level, a.reps, a.seed);
  } else if (experiment == "power") {
    std::size_t n = a.power_n.value_or(0);
    if (!a.power_n) {
      if (s.kind == ScenarioKind::correlated_uniform_pair && s.delta > 0.0) {
        PowerSpec spec;
        spec.alpha = a.alpha;
        spec.beta = a.beta;
        spec.delta = s.delta;
        spec.omega2 = ground_truth(s).at("omega2");
        n = *sample_size(spec).required_n;
      } else {
        n = s.kind == ScenarioKind::clustered_hierarchical ? s.n_clusters * s.cluster_size : s.n_questions;
      }
    }
    rep = run_power_experiment(s, n, a.alpha, a.reps, a.seed);
  } else {
    throw std::invalid_argument("unknown experiment '" + a.experiment + "'");
  }
  out << render_sim_report(rep, a.output);
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Standard errors, model comparisons and power analysis for eval scores", "evalstats"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file whose [simulate] section mirrors the simulate flags");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Mean score with standard error for one model");
  analyze_cmd->add_option("--input", analyze_args.input, "JSONL or CSV score file")->required();
  analyze_cmd->add_option("--model", analyze_args.model, "Model id")->required();
  analyze_cmd->add_option("--eval", analyze_args.eval, "Eval name (default: input file stem)");
  analyze_cmd->add_flag("--clustered", analyze_args.clustered, "Cluster-adjusted standard error");
  analyze_cmd->add_option("--level", analyze_args.level, "Confidence level")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  analyze_cmd->add_option("--method", analyze_args.method, "Standard error method")
      ->check(CLI::IsMember({"clt", "bernoulli", "auto"}))
      ->capture_default_str();
  add_output_flags(analyze_cmd, analyze_args.output);

  CompareArgs compare_args;
  auto* compare_cmd = app.add_subcommand("compare", "Difference between two models on one eval");
  compare_cmd->add_option("--input", compare_args.input, "JSONL or CSV score file")->required();
  compare_cmd->add_option("--model-a", compare_args.model_a, "Model")->required();
  compare_cmd->add_option("--model-b", compare_args.model_b, "Baseline")->required();
  compare_cmd->add_option("--eval", compare_args.eval, "Eval name (default: input file stem)");
  auto* paired_flag = compare_cmd->add_flag("--paired", compare_args.paired, "Paired analysis (default)");
  auto* unpaired_flag = compare_cmd->add_flag("--unpaired", compare_args.unpaired, "Unpaired analysis");
  paired_flag->excludes(unpaired_flag);
  compare_cmd->add_flag("--clustered", compare_args.clustered, "Cluster-adjusted standard errors");
  compare_cmd->add_option("--level", compare_args.level, "Confidence level")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  add_output_flags(compare_cmd, compare_args.output);

  PowerArgs power_args;
  auto* power_cmd = app.add_subcommand("power", "Required sample size or minimum detectable effect");
  power_cmd->add_option("--alpha", power_args.alpha, "Type I error rate")->capture_default_str();
  power_cmd->add_option("--beta", power_args.beta, "Type II error rate")->capture_default_str();
  power_cmd->add_option("--delta", power_args.delta, "Minimum detectable effect (solve for n)");
  power_cmd->add_option("--n", power_args.n, "Number of questions (solve for the MDE)");
  power_cmd->add_option("--omega2", power_args.omega2, "Variance of paired conditional-mean differences");
  power_cmd->add_option("--sigma2-a", power_args.sigma2_a, "Mean conditional variance of model A");
  power_cmd->add_option("--sigma2-b", power_args.sigma2_b, "Mean conditional variance of model B");
  power_cmd->add_option("--k-a", power_args.k_a, "Resamples per question for model A")->capture_default_str();
  power_cmd->add_option("--k-b", power_args.k_b, "Resamples per question for model B")->capture_default_str();
  power_cmd->add_option("--components-from", power_args.components_from,
                        "Historical paired data (K >= 2) to estimate cluster-adjusted components");
  power_cmd->add_option("--model-a", power_args.model_a, "Model A id in the historical data");
  power_cmd->add_option("--model-b", power_args.model_b, "Model B id in the historical data");
  power_cmd->add_option("--subsample-clusters", power_args.subsample, "Keep this many whole clusters");
  power_cmd->add_option("--seed", power_args.seed, "Seed for cluster subsampling");
  add_output_flags(power_cmd, power_args.output);

  ComponentsArgs components_args;
  auto* components_cmd = app.add_subcommand(
      "estimate-components", "Cluster-adjusted omega^2 and sigma^2 from historical paired data");
  components_cmd->add_option("--input", components_args.input, "JSONL or CSV score file")->required();
  components_cmd->add_option("--model-a", components_args.model_a, "Model A")->required();
  components_cmd->add_option("--model-b", components_args.model_b, "Model B")->required();
  components_cmd->add_option("--subsample-clusters", components_args.subsample, "Keep this many whole clusters");
  components_cmd->add_option("--seed", components_args.seed, "Seed for cluster subsampling");
  add_output_flags(components_cmd, components_args.output);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Seeded Monte Carlo experiments");
  sim_cmd->fallthrough();
  sim_cmd->add_option("--scenario", sim.scenario,
                      "uniform-bernoulli | correlated-uniform-pair | clustered-hierarchical | "
                      "temperature-rounding")
      ->required();
  sim_cmd->add_option("--experiment", sim.experiment,
                      "auto | variance | paired-variance | temperature | coverage | power | "
                      "components | generate")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--reps", sim.reps, "Replications")->capture_default_str();
  sim_cmd->add_option("--n", sim.n, "Questions per dataset")->capture_default_str();
  sim_cmd->add_option("--k", sim.k, "Resamples per question")->capture_default_str();
  sim_cmd->add_option("--ks", sim.ks, "Resample counts compared by the variance experiment")->delimiter(',');
  sim_cmd->add_option("--rho", sim.rho, "Correlation of conditional means")->capture_default_str();
  sim_cmd->add_option("--delta", sim.delta, "True difference A - B")->capture_default_str();
  sim_cmd->add_option("--clusters", sim.clusters, "Number of clusters")->capture_default_str();
  sim_cmd->add_option("--cluster-size", sim.cluster_size, "Questions per cluster")->capture_default_str();
  sim_cmd->add_option("--icc", sim.icc, "Intra-cluster correlation of conditional means")->capture_default_str();
  sim_cmd->add_flag("--paired", sim.paired, "Clustered scenario with two models");
  sim_cmd->add_option("--support", sim.support, "Temperature scenario support LO,HI")->capture_default_str();
  sim_cmd->add_option("--estimator", sim.estimator, "clt | clustered | paired | paired-clustered");
  sim_cmd->add_option("--level", sim.level, "Confidence level")->capture_default_str();
  sim_cmd->add_option("--alpha", sim.alpha, "Significance level")->capture_default_str();
  sim_cmd->add_option("--beta", sim.beta, "Type II error rate")->capture_default_str();
  sim_cmd->add_option("--power-n", sim.power_n, "Questions per dataset in the power experiment");
  sim_cmd->add_option("--output", sim.output_path, "File for generated records");
  sim_cmd->add_option("--records-format", sim.records_format, "jsonl | csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  add_output_flags(sim_cmd, sim.output);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == static_cast<int>(CLI::ExitCodes::Success) ? kSuccess : kUsageError;
  }

  try {
    if (*analyze_cmd) return analyze(analyze_args, out, err);
    if (*compare_cmd) return compare(compare_args, out, err);
    if (*power_cmd) return power(power_args, out, err);
    if (*components_cmd) return estimate_components(components_args, out, err);
    if (*sim_cmd) return simulate(sim, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kPreconditionError;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kUsageError;
}

}  // namespace evalstats::cli
