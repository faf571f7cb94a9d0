#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "evalstats/ingestion.hpp"

namespace evalstats {

enum class ScenarioKind {
  uniform_bernoulli,        // x ~ U[0,1], K binary answers per question
  correlated_uniform_pair,  // two models, U[0,1] conditional means with Pearson corr rho, no noise
  clustered_hierarchical,   // x = w u_cluster + (1 - w) v_question, binary answers
  temperature_rounding,     // x ~ U[lo,hi] at T=1 versus 1{x > 0.5} at T=0
};

std::string_view to_string(ScenarioKind kind);
/// Accepts both snake_case and kebab-case names. Throws std::invalid_argument.
ScenarioKind scenario_kind_from_string(std::string_view name);

struct Scenario {
  ScenarioKind kind = ScenarioKind::uniform_bernoulli;
  std::size_t n_questions = 1000;  // ignored by clustered_hierarchical
  std::size_t k = 1;               // resamples per question
  double rho = 0.5;                // correlated_uniform_pair
  double delta = 0.0;              // correlated_uniform_pair: true A - B shift added to A
  std::size_t n_clusters = 100;    // clustered_hierarchical
  std::size_t cluster_size = 10;   // clustered_hierarchical
  double icc = 0.5;                // clustered_hierarchical: intra-cluster corr of conditional means
  bool paired = false;             // clustered_hierarchical: emit two independent models
  double support_lo = 0.0;         // temperature_rounding
  double support_hi = 1.0;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument when parameters are not valid for the kind.
void validate(const Scenario& scenario);

/// Mixing weight w giving conditional-mean intra-cluster correlation `icc`:
/// icc = w^2 / (w^2 + (1 - w)^2).
double cluster_mixing_weight(double icc);

/// Analytically known quantities of the generative model (means, variance
/// components, implied score-level intra-cluster correlation, ...).
std::map<std::string, double> ground_truth(const Scenario& scenario);

/// Draws a dataset. Single-model kinds yield an EvalDataset; paired kinds
/// (correlated_uniform_pair, paired clustered_hierarchical) a PairedDataset
/// with models "A" and "B"; temperature_rounding a PairedDataset with
/// models "T1" (conditional means) and "T0" (rounded indicators).
using GeneratedData = std::variant<EvalDataset, PairedDataset>;
GeneratedData generate(const Scenario& scenario);

/// Flattens generated data back into score records.
std::vector<ScoreRecord> to_records(const GeneratedData& data);

struct SimMetric {
  std::string name;
  double value = 0.0;
  double mc_se = 0.0;
  std::optional<double> target;
};

struct SimReport {
  std::string experiment;
  Scenario scenario;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
  std::vector<SimMetric> metrics;
  std::map<std::string, double> ground_truth;
  std::vector<std::string> notes;

  /// Throws std::out_of_range for an unknown name.
  const SimMetric& metric(std::string_view name) const;
};

enum class CoverageEstimator { clt, clustered, paired, paired_clustered };
std::string_view to_string(CoverageEstimator estimator);
CoverageEstimator coverage_estimator_from_string(std::string_view name);

/// Replicates the scenario, builds a level-`level` CI with the estimator
/// each time and reports how often it covers the true mean (or true
/// difference). Requires replications >= 100.
SimReport run_coverage_experiment(const Scenario& scenario, CoverageEstimator estimator,
                                  double level, std::size_t replications, std::uint64_t seed);

/// Fraction of replications with |z| > z_{alpha/2} on a paired scenario of
/// `n` questions (n clusters' worth for clustered scenarios is rounded up).
SimReport run_power_experiment(const Scenario& scenario, std::size_t n, double alpha,
                               std::size_t replications, std::uint64_t seed);

/// uniform_bernoulli: per replication, the variance of K-resample question
/// means over the variance of single answers on the same questions, for
/// each K in `ks`, plus the variance components estimated at max(ks).
SimReport run_variance_experiment(const Scenario& scenario, std::span<const std::size_t> ks,
                                  std::size_t replications, std::uint64_t seed);

/// correlated_uniform_pair: paired over unpaired variance and the sample
/// correlation of conditional means.
SimReport run_paired_variance_experiment(const Scenario& scenario, std::size_t replications,
                                         std::uint64_t seed);

/// temperature_rounding: means and variances of the T=1 and T=0 scores.
SimReport run_temperature_experiment(const Scenario& scenario, std::size_t replications,
                                     std::uint64_t seed);

/// Paired clustered_hierarchical with k >= 2: cluster-adjusted component
/// estimates against their generative values.
SimReport run_components_experiment(const Scenario& scenario, std::size_t replications,
                                    std::uint64_t seed);

}  // namespace evalstats
