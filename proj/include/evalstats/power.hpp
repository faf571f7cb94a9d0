#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evalstats/ingestion.hpp"
#include "evalstats/normal.hpp"

namespace evalstats {

/// Inputs to the sample-size / MDE relation. Exactly one of `delta` and `n`
/// is set; it names the quantity held fixed, the other is solved for.
struct PowerSpec {
  double alpha = 0.05;
  double beta = 0.20;
  std::optional<double> delta;
  std::optional<std::size_t> n;
  double omega2 = 0.0;  // variance of paired conditional-mean differences
  double sigma2_a = 0.0;
  double sigma2_b = 0.0;
  std::size_t k_a = 1;
  std::size_t k_b = 1;
};

struct PowerResult {
  std::optional<std::size_t> required_n;
  std::optional<double> n_real;  // before the ceiling
  std::optional<double> mde;
  double z_alpha_half = 0.0;
  double z_beta = 0.0;
  double effective_variance = 0.0;  // omega2 + sigma2_a/k_a + sigma2_b/k_b
  std::vector<std::string> warnings;
};

double effective_variance(const PowerSpec& spec);

/// n = (z_{alpha/2} + z_beta)^2 * V / delta^2, rounded up.
PowerResult sample_size(const PowerSpec& spec);

/// delta = (z_{alpha/2} + z_beta) * sqrt(V / n).
PowerResult mde(const PowerSpec& spec);

/// Normal-approximation probability that a two-sided level-alpha z test
/// rejects when the true difference is `delta` and the estimator SE is `se`.
double predicted_power(double delta, double se, double alpha);

/// Cluster-adjusted variance components estimated from historical paired
/// data with K >= 2 resamples per question.
struct ClusteredComponents {
  double omega2_clustered = 0.0;
  double sigma2_a_clustered = 0.0;
  double sigma2_b_clustered = 0.0;
  /// omega2_clustered minus the resampling noise it carries,
  /// sigma2_a/k_a + sigma2_b/k_b, clamped at zero.
  double omega2_clustered_debiased = 0.0;
  double var_clustered_a = 0.0;
  double var_clustered_b = 0.0;
  double cov_clustered = 0.0;
  std::size_t k_a = 0;
  std::size_t k_b = 0;
  std::size_t n_questions = 0;
  std::size_t n_clusters = 0;
  bool omega2_clamped = false;
  bool sigma2_a_clamped = false;
  bool sigma2_b_clamped = false;
};

/// Plug-in estimates from question means x_hat and centered resamples.
/// Every question must carry the same K >= 2 per model (K may differ between
/// models); resample k of each question is matched by sample-index rank.
ClusteredComponents estimate_clustered_components(const PairedDataset& pd);

/// Draws `n_clusters` whole clusters uniformly without replacement. Row order
/// of the retained questions is preserved.
PairedDataset subsample_clusters(const PairedDataset& pd, std::size_t n_clusters, std::uint64_t seed);
EvalDataset subsample_clusters(const EvalDataset& dataset, std::size_t n_clusters, std::uint64_t seed);

}  // namespace evalstats
