#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "evalstats/estimators.hpp"
#include "evalstats/ingestion.hpp"

namespace evalstats {

enum class ComparisonMethod { unpaired, paired, paired_clustered };

std::string_view to_string(ComparisonMethod method);

/// Inference on the difference A - B.
struct ComparisonResult {
  double mean_diff = 0.0;
  double se = 0.0;
  double z = 0.0;  // +/-inf when se == 0 and mean_diff != 0, see infinite_z
  Interval ci;
  std::optional<double> correlation;  // absent for unpaired or zero-variance columns
  ComparisonMethod method = ComparisonMethod::paired;
  std::size_t n_questions = 0;              // model A's count when unpaired
  std::optional<std::size_t> n_questions_b;  // unpaired only
  std::optional<std::size_t> n_clusters;
  bool significant = false;  // two-sided, at ci.level: the CI excludes zero
  bool infinite_z = false;
};

ComparisonResult unpaired_diff(const PointEstimate& a, const PointEstimate& b,
                               double level = 0.95);

/// Paired-differences inference on per-question scores.
ComparisonResult paired_diff(std::span<const double> scores_a, std::span<const double> scores_b,
                             double level = 0.95);
ComparisonResult paired_diff(const PairedDataset& pd, double level = 0.95);

/// Cluster-adjusted paired SE: (1/n) sqrt(sum over clusters of the squared
/// within-cluster sum of centered differences). No Bessel correction, so
/// with singleton clusters it equals the paired SE times sqrt((n-1)/n).
ComparisonResult paired_clustered_diff(std::span<const double> scores_a,
                                       std::span<const double> scores_b,
                                       std::span<const std::size_t> cluster_of,
                                       double level = 0.95);
ComparisonResult paired_clustered_diff(const PairedDataset& pd, double level = 0.95);

/// Pearson product-moment correlation; empty when either column has zero
/// variance or fewer than two values.
std::optional<double> pearson_correlation(std::span<const double> xs, std::span<const double> ys);

/// sqrt(se_a^2 + se_b^2 - 2 se_a se_b corr).
double paired_se_from_correlation(double se_a, double se_b, double correlation);

}  // namespace evalstats
