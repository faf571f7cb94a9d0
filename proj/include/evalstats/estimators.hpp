#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evalstats/ingestion.hpp"

namespace evalstats {

enum class SeMethod { clt, bernoulli, clustered };

std::string_view to_string(SeMethod method);

/// A question's score averaged over its k resamples.
struct QuestionAggregate {
  std::string question_id;
  std::string cluster_id;
  std::size_t k = 1;
  double mean_score = 0.0;
};

struct PointEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n_questions = 0;
  std::size_t n_clusters = 0;
  SeMethod method = SeMethod::clt;
  bool clamped = false;  // a negative variance expression was clamped to zero
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;

  double half_width() const noexcept { return 0.5 * (upper - lower); }
  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

/// Split of score variance into the variance of the conditional means and
/// the mean conditional variance.
struct VarianceComponents {
  double var_conditional_mean = 0.0;
  double mean_conditional_variance = 0.0;
  double k = 1.0;  // harmonic mean of the resample counts; K when uniform
  bool clustered = false;
  bool clamped = false;
};

// Plain numeric helpers.
double mean_of(std::span<const double> xs);
/// (n-1)-divisor sample variance; requires at least two values.
double sample_variance(std::span<const double> xs);
/// Maps string ids to dense labels 0..G-1 in order of first appearance.
std::vector<std::size_t> dense_labels(std::span<const std::string> ids);

/// One aggregate per question in first-appearance order.
std::vector<QuestionAggregate> aggregate_resamples(const EvalDataset& dataset);
bool has_uniform_k(std::span<const QuestionAggregate> aggregates);
bool all_binary(std::span<const QuestionAggregate> aggregates);
std::vector<double> mean_scores(std::span<const QuestionAggregate> aggregates);

/// Mean and sqrt(sample variance / n). Requires n >= 2.
PointEstimate se_clt(std::span<const double> scores);
PointEstimate se_clt(std::span<const QuestionAggregate> aggregates);

/// sqrt(mean (1 - mean) / n).
double se_bernoulli(double mean, std::size_t n);
/// Bernoulli SE over aggregates; refuses (PreconditionError) unless every
/// aggregated score is exactly 0 or 1.
PointEstimate bernoulli_estimate(std::span<const QuestionAggregate> aggregates);

/// Cluster-adjusted SE: the CLT variance plus the within-cluster cross
/// products (j != i) of centered scores, divided by n^2. `cluster_of` holds
/// dense labels as produced by dense_labels.
PointEstimate se_clustered(std::span<const double> scores, std::span<const std::size_t> cluster_of);
PointEstimate se_clustered(std::span<const QuestionAggregate> aggregates);

/// mean +/- z * se where z is the upper (1 - level)/2 normal quantile.
Interval confidence_interval(double center, double se, double level = 0.95);
Interval confidence_interval(const PointEstimate& estimate, double level = 0.95);

/// Method-of-moments split from resampled data. The conditional variance
/// pools within-question deviations with a (k_i - 1) divisor; the variance
/// of conditional means subtracts its share mean(1/k_i) from the sample
/// variance of question means and is clamped at zero. Needs at least one
/// question with k >= 2 and at least two questions.
VarianceComponents estimate_variance_components(const EvalDataset& dataset);
/// Same estimator on raw resamples, one vector per question.
VarianceComponents estimate_variance_components(std::span<const std::vector<double>> resamples);

}  // namespace evalstats
