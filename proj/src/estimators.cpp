#include "evalstats/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "evalstats/errors.hpp"
#include "evalstats/normal.hpp"

namespace evalstats {
namespace {

void require_two(std::size_t n, const char* what) {
  if (n < 2) {
    throw PreconditionError(std::string(what) + " needs at least 2 questions, got " +
                            std::to_string(n));
  }
}

// Shared by se_clt and se_clustered so that the clustered SE collapses to the
// CLT SE bit for bit when the cross terms vanish.
double clt_variance_of_mean(std::span<const double> scores, double mean) {
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  const auto n = static_cast<double>(scores.size());
  return ss / (n - 1.0) / n;
}

std::size_t count_labels(std::span<const std::size_t> labels) {
  if (labels.empty()) return 0;
  std::vector<bool> seen(*std::max_element(labels.begin(), labels.end()) + 1, false);
  std::size_t count = 0;
  for (auto l : labels) {
    if (!seen[l]) {
      seen[l] = true;
      ++count;
    }
  }
  return count;
}

}  // namespace

std::string_view to_string(SeMethod method) {
  switch (method) {
    case SeMethod::clt: return "clt";
    case SeMethod::bernoulli: return "bernoulli";
    case SeMethod::clustered: return "clustered";
  }
  return "unknown";
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty sequence");
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  require_two(xs.size(), "sample variance");
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

std::vector<std::size_t> dense_labels(std::span<const std::string> ids) {
  std::unordered_map<std::string_view, std::size_t> index;
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto [it, inserted] = index.emplace(id, index.size());
    out.push_back(it->second);
  }
  return out;
}

std::vector<QuestionAggregate> aggregate_resamples(const EvalDataset& dataset) {
  if (dataset.records.empty()) throw InputError("dataset has no records");
  std::vector<QuestionAggregate> out;
  std::vector<double> sums;
  std::unordered_map<std::string_view, std::size_t> index;
  for (const auto& r : dataset.records) {
    const auto [it, inserted] = index.emplace(r.question_id, out.size());
    if (inserted) {
      out.push_back({r.question_id, r.cluster_id, 0, 0.0});
      sums.push_back(0.0);
    }
    ++out[it->second].k;
    sums[it->second] += r.score;
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].mean_score = sums[i] / static_cast<double>(out[i].k);
  return out;
}

bool has_uniform_k(std::span<const QuestionAggregate> aggregates) {
  return std::all_of(aggregates.begin(), aggregates.end(),
                     [&](const auto& q) { return q.k == aggregates.front().k; });
}

bool all_binary(std::span<const QuestionAggregate> aggregates) {
  return std::all_of(aggregates.begin(), aggregates.end(),
                     [](const auto& q) { return q.mean_score == 0.0 || q.mean_score == 1.0; });
}

std::vector<double> mean_scores(std::span<const QuestionAggregate> aggregates) {
  std::vector<double> out;
  out.reserve(aggregates.size());
  for (const auto& q : aggregates) out.push_back(q.mean_score);
  return out;
}

PointEstimate se_clt(std::span<const double> scores) {
  require_two(scores.size(), "the CLT standard error");
  PointEstimate est;
  est.mean = mean_of(scores);
  est.se = std::sqrt(clt_variance_of_mean(scores, est.mean));
  est.n_questions = scores.size();
  est.n_clusters = scores.size();
  est.method = SeMethod::clt;
  return est;
}

PointEstimate se_clt(std::span<const QuestionAggregate> aggregates) {
  const auto scores = mean_scores(aggregates);
  auto est = se_clt(scores);
  std::vector<std::string> clusters;
  for (const auto& q : aggregates) clusters.push_back(q.cluster_id);
  est.n_clusters = count_labels(dense_labels(clusters));
  return est;
}

double se_bernoulli(double mean, std::size_t n) {
  if (!(mean >= 0.0 && mean <= 1.0))
    throw std::invalid_argument("Bernoulli SE needs a mean in [0,1]");
  if (n < 1) throw std::invalid_argument("Bernoulli SE needs n >= 1");
  return std::sqrt(mean * (1.0 - mean) / static_cast<double>(n));
}

PointEstimate bernoulli_estimate(std::span<const QuestionAggregate> aggregates) {
  if (aggregates.empty()) throw PreconditionError("no questions");
  if (!all_binary(aggregates)) {
    throw PreconditionError(
        "the Bernoulli standard error applies only when every question score is 0 or 1; "
        "these scores are fractional (e.g. F1 or resample means), use the CLT standard error");
  }
  const auto scores = mean_scores(aggregates);
  PointEstimate est;
  est.mean = mean_of(scores);
  est.se = se_bernoulli(est.mean, scores.size());
  est.n_questions = scores.size();
  std::vector<std::string> clusters;
  for (const auto& q : aggregates) clusters.push_back(q.cluster_id);
  est.n_clusters = count_labels(dense_labels(clusters));
  est.method = SeMethod::bernoulli;
  return est;
}

PointEstimate se_clustered(std::span<const double> scores, std::span<const std::size_t> cluster_of) {
  if (scores.size() != cluster_of.size())
    throw std::invalid_argument("scores and cluster labels differ in length");
  require_two(scores.size(), "the clustered standard error");

  PointEstimate est;
  est.mean = mean_of(scores);
  est.n_questions = scores.size();
  est.n_clusters = count_labels(cluster_of);
  est.method = SeMethod::clustered;

  // sum_i sum_{j != i} u_i u_j within a cluster is (sum u)^2 - sum u^2.
  const std::size_t g = *std::max_element(cluster_of.begin(), cluster_of.end()) + 1;
  std::vector<double> sum(g, 0.0), sum_sq(g, 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double u = scores[i] - est.mean;
    sum[cluster_of[i]] += u;
    sum_sq[cluster_of[i]] += u * u;
  }
  double cross = 0.0;
  for (std::size_t c = 0; c < g; ++c) cross += sum[c] * sum[c] - sum_sq[c];

  const auto n = static_cast<double>(scores.size());
  double variance = clt_variance_of_mean(scores, est.mean) + cross / (n * n);
  if (variance < 0.0) {
    variance = 0.0;
    est.clamped = true;
  }
  est.se = std::sqrt(variance);
  return est;
}

PointEstimate se_clustered(std::span<const QuestionAggregate> aggregates) {
  std::vector<std::string> clusters;
  clusters.reserve(aggregates.size());
  for (const auto& q : aggregates) clusters.push_back(q.cluster_id);
  const auto scores = mean_scores(aggregates);
  return se_clustered(scores, dense_labels(clusters));
}

Interval confidence_interval(double center, double se, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("confidence level must lie strictly between 0 and 1");
  if (!(se >= 0.0)) throw std::invalid_argument("standard error must be non-negative");
  const double half = normal_quantile((1.0 - level) / 2.0) * se;
  return {center - half, center + half, level};
}

Interval confidence_interval(const PointEstimate& estimate, double level) {
  return confidence_interval(estimate.mean, estimate.se, level);
}

VarianceComponents estimate_variance_components(std::span<const std::vector<double>> resamples) {
  require_two(resamples.size(), "variance-component estimation");
  std::vector<double> means;
  means.reserve(resamples.size());
  double within_ss = 0.0;
  double dof = 0.0;
  double inverse_k_sum = 0.0;
  for (const auto& q : resamples) {
    if (q.empty()) throw std::invalid_argument("question without resamples");
    const double m = mean_of(q);
    means.push_back(m);
    for (double s : q) within_ss += (s - m) * (s - m);
    dof += static_cast<double>(q.size() - 1);
    inverse_k_sum += 1.0 / static_cast<double>(q.size());
  }
  if (dof == 0.0) {
    throw PreconditionError(
        "every question has a single sample; the conditional variance is not identifiable "
        "without resampling (K >= 2)");
  }
  const double mean_inverse_k = inverse_k_sum / static_cast<double>(resamples.size());

  VarianceComponents vc;
  vc.mean_conditional_variance = within_ss / dof;
  vc.var_conditional_mean = sample_variance(means) - vc.mean_conditional_variance * mean_inverse_k;
  if (vc.var_conditional_mean < 0.0) {
    vc.var_conditional_mean = 0.0;
    vc.clamped = true;
  }
  vc.k = 1.0 / mean_inverse_k;
  vc.clustered = false;
  return vc;
}

VarianceComponents estimate_variance_components(const EvalDataset& dataset) {
  std::vector<std::vector<double>> resamples;
  std::unordered_map<std::string_view, std::size_t> index;
  for (const auto& r : dataset.records) {
    const auto [it, inserted] = index.emplace(r.question_id, resamples.size());
    if (inserted) resamples.emplace_back();
    resamples[it->second].push_back(r.score);
  }
  return estimate_variance_components(resamples);
}

}  // namespace evalstats
