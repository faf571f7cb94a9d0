#include "evalstats/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "evalstats/errors.hpp"

namespace evalstats {
namespace {

void check_columns(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired score columns differ in length");
  if (a.size() < 2) {
    throw PreconditionError("paired comparison needs at least 2 questions, got " +
                            std::to_string(a.size()));
  }
}

void finish(ComparisonResult& r, double level) {
  r.ci = confidence_interval(r.mean_diff, r.se, level);
  if (r.se > 0.0) {
    r.z = r.mean_diff / r.se;
  } else if (r.mean_diff == 0.0) {
    r.z = 0.0;
  } else {
    r.z = std::copysign(std::numeric_limits<double>::infinity(), r.mean_diff);
    r.infinite_z = true;
  }
  r.significant = r.ci.lower > 0.0 || r.ci.upper < 0.0;
}

}  // namespace

std::string_view to_string(ComparisonMethod method) {
  switch (method) {
    case ComparisonMethod::unpaired: return "unpaired";
    case ComparisonMethod::paired: return "paired";
    case ComparisonMethod::paired_clustered: return "paired_clustered";
  }
  return "unknown";
}

std::optional<double> pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("correlation columns differ in length");
  if (xs.size() < 2) return std::nullopt;
  const double mx = mean_of(xs), my = mean_of(ys);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double paired_se_from_correlation(double se_a, double se_b, double correlation) {
  return std::sqrt(std::max(0.0, se_a * se_a + se_b * se_b - 2.0 * se_a * se_b * correlation));
}

ComparisonResult unpaired_diff(const PointEstimate& a, const PointEstimate& b, double level) {
  if (!std::isfinite(a.se) || !std::isfinite(b.se) || a.se < 0.0 || b.se < 0.0)
    throw std::invalid_argument("unpaired comparison needs finite non-negative SEs");
  ComparisonResult r;
  r.method = ComparisonMethod::unpaired;
  r.mean_diff = a.mean - b.mean;
  r.se = std::hypot(a.se, b.se);
  r.n_questions = a.n_questions;
  r.n_questions_b = b.n_questions;
  finish(r, level);
  return r;
}

ComparisonResult paired_diff(std::span<const double> scores_a, std::span<const double> scores_b,
                             double level) {
  check_columns(scores_a, scores_b);
  const std::size_t n = scores_a.size();
  ComparisonResult r;
  r.method = ComparisonMethod::paired;
  r.mean_diff = mean_of(scores_a) - mean_of(scores_b);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (scores_a[i] - scores_b[i]) - r.mean_diff;
    ss += u * u;
  }
  const auto nd = static_cast<double>(n);
  r.se = std::sqrt(ss / (nd - 1.0) / nd);
  r.correlation = pearson_correlation(scores_a, scores_b);
  r.n_questions = n;
  finish(r, level);
  return r;
}

ComparisonResult paired_diff(const PairedDataset& pd, double level) {
  const auto a = pd.scores_a();
  const auto b = pd.scores_b();
  auto r = paired_diff(a, b, level);
  r.n_clusters = pd.n_clusters();
  return r;
}

ComparisonResult paired_clustered_diff(std::span<const double> scores_a,
                                       std::span<const double> scores_b,
                                       std::span<const std::size_t> cluster_of, double level) {
  check_columns(scores_a, scores_b);
  if (cluster_of.size() != scores_a.size())
    throw std::invalid_argument("cluster labels differ in length from the scores");
  const std::size_t n = scores_a.size();

  ComparisonResult r;
  r.method = ComparisonMethod::paired_clustered;
  r.mean_diff = mean_of(scores_a) - mean_of(scores_b);

  const std::size_t g = *std::max_element(cluster_of.begin(), cluster_of.end()) + 1;
  std::vector<double> sum(g, 0.0);
  std::vector<bool> used(g, false);
  for (std::size_t i = 0; i < n; ++i) {
    sum[cluster_of[i]] += (scores_a[i] - scores_b[i]) - r.mean_diff;
    used[cluster_of[i]] = true;
  }
  double total = 0.0;
  for (double s : sum) total += s * s;
  r.se = std::sqrt(std::max(0.0, total)) / static_cast<double>(n);
  r.correlation = pearson_correlation(scores_a, scores_b);
  r.n_questions = n;
  r.n_clusters = static_cast<std::size_t>(std::count(used.begin(), used.end(), true));
  finish(r, level);
  return r;
}

ComparisonResult paired_clustered_diff(const PairedDataset& pd, double level) {
  const auto a = pd.scores_a();
  const auto b = pd.scores_b();
  return paired_clustered_diff(a, b, pd.cluster_labels(), level);
}

}  // namespace evalstats
