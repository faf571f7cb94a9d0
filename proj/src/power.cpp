#include "evalstats/power.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "evalstats/errors.hpp"
#include "evalstats/estimators.hpp"
#include "evalstats/rng.hpp"

namespace evalstats {
namespace {

void validate_common(const PowerSpec& spec) {
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (!(spec.beta > 0.0 && spec.beta < 1.0)) throw std::invalid_argument("beta must lie in (0,1)");
  for (double v : {spec.omega2, spec.sigma2_a, spec.sigma2_b}) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("variance components must be finite and non-negative");
  }
  if (spec.k_a < 1 || spec.k_b < 1) throw std::invalid_argument("resample counts must be >= 1");
  if (spec.delta.has_value() == spec.n.has_value())
    throw std::invalid_argument("exactly one of delta and n must be given");
}

PowerResult base_result(const PowerSpec& spec) {
  PowerResult r;
  r.z_alpha_half = normal_quantile(spec.alpha / 2.0);
  r.z_beta = normal_quantile(spec.beta);
  r.effective_variance = effective_variance(spec);
  return r;
}

}  // namespace

double effective_variance(const PowerSpec& spec) {
  return spec.omega2 + spec.sigma2_a / static_cast<double>(spec.k_a) +
         spec.sigma2_b / static_cast<double>(spec.k_b);
}

PowerResult sample_size(const PowerSpec& spec) {
  validate_common(spec);
  if (!spec.delta) throw std::invalid_argument("sample_size needs delta");
  const double delta = *spec.delta;
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("delta must be a positive finite number");

  auto r = base_result(spec);
  const double z = r.z_alpha_half + r.z_beta;
  const double n_real = z * z * r.effective_variance / (delta * delta);
  r.n_real = n_real;
  if (r.effective_variance == 0.0) {
    r.required_n = 1;
    r.warnings.push_back("all variance components are zero; any sample detects the effect");
  } else {
    r.required_n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n_real)));
  }
  return r;
}

PowerResult mde(const PowerSpec& spec) {
  validate_common(spec);
  if (!spec.n) throw std::invalid_argument("mde needs n");
  if (*spec.n < 1) throw std::invalid_argument("n must be >= 1");
  auto r = base_result(spec);
  r.mde = (r.z_alpha_half + r.z_beta) *
          std::sqrt(r.effective_variance / static_cast<double>(*spec.n));
  if (r.effective_variance == 0.0)
    r.warnings.push_back("all variance components are zero; the MDE is zero");
  return r;
}

double predicted_power(double delta, double se, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (!(se >= 0.0)) throw std::invalid_argument("se must be non-negative");
  if (se == 0.0) return delta == 0.0 ? 0.0 : 1.0;
  const double z = normal_quantile(alpha / 2.0);
  return normal_cdf(delta / se - z) + normal_cdf(-delta / se - z);
}

ClusteredComponents estimate_clustered_components(const PairedDataset& pd) {
  const std::size_t n = pd.rows.size();
  if (n == 0) throw PreconditionError("no questions");

  ClusteredComponents out;
  out.k_a = pd.rows.front().samples_a.size();
  out.k_b = pd.rows.front().samples_b.size();
  for (const auto& row : pd.rows) {
    if (row.samples_a.size() < 2 || row.samples_b.size() < 2) {
      throw PreconditionError("question " + row.question_id +
                              " has fewer than 2 resamples; cluster-adjusted components need K >= 2");
    }
    if (row.samples_a.size() != out.k_a || row.samples_b.size() != out.k_b) {
      throw PreconditionError("resample counts differ across questions (question " +
                              row.question_id + "); the estimator requires a uniform K per model");
    }
  }
  out.n_questions = n;
  out.n_clusters = pd.n_clusters();

  const auto labels = pd.cluster_labels();
  const std::size_t g = *std::max_element(labels.begin(), labels.end()) + 1;

  std::vector<double> x_a(n), x_b(n);
  for (std::size_t i = 0; i < n; ++i) {
    x_a[i] = mean_of(pd.rows[i].samples_a);
    x_b[i] = mean_of(pd.rows[i].samples_b);
  }
  const double center_a = mean_of(x_a);
  const double center_b = mean_of(x_b);

  // Triple sums over (c, i, j) factor into products of per-cluster sums.
  std::vector<double> sum_a(g, 0.0), sum_b(g, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    sum_a[labels[i]] += x_a[i] - center_a;
    sum_b[labels[i]] += x_b[i] - center_b;
  }
  const auto nd = static_cast<double>(n);
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
  for (std::size_t c = 0; c < g; ++c) {
    var_a += sum_a[c] * sum_a[c];
    var_b += sum_b[c] * sum_b[c];
    cov += sum_a[c] * sum_b[c];
  }
  out.var_clustered_a = var_a / nd;
  out.var_clustered_b = var_b / nd;
  out.cov_clustered = cov / nd;
  out.omega2_clustered = out.var_clustered_a + out.var_clustered_b - 2.0 * out.cov_clustered;
  if (out.omega2_clustered < 0.0) {
    out.omega2_clustered = 0.0;
    out.omega2_clamped = true;
  }

  auto conditional = [&](bool model_a, std::size_t k_count, bool& clamped) {
    double total = 0.0;
    std::vector<double> sum(g);
    for (std::size_t k = 0; k < k_count; ++k) {
      std::fill(sum.begin(), sum.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& row = pd.rows[i];
        sum[labels[i]] += model_a ? row.samples_a[k] - x_a[i] : row.samples_b[k] - x_b[i];
      }
      for (double s : sum) total += s * s;
    }
    double v = total / (nd * static_cast<double>(k_count - 1));
    if (v < 0.0) {
      v = 0.0;
      clamped = true;
    }
    return v;
  };
  out.sigma2_a_clustered = conditional(true, out.k_a, out.sigma2_a_clamped);
  out.sigma2_b_clustered = conditional(false, out.k_b, out.sigma2_b_clamped);

  out.omega2_clustered_debiased =
      std::max(0.0, out.omega2_clustered - out.sigma2_a_clustered / static_cast<double>(out.k_a) -
                        out.sigma2_b_clustered / static_cast<double>(out.k_b));
  return out;
}

namespace {

std::unordered_set<std::string> pick_clusters(std::vector<std::string> clusters,
                                              std::size_t n_clusters, std::uint64_t seed) {
  if (n_clusters == 0) throw std::invalid_argument("must keep at least one cluster");
  if (n_clusters > clusters.size()) {
    throw std::invalid_argument("requested " + std::to_string(n_clusters) + " clusters but only " +
                                std::to_string(clusters.size()) + " exist");
  }
  Rng rng(seed);
  for (std::size_t i = 0; i < n_clusters; ++i) {
    const auto j = i + rng.below(clusters.size() - i);
    std::swap(clusters[i], clusters[j]);
  }
  return {clusters.begin(), clusters.begin() + static_cast<std::ptrdiff_t>(n_clusters)};
}

template <typename Range, typename Cluster>
std::vector<std::string> distinct_clusters(const Range& items, Cluster cluster_of) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    const std::string& c = cluster_of(item);
    if (seen.insert(c).second) out.push_back(c);
  }
  return out;
}

}  // namespace

PairedDataset subsample_clusters(const PairedDataset& pd, std::size_t n_clusters, std::uint64_t seed) {
  const auto keep = pick_clusters(
      distinct_clusters(pd.rows, [](const PairedRow& r) -> const std::string& { return r.cluster_id; }),
      n_clusters, seed);
  PairedDataset out = pd;
  out.rows.clear();
  for (const auto& row : pd.rows)
    if (keep.contains(row.cluster_id)) out.rows.push_back(row);
  return out;
}

EvalDataset subsample_clusters(const EvalDataset& dataset, std::size_t n_clusters, std::uint64_t seed) {
  const auto keep = pick_clusters(
      distinct_clusters(dataset.records,
                        [](const ScoreRecord& r) -> const std::string& { return r.cluster_id; }),
      n_clusters, seed);
  std::vector<ScoreRecord> records;
  for (const auto& r : dataset.records)
    if (keep.contains(r.cluster_id)) records.push_back(r);
  return build_dataset(records, dataset.model_id, dataset.eval_name);
}

}  // namespace evalstats
