#include <doctest.h>

#include <cmath>
#include <numeric>

#include "evalstats/errors.hpp"
#include "evalstats/estimators.hpp"
#include "evalstats/rng.hpp"

using namespace evalstats;
using doctest::Approx;

namespace {

EvalDataset dataset_of(const std::vector<std::vector<double>>& resamples, const std::vector<std::string>& clusters = {}) {
  std::vector<ScoreRecord> recs;
  for (std::size_t q = 0; q < resamples.size(); ++q) {
    const std::string qid = "q" + std::to_string(q);
    const std::string cid = clusters.empty() ? qid : clusters[q];
    for (std::size_t k = 0; k < resamples[q].size(); ++k) recs.push_back({"M", qid, cid, k, resamples[q][k]});
  }
  return build_dataset(recs, "M");
}

// Direct pairwise form of the clustered variance.
double clustered_se_oracle(const std::vector<double>& s, const std::vector<std::size_t>& cluster) {
  const double n = static_cast<double>(s.size());
  const double m = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : s) ss += (v - m) * (v - m);
  double cross = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (i != j && cluster[i] == cluster[j]) cross += (s[i] - m) * (s[j] - m);
  return std::sqrt(std::max(0.0, ss / (n - 1.0) / n + cross / (n * n)));
}

}  // namespace

TEST_CASE("aggregate_resamples") {
  auto ds = dataset_of({{1, 0, 1, 1}});
  auto agg = aggregate_resamples(ds);
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].mean_score == 0.75);
  CHECK(agg[0].k == 4);

  ds = dataset_of({{0.2}, {0.9}, {0.4}});
  agg = aggregate_resamples(ds);
  CHECK(mean_scores(agg) == std::vector<double>{0.2, 0.9, 0.4});
  CHECK(has_uniform_k(agg));

  ds = dataset_of({{0.5}, {0.25, 0.75}});
  agg = aggregate_resamples(ds);
  CHECK(agg[0].mean_score == 0.5);
  CHECK(agg[1].mean_score == 0.5);
  CHECK(agg[1].k == 2);
  CHECK_FALSE(has_uniform_k(agg));
  CHECK(ds.warnings.size() == 1);
}

TEST_CASE("se_clt examples") {
  const std::vector<double> flat(10, 0.7);
  auto e = se_clt(flat);
  CHECK(e.mean == Approx(0.7));
  CHECK(e.se == Approx(0.0));

  const std::vector<double> two{0.0, 1.0};
  e = se_clt(two);
  CHECK(e.mean == 0.5);
  CHECK(e.se == Approx(0.5));

  std::vector<double> sixty(100, 0.0);
  std::fill(sixty.begin(), sixty.begin() + 60, 1.0);
  e = se_clt(sixty);
  CHECK(e.mean == Approx(0.6));
  CHECK(e.se == Approx(std::sqrt(0.6 * 0.4 * 100.0 / 99.0 / 100.0)).epsilon(1e-12));
  CHECK(e.se == Approx(0.04924).epsilon(1e-3));
  CHECK(e.se > se_bernoulli(0.6, 100));

  const std::vector<double> one{0.3};
  CHECK_THROWS_AS(se_clt(one), PreconditionError);
}

TEST_CASE("se_clt is shift invariant and scales linearly") {
  Rng rng(2);
  std::vector<double> s(57), shifted(57), scaled(57);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = rng.uniform();
    shifted[i] = s[i] + 3.0;
    scaled[i] = 2.5 * s[i];
  }
  const double base = se_clt(s).se;
  CHECK(se_clt(shifted).se == Approx(base).epsilon(1e-9));
  CHECK(se_clt(scaled).se == Approx(2.5 * base).epsilon(1e-12));
}

TEST_CASE("se_bernoulli") {
  CHECK(se_bernoulli(0.5, 100) == Approx(0.05));
  CHECK(se_bernoulli(0.0, 17) == 0.0);
  CHECK(se_bernoulli(1.0, 17) == 0.0);
  CHECK(se_bernoulli(0.6, 100) == Approx(0.04899).epsilon(1e-4));
  CHECK_THROWS_AS(se_bernoulli(1.2, 10), std::invalid_argument);
  CHECK_THROWS_AS(se_bernoulli(0.5, 0), std::invalid_argument);
}

TEST_CASE("bernoulli_estimate refuses fractional scores") {
  auto agg = aggregate_resamples(dataset_of({{1}, {0}, {1}, {1}}));
  CHECK(all_binary(agg));
  const auto e = bernoulli_estimate(agg);
  CHECK(e.method == SeMethod::bernoulli);
  CHECK(e.se == Approx(std::sqrt(0.75 * 0.25 / 4.0)));

  agg = aggregate_resamples(dataset_of({{1}, {0.5}}));
  CHECK_FALSE(all_binary(agg));
  CHECK_THROWS_AS(bernoulli_estimate(agg), PreconditionError);
}

TEST_CASE("se_clustered with singleton clusters equals se_clt exactly") {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> s(n);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform();
      labels[i] = i;
    }
    CHECK(se_clustered(s, labels).se == se_clt(s).se);
  }
}

TEST_CASE("se_clustered matches the pairwise oracle") {
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 5 + rng.below(80);
    const std::size_t g = 1 + rng.below(n);
    std::vector<double> s(n);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i < g ? i : rng.below(g);
      s[i] = rng.uniform();
    }
    const auto e = se_clustered(s, labels);
    CHECK(e.se == Approx(clustered_se_oracle(s, labels)).epsilon(1e-10));
    CHECK(e.n_clusters == g);
  }
}

TEST_CASE("duplicated scores behave as one observation per cluster") {
  Rng rng(6);
  const std::size_t m = 400;
  std::vector<double> s;
  std::vector<std::size_t> labels;
  std::vector<double> per_cluster(m);
  for (std::size_t c = 0; c < m; ++c) {
    per_cluster[c] = rng.uniform();
    s.insert(s.end(), {per_cluster[c], per_cluster[c]});
    labels.insert(labels.end(), {c, c});
  }
  const double mean = std::accumulate(per_cluster.begin(), per_cluster.end(), 0.0) / m;
  double pop = 0.0;
  for (double v : per_cluster) pop += (v - mean) * (v - mean);
  pop /= static_cast<double>(m);
  const double se = se_clustered(s, labels).se;
  CHECK(se * se == Approx(pop / m).epsilon(2.0 / m));
  CHECK(se > se_clt(s).se);
}

TEST_CASE("se_clustered from aggregates uses cluster ids") {
  const auto ds = dataset_of({{1}, {1}, {0}, {0}, {1}, {0}}, {"a", "a", "b", "b", "c", "c"});
  const auto agg = aggregate_resamples(ds);
  const auto e = se_clustered(agg);
  CHECK(e.method == SeMethod::clustered);
  CHECK(e.n_clusters == 3);
  CHECK(e.n_questions == 6);
  CHECK(e.se == Approx(clustered_se_oracle({1, 1, 0, 0, 1, 0}, {0, 0, 1, 1, 2, 2})));
}

TEST_CASE("anti-correlated clusters shrink the SE") {
  const std::vector<double> s{0, 1, 0, 1, 0, 1};
  const std::vector<std::size_t> labels{0, 0, 1, 1, 2, 2};
  const auto e = se_clustered(s, labels);
  CHECK(e.se < se_clt(s).se);
  CHECK(e.se == Approx(std::sqrt(0.05 - 1.5 / 36.0)));
  CHECK_FALSE(e.clamped);
}

TEST_CASE("confidence intervals") {
  auto ci = confidence_interval(0.655, 0.007);
  CHECK(ci.lower == Approx(0.64128).epsilon(1e-6));
  CHECK(ci.upper == Approx(0.66872).epsilon(1e-6));
  CHECK(ci.half_width() == Approx(1.959964 * 0.007).epsilon(1e-6));

  ci = confidence_interval(0.3, 0.0);
  CHECK(ci.lower == 0.3);
  CHECK(ci.upper == 0.3);

  ci = confidence_interval(0.0, 1.0, 0.6827);
  CHECK(ci.half_width() == Approx(1.0).epsilon(1e-4));

  CHECK(confidence_interval(0.5, 0.1, 0.99).half_width() > confidence_interval(0.5, 0.1, 0.9).half_width());
  CHECK_THROWS_AS(confidence_interval(0.5, 0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(confidence_interval(0.5, -0.1), std::invalid_argument);
}

TEST_CASE("variance components hand example") {
  const std::vector<std::vector<double>> r{{0, 1}, {1, 1}};
  const auto vc = estimate_variance_components(r);
  CHECK(vc.mean_conditional_variance == Approx(0.25));
  CHECK(vc.var_conditional_mean == 0.0);
  CHECK(vc.k == 2.0);
}

TEST_CASE("variance components of deterministic resamples") {
  const auto ds = dataset_of({{0.25, 0.25, 0.25}, {0.75, 0.75, 0.75}, {0.5, 0.5, 0.5}});
  const auto vc = estimate_variance_components(ds);
  CHECK(vc.mean_conditional_variance == 0.0);
  CHECK(vc.var_conditional_mean == Approx(0.0625));
}

TEST_CASE("variance components recover 1/12 and 1/6") {
  Rng rng(10);
  std::vector<std::vector<double>> r(20000, std::vector<double>(10));
  for (auto& q : r) {
    const double x = rng.uniform();
    for (auto& s : q) s = rng.bernoulli(x) ? 1.0 : 0.0;
  }
  const auto vc = estimate_variance_components(r);
  CHECK(vc.var_conditional_mean == Approx(1.0 / 12.0).epsilon(0.05));
  CHECK(vc.mean_conditional_variance == Approx(1.0 / 6.0).epsilon(0.03));
}

TEST_CASE("variance components preconditions") {
  const std::vector<std::vector<double>> single{{1}, {0}};
  CHECK_THROWS_AS(estimate_variance_components(single), PreconditionError);
  const std::vector<std::vector<double>> one_question{{1, 0, 1}};
  CHECK_THROWS_AS(estimate_variance_components(one_question), PreconditionError);
}

TEST_CASE("dense labels follow first appearance") {
  const std::vector<std::string> ids{"z", "a", "z", "m", "a"};
  CHECK(dense_labels(ids) == std::vector<std::size_t>{0, 1, 0, 2, 1});
}
