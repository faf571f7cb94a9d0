#include <doctest.h>

#include <cmath>
#include <set>

#include "evalstats/errors.hpp"
#include "evalstats/normal.hpp"
#include "evalstats/power.hpp"
#include "evalstats/rng.hpp"

using namespace evalstats;
using doctest::Approx;

namespace {

// Upper-tail quantile by bisection on the complementary error function.
double quantile_by_bisection(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(mid / std::sqrt(2.0)) > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

PowerSpec reference_spec() {
  PowerSpec s;
  s.omega2 = 1.0 / 9.0;
  return s;
}

// Appendix-style sums written out over every (cluster, i, j) triple.
struct Longhand {
  double omega2, sigma2_a, sigma2_b;
};

Longhand longhand(const PairedDataset& pd) {
  const std::size_t n = pd.rows.size();
  const std::size_t ka = pd.rows[0].samples_a.size(), kb = pd.rows[0].samples_b.size();
  std::vector<double> xa(n), xb(n);
  double ca = 0.0, cb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double s : pd.rows[i].samples_a) xa[i] += s / static_cast<double>(ka);
    for (double s : pd.rows[i].samples_b) xb[i] += s / static_cast<double>(kb);
    ca += xa[i] / static_cast<double>(n);
    cb += xb[i] / static_cast<double>(n);
  }
  double va = 0.0, vb = 0.0, cov = 0.0, sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (pd.rows[i].cluster_id != pd.rows[j].cluster_id) continue;
      va += (xa[i] - ca) * (xa[j] - ca);
      vb += (xb[i] - cb) * (xb[j] - cb);
      cov += (xa[i] - ca) * (xb[j] - cb);
      for (std::size_t k = 0; k < ka; ++k)
        sa += (pd.rows[i].samples_a[k] - xa[i]) * (pd.rows[j].samples_a[k] - xa[j]);
      for (std::size_t k = 0; k < kb; ++k)
        sb += (pd.rows[i].samples_b[k] - xb[i]) * (pd.rows[j].samples_b[k] - xb[j]);
    }
  }
  const double nd = static_cast<double>(n);
  return {(va + vb - 2.0 * cov) / nd, sa / (nd * (ka - 1.0)), sb / (nd * (kb - 1.0))};
}

PairedDataset random_paired(Rng& rng, std::size_t n, std::size_t clusters, std::size_t ka, std::size_t kb) {
  PairedDataset pd;
  pd.model_a = "A";
  pd.model_b = "B";
  for (std::size_t i = 0; i < n; ++i) {
    PairedRow row;
    row.question_id = "q" + std::to_string(i);
    row.cluster_id = "c" + std::to_string(i < clusters ? i : rng.below(clusters));
    for (std::size_t k = 0; k < ka; ++k) row.samples_a.push_back(rng.bernoulli(0.6) ? 1.0 : 0.0);
    for (std::size_t k = 0; k < kb; ++k) row.samples_b.push_back(rng.uniform());
    for (double s : row.samples_a) row.score_a += s / static_cast<double>(ka);
    for (double s : row.samples_b) row.score_b += s / static_cast<double>(kb);
    pd.rows.push_back(std::move(row));
  }
  return pd;
}

}  // namespace

TEST_CASE("normal quantile reference values") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(0.025) == Approx(1.9599639845400545).epsilon(1e-12));
  CHECK(normal_quantile(0.20) == Approx(0.8416212335729142).epsilon(1e-12));
  CHECK(normal_quantile(0.3) == Approx(0.5244005127080409).epsilon(1e-12));
  CHECK(normal_quantile(0.9) == Approx(-1.2815515655446004).epsilon(1e-12));
  CHECK(normal_quantile(1e-6) == Approx(4.753424308822899).epsilon(1e-12));
  CHECK(normal_quantile(1e-12) == Approx(7.034483825301131).epsilon(1e-12));
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(std::nan("")), std::invalid_argument);
}

TEST_CASE("normal quantile agrees with bisection and is antisymmetric") {
  for (double p : {1e-12, 1e-9, 1e-5, 0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.45, 0.5, 0.55, 0.7, 0.9, 0.99, 0.9999}) {
    CAPTURE(p);
    CHECK(std::fabs(normal_quantile(p) - quantile_by_bisection(p)) < 1e-9);
  }
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform(1e-9, 1.0 - 1e-9);
    CHECK(std::fabs(normal_quantile(p) + normal_quantile(1.0 - p)) < 1e-9);
    CHECK(normal_cdf(normal_quantile(p)) == Approx(1.0 - p).epsilon(1e-9));
  }
}

TEST_CASE("sample size reproduces 969") {
  auto spec = reference_spec();
  spec.delta = 0.03;
  const auto r = sample_size(spec);
  CHECK(*r.required_n == 969);
  CHECK(*r.n_real == Approx(968.9975).epsilon(1e-6));
  CHECK(r.z_alpha_half == Approx(1.959964).epsilon(1e-6));
  CHECK(r.z_beta == Approx(0.841621).epsilon(1e-6));
  CHECK(r.effective_variance == Approx(1.0 / 9.0));
  CHECK_FALSE(r.mde.has_value());
}

TEST_CASE("sample size inverting the MDE example") {
  auto spec = reference_spec();
  spec.sigma2_a = spec.sigma2_b = 1.0 / 6.0;
  spec.delta = 0.1327;
  CHECK(*sample_size(spec).n_real == Approx(198.0995).epsilon(1e-5));
}

TEST_CASE("mde examples") {
  auto spec = reference_spec();
  spec.sigma2_a = spec.sigma2_b = 1.0 / 6.0;
  spec.n = 198;
  CHECK(*mde(spec).mde == Approx(0.13273).epsilon(1e-4));
  spec.k_a = spec.k_b = 10;
  CHECK(*mde(spec).mde == Approx(0.07567).epsilon(1e-4));
  spec.k_a = spec.k_b = 100000000;
  const double limit = (1.9599639845400545 + 0.8416212335729142) * std::sqrt(1.0 / 9.0 / 198.0);
  CHECK(*mde(spec).mde == Approx(limit).epsilon(1e-8));
}

TEST_CASE("implied z_beta recovers the quantile before the ceiling") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    PowerSpec spec;
    spec.alpha = rng.uniform(0.001, 0.2);
    spec.beta = rng.uniform(0.01, 0.5);
    spec.delta = rng.uniform(0.005, 0.3);
    spec.omega2 = rng.uniform(0.001, 0.3);
    spec.sigma2_a = rng.uniform(0.0, 0.25);
    const auto r = sample_size(spec);
    const double implied = *spec.delta / std::sqrt(r.effective_variance / *r.n_real) - r.z_alpha_half;
    CHECK(std::fabs(implied - normal_quantile(spec.beta)) < 1e-9);
  }
}

TEST_CASE("ceiling round trip") {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    PowerSpec spec;
    spec.delta = rng.uniform(0.001, 0.5);
    spec.omega2 = rng.uniform(0.0, 0.3);
    spec.sigma2_a = rng.uniform(0.0, 0.25);
    spec.sigma2_b = rng.uniform(0.0, 0.25);
    spec.k_a = 1 + rng.below(8);
    const std::size_t n = *sample_size(spec).required_n;
    PowerSpec back = spec;
    back.delta.reset();
    back.n = n;
    CHECK(*mde(back).mde <= *spec.delta);
    if (n > 1) {
      back.n = n - 1;
      CHECK(*mde(back).mde > *spec.delta);
    }
  }
}

TEST_CASE("monotonicity") {
  PowerSpec base = reference_spec();
  base.sigma2_a = base.sigma2_b = 0.1;
  base.delta = 0.05;
  auto n_of = [](PowerSpec s) { return *sample_size(s).required_n; };
  const std::size_t n0 = n_of(base);

  auto s = base;
  s.delta = 0.06;
  CHECK(n_of(s) <= n0);
  s = base;
  s.omega2 = 0.2;
  CHECK(n_of(s) >= n0);
  s = base;
  s.sigma2_b = 0.2;
  CHECK(n_of(s) >= n0);
  s = base;
  s.alpha = 0.01;
  CHECK(n_of(s) >= n0);
  s = base;
  s.beta = 0.1;
  CHECK(n_of(s) >= n0);

  PowerSpec m = base;
  m.delta.reset();
  m.n = 500;
  const double d0 = *mde(m).mde;
  m.n = 800;
  CHECK(*mde(m).mde <= d0);
  m.n = 500;
  m.k_a = 4;
  CHECK(*mde(m).mde <= d0);
  m.k_b = 4;
  CHECK(*mde(m).mde <= d0);
}

TEST_CASE("power input validation") {
  PowerSpec s = reference_spec();
  CHECK_THROWS_AS(sample_size(s), std::invalid_argument);
  s.delta = 0.0;
  CHECK_THROWS_AS(sample_size(s), std::invalid_argument);
  s.delta = -0.1;
  CHECK_THROWS_AS(sample_size(s), std::invalid_argument);
  s.delta = 0.1;
  s.alpha = 1.5;
  CHECK_THROWS_AS(sample_size(s), std::invalid_argument);
  s.alpha = 0.05;
  s.omega2 = -1.0;
  CHECK_THROWS_AS(sample_size(s), std::invalid_argument);
  s.omega2 = 0.1;
  s.k_a = 0;
  CHECK_THROWS_AS(sample_size(s), std::invalid_argument);

  PowerSpec m = reference_spec();
  m.n = 0;
  CHECK_THROWS_AS(mde(m), std::invalid_argument);
}

TEST_CASE("zero variance needs a single question") {
  PowerSpec s;
  s.delta = 0.1;
  const auto r = sample_size(s);
  CHECK(*r.required_n == 1);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("predicted power") {
  const double z = normal_quantile(0.025) + normal_quantile(0.2);
  CHECK(predicted_power(z * 0.01, 0.01, 0.05) == Approx(0.8).epsilon(1e-3));
  CHECK(predicted_power(0.0, 0.01, 0.05) == Approx(0.05).epsilon(1e-9));
  CHECK(predicted_power(2.0 * z * 0.01, 0.01, 0.05) > 0.99);
}

TEST_CASE("clustered components: one cluster of two questions, K = 2") {
  PairedDataset pd;
  pd.rows.push_back({"q1", "c", 1.0, 0.5, {1.0, 0.0}, {1.0, 0.0}});
  pd.rows.push_back({"q2", "c", 1.0, 0.5, {1.0, 0.0}, {0.0, 1.0}});
  pd.rows[0].score_a = pd.rows[1].score_a = 0.5;
  const auto c = estimate_clustered_components(pd);
  CHECK(c.sigma2_a_clustered == 1.0);
  CHECK(c.sigma2_b_clustered == 0.0);
  CHECK(c.omega2_clustered == 0.0);
  CHECK(c.k_a == 2);
  CHECK(c.n_clusters == 1);
}

TEST_CASE("clustered components match the longhand triple sums") {
  Rng rng(4);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 4 + rng.below(40);
    const auto pd = random_paired(rng, n, 1 + rng.below(n), 2 + rng.below(4), 2 + rng.below(4));
    const auto c = estimate_clustered_components(pd);
    const auto o = longhand(pd);
    CHECK(c.omega2_clustered == Approx(std::max(0.0, o.omega2)).epsilon(1e-10));
    CHECK(c.sigma2_a_clustered == Approx(std::max(0.0, o.sigma2_a)).epsilon(1e-10));
    CHECK(c.sigma2_b_clustered == Approx(std::max(0.0, o.sigma2_b)).epsilon(1e-10));
    CHECK(c.omega2_clustered_debiased >= 0.0);
  }
}

TEST_CASE("clustered components with singleton clusters and deterministic scores") {
  PairedDataset pd;
  const std::vector<double> a{0.25, 0.5, 1.0, 0.0}, b{0.5, 0.5, 0.25, 0.75};
  double mean_d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pd.rows.push_back({"q" + std::to_string(i), "q" + std::to_string(i), a[i], b[i], {a[i], a[i]}, {b[i], b[i], b[i]}});
    mean_d += (a[i] - b[i]) / 4.0;
  }
  double pop = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) pop += (a[i] - b[i] - mean_d) * (a[i] - b[i] - mean_d) / 4.0;
  const auto c = estimate_clustered_components(pd);
  CHECK(c.sigma2_a_clustered == 0.0);
  CHECK(c.sigma2_b_clustered == 0.0);
  CHECK(c.omega2_clustered == Approx(pop));
  CHECK(c.k_b == 3);
}

TEST_CASE("clustered components preconditions") {
  PairedDataset pd;
  pd.rows.push_back({"q1", "q1", 1.0, 0.0, {1.0}, {0.0, 0.0}});
  pd.rows.push_back({"q2", "q2", 1.0, 0.0, {1.0}, {0.0, 0.0}});
  CHECK_THROWS_AS(estimate_clustered_components(pd), PreconditionError);

  pd.rows[0].samples_a = {1.0, 1.0};
  pd.rows[1].samples_a = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(estimate_clustered_components(pd), PreconditionError);
  CHECK_THROWS_AS(estimate_clustered_components(PairedDataset{}), PreconditionError);
}

TEST_CASE("cluster subsampling") {
  Rng rng(5);
  auto pd = random_paired(rng, 60, 12, 2, 2);
  const auto sub = subsample_clusters(pd, 5, 77);
  CHECK(sub.n_clusters() == 5);
  std::set<std::string> kept;
  for (const auto& row : sub.rows) kept.insert(row.cluster_id);
  std::size_t expected_rows = 0;
  for (const auto& row : pd.rows) expected_rows += kept.count(row.cluster_id);
  CHECK(sub.rows.size() == expected_rows);

  std::size_t last = 0;
  for (const auto& row : sub.rows) {
    const auto pos = static_cast<std::size_t>(std::stoul(row.question_id.substr(1)));
    CHECK(pos >= last);
    last = pos;
  }

  const auto again = subsample_clusters(pd, 5, 77);
  REQUIRE(again.rows.size() == sub.rows.size());
  for (std::size_t i = 0; i < sub.rows.size(); ++i) CHECK(again.rows[i].question_id == sub.rows[i].question_id);

  CHECK(subsample_clusters(pd, 12, 1).rows.size() == pd.rows.size());
  CHECK_THROWS_AS(subsample_clusters(pd, 13, 1), std::invalid_argument);
  CHECK_THROWS_AS(subsample_clusters(pd, 0, 1), std::invalid_argument);
}
