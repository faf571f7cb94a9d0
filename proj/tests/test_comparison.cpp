#include <doctest.h>

#include <cmath>
#include <limits>

#include "evalstats/comparison.hpp"
#include "evalstats/rng.hpp"

using namespace evalstats;
using doctest::Approx;

namespace {

PointEstimate estimate(double mean, double se) {
  PointEstimate e;
  e.mean = mean;
  e.se = se;
  e.n_questions = 100;
  return e;
}

}  // namespace

TEST_CASE("unpaired difference") {
  auto r = unpaired_diff(estimate(0.6, 0.03), estimate(0.6, 0.03));
  CHECK(r.mean_diff == 0.0);
  CHECK(r.z == 0.0);
  CHECK_FALSE(r.significant);

  r = unpaired_diff(estimate(0.5, 0.03), estimate(0.4, 0.04));
  CHECK(r.se == Approx(0.05));
  CHECK(r.method == ComparisonMethod::unpaired);
  CHECK_FALSE(r.correlation.has_value());

  r = unpaired_diff(estimate(0.655, 0.007), estimate(0.630, 0.007));
  CHECK(r.mean_diff == Approx(0.025));
  CHECK(r.se == Approx(0.009899).epsilon(1e-4));
  CHECK(r.z == Approx(2.525).epsilon(1e-3));
  CHECK(r.significant);
  CHECK(r.ci.lower > 0.0);
}

TEST_CASE("correlation identity") {
  CHECK(paired_se_from_correlation(0.007, 0.007, 0.5) == Approx(0.007));
  CHECK(paired_se_from_correlation(0.03, 0.04, 0.0) == Approx(0.05));
  CHECK(paired_se_from_correlation(0.02, 0.02, 1.0) == 0.0);
}

TEST_CASE("paired difference of identical models") {
  const std::vector<double> a{0.1, 0.9, 0.4, 0.7};
  const auto r = paired_diff(a, a);
  CHECK(r.mean_diff == 0.0);
  CHECK(r.se == 0.0);
  CHECK(r.z == 0.0);
  CHECK_FALSE(r.infinite_z);
  CHECK_FALSE(r.significant);
  REQUIRE(r.correlation.has_value());
  CHECK(*r.correlation == Approx(1.0));
}

TEST_CASE("constant nonzero difference gives infinite z") {
  const std::vector<double> a{0.5, 0.75, 1.0}, b{0.25, 0.5, 0.75};
  const auto r = paired_diff(a, b);
  CHECK(r.se == 0.0);
  CHECK(r.mean_diff == 0.25);
  CHECK(r.infinite_z);
  CHECK(r.z == std::numeric_limits<double>::infinity());
  CHECK(r.significant);
}

TEST_CASE("paired SE equals the correlation identity") {
  Rng rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + rng.below(150);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform();
      b[i] = rng.uniform(-0.5, 0.5) * a[i] + rng.uniform();
    }
    const auto r = paired_diff(a, b);
    REQUIRE(r.correlation.has_value());
    const double via = paired_se_from_correlation(se_clt(a).se, se_clt(b).se, *r.correlation);
    CHECK(r.se == Approx(via).epsilon(1e-12));
    CHECK(r.mean_diff == Approx(mean_of(a) - mean_of(b)).epsilon(1e-12));
  }
}

TEST_CASE("paired SE is never above unpaired when correlation is non-negative") {
  Rng rng(13);
  std::vector<double> a(300), b(300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform();
    b[i] = 0.5 * a[i] + 0.5 * rng.uniform();
  }
  const auto paired = paired_diff(a, b);
  const auto unpaired = unpaired_diff(se_clt(a), se_clt(b));
  REQUIRE(*paired.correlation >= 0.0);
  CHECK(paired.se <= unpaired.se);
  CHECK(paired.mean_diff == Approx(unpaired.mean_diff));
}

TEST_CASE("pearson correlation") {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, flat{1, 1, 1, 1};
  CHECK(*pearson_correlation(x, y) == Approx(1.0));
  CHECK(*pearson_correlation(x, z) == Approx(-1.0));
  CHECK_FALSE(pearson_correlation(x, flat).has_value());
  CHECK_THROWS_AS(pearson_correlation(x, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST_CASE("paired clustered with singletons drops the Bessel factor") {
  Rng rng(14);
  const std::size_t n = 40;
  std::vector<double> a(n), b(n);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform();
    b[i] = rng.uniform();
    labels[i] = i;
  }
  const auto plain = paired_diff(a, b);
  const auto clustered = paired_clustered_diff(a, b, labels);
  CHECK(clustered.se == Approx(plain.se * std::sqrt((n - 1.0) / n)).epsilon(1e-12));
  CHECK(clustered.method == ComparisonMethod::paired_clustered);
  CHECK(*clustered.n_clusters == n);
}

TEST_CASE("paired clustered oracle and identical models") {
  const std::vector<double> a{1, 0.5, 0, 1, 0.25, 0.75}, b{0, 0.5, 0.5, 1, 0, 0.25};
  const std::vector<std::size_t> labels{0, 0, 1, 1, 2, 2};
  double dbar = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dbar += (a[i] - b[i]) / 6.0;
  std::vector<double> sums(3, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) sums[labels[i]] += a[i] - b[i] - dbar;
  const double expected = std::sqrt(sums[0] * sums[0] + sums[1] * sums[1] + sums[2] * sums[2]) / 6.0;
  CHECK(paired_clustered_diff(a, b, labels).se == Approx(expected).epsilon(1e-12));

  const auto same = paired_clustered_diff(a, a, labels);
  CHECK(same.se == 0.0);
  CHECK(same.mean_diff == 0.0);
  CHECK_FALSE(same.significant);
}

TEST_CASE("comparison on a paired dataset") {
  PairedDataset pd;
  pd.model_a = "A";
  pd.model_b = "B";
  for (int i = 0; i < 8; ++i) {
    const double sa = (i % 3) / 2.0;
    const double sb = (i % 2) / 1.0;
    pd.rows.push_back({"q" + std::to_string(i), "c" + std::to_string(i / 2), sa, sb, {sa}, {sb}});
  }
  const auto r = paired_diff(pd);
  CHECK(r.n_questions == 8);
  const auto rc = paired_clustered_diff(pd);
  CHECK(*rc.n_clusters == 4);
  CHECK(rc.mean_diff == r.mean_diff);
  const auto swapped = paired_diff(swap_models(pd));
  CHECK(swapped.mean_diff == Approx(-r.mean_diff));
  CHECK(swapped.se == Approx(r.se));
}

TEST_CASE("level controls the verdict") {
  const auto loose = unpaired_diff(estimate(0.52, 0.01), estimate(0.50, 0.01), 0.80);
  const auto strict = unpaired_diff(estimate(0.52, 0.01), estimate(0.50, 0.01), 0.99);
  CHECK(loose.significant);
  CHECK_FALSE(strict.significant);
  CHECK(loose.ci.level == 0.80);
}
