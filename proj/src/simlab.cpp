#include "evalstats/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "evalstats/comparison.hpp"
#include "evalstats/estimators.hpp"
#include "evalstats/normal.hpp"
#include "evalstats/power.hpp"
#include "evalstats/rng.hpp"

namespace evalstats {
namespace {

// ---------------------------------------------------------------------------
// Raw draws. Resamples are stored per question; cluster labels are dense.

struct ModelDraw {
  std::vector<std::vector<double>> samples;
  std::vector<double> conditional_means;
  std::vector<double> question_means() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& q : samples) out.push_back(mean_of(q));
    return out;
  }
};

struct Draw {
  ModelDraw a;
  ModelDraw b;  // empty for single-model kinds
  std::vector<std::size_t> cluster;
  bool paired = false;
};

bool is_paired(const Scenario& s) {
  return s.kind == ScenarioKind::correlated_uniform_pair ||
         s.kind == ScenarioKind::temperature_rounding ||
         (s.kind == ScenarioKind::clustered_hierarchical && s.paired);
}

std::size_t question_count(const Scenario& s) {
  return s.kind == ScenarioKind::clustered_hierarchical ? s.n_clusters * s.cluster_size
                                                        : s.n_questions;
}

void push_binary(ModelDraw& m, Rng& rng, double x, std::size_t k) {
  m.conditional_means.push_back(x);
  auto& q = m.samples.emplace_back();
  q.reserve(k);
  for (std::size_t j = 0; j < k; ++j) q.push_back(rng.bernoulli(x) ? 1.0 : 0.0);
}

void push_constant(ModelDraw& m, double x, std::size_t k) {
  m.conditional_means.push_back(x);
  m.samples.emplace_back(k, x);
}

Draw draw(const Scenario& s, Rng& rng) {
  Draw d;
  d.paired = is_paired(s);
  const std::size_t n = question_count(s);
  d.a.samples.reserve(n);
  d.cluster.reserve(n);
  switch (s.kind) {
    case ScenarioKind::uniform_bernoulli:
      for (std::size_t i = 0; i < n; ++i) {
        push_binary(d.a, rng, rng.uniform(), s.k);
        d.cluster.push_back(i);
      }
      break;
    case ScenarioKind::correlated_uniform_pair: {
      // Gaussian copula; Pearson correlation of the uniform margins is
      // (6/pi) asin(rho_g / 2), inverted here.
      const double rho_g = 2.0 * std::sin(std::numbers::pi * s.rho / 6.0);
      const double tail = std::sqrt(std::max(0.0, 1.0 - rho_g * rho_g));
      for (std::size_t i = 0; i < n; ++i) {
        const double z1 = rng.normal();
        const double z2 = rho_g * z1 + tail * rng.normal();
        push_constant(d.a, normal_cdf(z1) + s.delta, s.k);
        push_constant(d.b, normal_cdf(z2), s.k);
        d.cluster.push_back(i);
      }
      break;
    }
    case ScenarioKind::clustered_hierarchical: {
      const double w = cluster_mixing_weight(s.icc);
      for (std::size_t c = 0; c < s.n_clusters; ++c) {
        const double u_a = rng.uniform();
        const double u_b = s.paired ? rng.uniform() : 0.0;
        for (std::size_t i = 0; i < s.cluster_size; ++i) {
          push_binary(d.a, rng, w * u_a + (1.0 - w) * rng.uniform(), s.k);
          if (s.paired) push_binary(d.b, rng, w * u_b + (1.0 - w) * rng.uniform(), s.k);
          d.cluster.push_back(c);
        }
      }
      break;
    }
    case ScenarioKind::temperature_rounding:
      for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(s.support_lo, s.support_hi);
        push_constant(d.a, x, s.k);
        push_constant(d.b, x > 0.5 ? 1.0 : 0.0, s.k);
        d.cluster.push_back(i);
      }
      break;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Replication driver. Replication r always draws from stream_seed(seed, r)
// and writes slot r, so the result does not depend on thread scheduling.

template <typename Fn>
auto replicate(std::size_t count, Fn fn) {
  using T = decltype(fn(std::size_t{}));
  std::vector<T> out(count);
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            out[i] = fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

SimMetric summarize(std::string name, const std::vector<double>& values,
                    std::optional<double> target = std::nullopt) {
  const double m = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  const auto r = static_cast<double>(values.size());
  const double sd = values.size() > 1 ? std::sqrt(ss / (r - 1.0)) : 0.0;
  return {std::move(name), m, sd / std::sqrt(r), target};
}

SimMetric proportion(std::string name, const std::vector<char>& hits, std::optional<double> target) {
  const auto r = static_cast<double>(hits.size());
  const double p = static_cast<double>(std::count(hits.begin(), hits.end(), 1)) / r;
  return {std::move(name), p, std::sqrt(p * (1.0 - p) / r), target};
}

// Standard deviation across replications with its large-sample MC SE.
SimMetric spread(std::string name, const std::vector<double>& values, std::optional<double> target) {
  const double sd = std::sqrt(sample_variance(values));
  const auto r = static_cast<double>(values.size());
  return {std::move(name), sd, sd / std::sqrt(2.0 * (r - 1.0)), target};
}

void require_replications(std::size_t replications) {
  if (replications < 100) throw std::invalid_argument("experiments need at least 100 replications");
}

Scenario replica(const Scenario& s, std::uint64_t seed, std::size_t r) {
  Scenario out = s;
  out.seed = stream_seed(seed, r);
  return out;
}

SimReport make_report(std::string experiment, const Scenario& s, std::size_t replications,
                      std::uint64_t seed) {
  SimReport rep;
  rep.experiment = std::move(experiment);
  rep.scenario = s;
  rep.replications = replications;
  rep.seed = seed;
  rep.ground_truth = ground_truth(s);
  if (s.kind == ScenarioKind::clustered_hierarchical) {
    const auto& g = rep.ground_truth;
    rep.notes.push_back("clustered scenario: mixing weight " + std::to_string(g.at("mixing_weight")) +
                        ", intra-cluster correlation of conditional means " +
                        std::to_string(g.at("icc_conditional_means")) +
                        ", of single answers " + std::to_string(g.at("icc_single_answer")));
  }
  return rep;
}

std::string k_suffix(std::size_t k) { return "_k" + std::to_string(k); }

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::uniform_bernoulli: return "uniform_bernoulli";
    case ScenarioKind::correlated_uniform_pair: return "correlated_uniform_pair";
    case ScenarioKind::clustered_hierarchical: return "clustered_hierarchical";
    case ScenarioKind::temperature_rounding: return "temperature_rounding";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '-', '_');
  for (auto kind : {ScenarioKind::uniform_bernoulli, ScenarioKind::correlated_uniform_pair,
                    ScenarioKind::clustered_hierarchical, ScenarioKind::temperature_rounding}) {
    if (s == to_string(kind)) return kind;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(CoverageEstimator estimator) {
  switch (estimator) {
    case CoverageEstimator::clt: return "clt";
    case CoverageEstimator::clustered: return "clustered";
    case CoverageEstimator::paired: return "paired";
    case CoverageEstimator::paired_clustered: return "paired_clustered";
  }
  return "unknown";
}

CoverageEstimator coverage_estimator_from_string(std::string_view name) {
  std::string s(name);
  std::replace(s.begin(), s.end(), '-', '_');
  for (auto e : {CoverageEstimator::clt, CoverageEstimator::clustered, CoverageEstimator::paired,
                 CoverageEstimator::paired_clustered}) {
    if (s == to_string(e)) return e;
  }
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

void validate(const Scenario& s) {
  if (s.k < 1) throw std::invalid_argument("k must be >= 1");
  switch (s.kind) {
    case ScenarioKind::uniform_bernoulli:
    case ScenarioKind::temperature_rounding:
    case ScenarioKind::correlated_uniform_pair:
      if (s.n_questions < 2) throw std::invalid_argument("n_questions must be >= 2");
      break;
    case ScenarioKind::clustered_hierarchical:
      if (s.n_clusters < 2) throw std::invalid_argument("n_clusters must be >= 2");
      if (s.cluster_size < 1) throw std::invalid_argument("cluster_size must be >= 1");
      if (!(s.icc >= 0.0 && s.icc <= 1.0)) throw std::invalid_argument("icc must lie in [0,1]");
      break;
  }
  if (s.kind == ScenarioKind::correlated_uniform_pair) {
    if (!(s.rho >= -1.0 && s.rho <= 1.0)) throw std::invalid_argument("rho must lie in [-1,1]");
    if (!std::isfinite(s.delta)) throw std::invalid_argument("delta must be finite");
  } else if (s.delta != 0.0) {
    throw std::invalid_argument("a true difference (delta) is only supported by correlated_uniform_pair");
  }
  if (s.kind == ScenarioKind::temperature_rounding &&
      !(s.support_lo < s.support_hi && s.support_lo >= 0.0 && s.support_hi <= 1.0)) {
    throw std::invalid_argument("temperature support must satisfy 0 <= lo < hi <= 1");
  }
}

double cluster_mixing_weight(double icc) {
  if (!(icc >= 0.0 && icc <= 1.0)) throw std::invalid_argument("icc must lie in [0,1]");
  const double a = std::sqrt(icc), b = std::sqrt(1.0 - icc);
  return a / (a + b);
}

std::map<std::string, double> ground_truth(const Scenario& s) {
  validate(s);
  std::map<std::string, double> g;
  const auto k = static_cast<double>(s.k);
  switch (s.kind) {
    case ScenarioKind::uniform_bernoulli:
      g["mean"] = 0.5;
      g["var_conditional_mean"] = 1.0 / 12.0;
      g["mean_conditional_variance"] = 1.0 / 6.0;
      g["variance_ratio" + k_suffix(s.k)] = (1.0 + 2.0 / k) / 3.0;
      break;
    case ScenarioKind::correlated_uniform_pair:
      g["mean_a"] = 0.5 + s.delta;
      g["mean_b"] = 0.5;
      g["mean_diff"] = s.delta;
      g["correlation"] = s.rho;
      g["gaussian_correlation"] = 2.0 * std::sin(std::numbers::pi * s.rho / 6.0);
      g["var_conditional_mean"] = 1.0 / 12.0;
      g["omega2"] = (1.0 - s.rho) / 6.0;
      g["paired_unpaired_variance_ratio"] = 1.0 - s.rho;
      break;
    case ScenarioKind::clustered_hierarchical: {
      const double w = cluster_mixing_weight(s.icc);
      const double var_x = (w * w + (1.0 - w) * (1.0 - w)) / 12.0;
      const double cov_within = w * w / 12.0;
      const double sigma2 = 0.25 - var_x;
      const auto m = static_cast<double>(s.cluster_size);
      g["mixing_weight"] = w;
      g["mean"] = 0.5;
      g["var_conditional_mean"] = var_x;
      g["mean_conditional_variance"] = sigma2;
      g["icc_conditional_means"] = s.icc;
      g["icc_single_answer"] = cov_within / 0.25;
      // Variance of a question mean and the design effect of its cluster.
      const double var_question = var_x + sigma2 / k;
      g["icc_question_means"] = cov_within / var_question;
      g["design_effect"] = 1.0 + (m - 1.0) * cov_within / var_question;
      if (s.paired) {
        g["mean_diff"] = 0.0;
        g["omega2"] = 2.0 * var_x;
        g["omega2_clustered"] = 2.0 * var_x + 2.0 * (m - 1.0) * cov_within;
        g["sigma2_clustered"] = sigma2;
        g["omega2_clustered_plugin"] = g["omega2_clustered"] + 2.0 * sigma2 / k;
      }
      break;
    }
    case ScenarioKind::temperature_rounding: {
      const double lo = s.support_lo, hi = s.support_hi;
      const double p = std::clamp((hi - std::max(lo, 0.5)) / (hi - lo), 0.0, 1.0);
      g["mean_t1"] = 0.5 * (lo + hi);
      g["var_t1"] = (hi - lo) * (hi - lo) / 12.0;
      g["mean_t0"] = p;
      g["var_t0"] = p * (1.0 - p);
      break;
    }
  }
  return g;
}

GeneratedData generate(const Scenario& s) {
  validate(s);
  Rng rng(s.seed);
  const Draw d = draw(s, rng);

  const std::string eval(to_string(s.kind));
  const bool temperature = s.kind == ScenarioKind::temperature_rounding;
  const std::string name_a = d.paired ? (temperature ? "T1" : "A") : "sim";
  const std::string name_b = temperature ? "T0" : "B";

  std::vector<ScoreRecord> records;
  auto emit = [&](const ModelDraw& m, const std::string& model) {
    for (std::size_t i = 0; i < m.samples.size(); ++i) {
      const std::string qid = "q" + std::to_string(i);
      const std::string cid = s.kind == ScenarioKind::clustered_hierarchical
                                  ? "c" + std::to_string(d.cluster[i])
                                  : qid;
      for (std::size_t k = 0; k < m.samples[i].size(); ++k)
        records.push_back({model, qid, cid, k, m.samples[i][k]});
    }
  };
  emit(d.a, name_a);
  if (!d.paired) return build_dataset(records, name_a, eval);
  emit(d.b, name_b);
  return join_paired(build_dataset(records, name_a, eval), build_dataset(records, name_b, eval));
}

std::vector<ScoreRecord> to_records(const GeneratedData& data) {
  if (const auto* ds = std::get_if<EvalDataset>(&data)) return ds->records;
  const auto& pd = std::get<PairedDataset>(data);
  std::vector<ScoreRecord> out;
  for (const auto* model : {&pd.model_a, &pd.model_b}) {
    const bool is_a = model == &pd.model_a;
    for (const auto& row : pd.rows) {
      const auto& samples = is_a ? row.samples_a : row.samples_b;
      for (std::size_t k = 0; k < samples.size(); ++k)
        out.push_back({*model, row.question_id, row.cluster_id, k, samples[k]});
    }
  }
  return out;
}

const SimMetric& SimReport::metric(std::string_view name) const {
  for (const auto& m : metrics)
    if (m.name == name) return m;
  throw std::out_of_range("no metric named " + std::string(name));
}

SimReport run_coverage_experiment(const Scenario& scenario, CoverageEstimator estimator,
                                  double level, std::size_t replications, std::uint64_t seed) {
  require_replications(replications);
  validate(scenario);
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0,1)");
  const bool paired_estimator =
      estimator == CoverageEstimator::paired || estimator == CoverageEstimator::paired_clustered;
  if (scenario.kind == ScenarioKind::temperature_rounding)
    throw std::invalid_argument("coverage experiments do not apply to temperature_rounding");
  if (paired_estimator != is_paired(scenario)) {
    throw std::invalid_argument("estimator " + std::string(to_string(estimator)) +
                                " does not match scenario " + std::string(to_string(scenario.kind)) +
                                (scenario.kind == ScenarioKind::clustered_hierarchical
                                     ? " (set paired accordingly)"
                                     : ""));
  }

  auto rep = make_report("coverage", scenario, replications, seed);
  const auto& g = rep.ground_truth;
  const double truth = paired_estimator ? g.at("mean_diff") : g.at("mean");
  const bool clustered_choice =
      estimator == CoverageEstimator::clustered || estimator == CoverageEstimator::paired_clustered;

  struct Outcome {
    double estimate = 0.0, se_naive = 0.0, se_clustered = 0.0;
    char covered_naive = 0, covered_clustered = 0;
  };
  const auto outcomes = replicate(replications, [&](std::size_t r) {
    const Scenario s = replica(scenario, seed, r);
    Rng rng(s.seed);
    const Draw d = draw(s, rng);
    Outcome o;
    Interval naive_ci, clustered_ci;
    if (paired_estimator) {
      const auto a = d.a.question_means();
      const auto b = d.b.question_means();
      const auto naive = paired_diff(a, b, level);
      const auto clustered = paired_clustered_diff(a, b, d.cluster, level);
      o.estimate = naive.mean_diff;
      o.se_naive = naive.se;
      o.se_clustered = clustered.se;
      naive_ci = naive.ci;
      clustered_ci = clustered.ci;
    } else {
      const auto scores = d.a.question_means();
      const auto naive = se_clt(scores);
      const auto clustered = se_clustered(scores, d.cluster);
      o.estimate = naive.mean;
      o.se_naive = naive.se;
      o.se_clustered = clustered.se;
      naive_ci = confidence_interval(naive, level);
      clustered_ci = confidence_interval(clustered, level);
    }
    o.covered_naive = naive_ci.contains(truth);
    o.covered_clustered = clustered_ci.contains(truth);
    return o;
  });

  std::vector<char> cov_naive, cov_clustered;
  std::vector<double> estimates, se_naive, se_clustered, ratio;
  for (const auto& o : outcomes) {
    cov_naive.push_back(o.covered_naive);
    cov_clustered.push_back(o.covered_clustered);
    estimates.push_back(o.estimate);
    se_naive.push_back(o.se_naive);
    se_clustered.push_back(o.se_clustered);
    ratio.push_back(o.se_naive > 0.0 ? o.se_clustered / o.se_naive : 1.0);
  }
  rep.metrics.push_back(proportion("coverage", clustered_choice ? cov_clustered : cov_naive, level));
  rep.metrics.push_back(proportion("coverage_naive", cov_naive, std::nullopt));
  rep.metrics.push_back(proportion("coverage_clustered", cov_clustered, std::nullopt));
  rep.metrics.push_back(summarize("mean_estimate", estimates, truth));
  rep.metrics.push_back(spread("sd_estimate", estimates, std::nullopt));
  rep.metrics.push_back(summarize("mean_se", clustered_choice ? se_clustered : se_naive));
  rep.metrics.push_back(summarize("mean_se_naive", se_naive));
  rep.metrics.push_back(summarize("mean_se_clustered", se_clustered));
  rep.metrics.push_back(summarize("se_ratio_clustered_to_naive", ratio));
  rep.notes.push_back("estimator " + std::string(to_string(estimator)) + " at level " +
                      std::to_string(level) + "; coverage target is the nominal level");
  return rep;
}

SimReport run_power_experiment(const Scenario& scenario, std::size_t n, double alpha,
                               std::size_t replications, std::uint64_t seed) {
  require_replications(replications);
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
  if (n < 2) throw std::invalid_argument("power experiments need n >= 2");
  Scenario s = scenario;
  if (s.kind == ScenarioKind::correlated_uniform_pair) {
    s.n_questions = n;
  } else if (s.kind == ScenarioKind::clustered_hierarchical && s.paired) {
    s.n_clusters = std::max<std::size_t>(2, (n + s.cluster_size - 1) / s.cluster_size);
  } else {
    throw std::invalid_argument(
        "power experiments need a paired scenario (correlated_uniform_pair or paired "
        "clustered_hierarchical)");
  }
  validate(s);

  auto rep = make_report("power", s, replications, seed);
  const auto& g = rep.ground_truth;
  const bool clustered = s.kind == ScenarioKind::clustered_hierarchical;
  const std::size_t questions = question_count(s);
  const double true_var = clustered ? g.at("omega2_clustered_plugin") : g.at("omega2");
  const double true_se = std::sqrt(true_var / static_cast<double>(questions));
  const double z_crit = normal_quantile(alpha / 2.0);

  struct Outcome {
    char rejected = 0;
    double z = 0.0;
  };
  const auto outcomes = replicate(replications, [&](std::size_t r) {
    const Scenario rs = replica(s, seed, r);
    Rng rng(rs.seed);
    const Draw d = draw(rs, rng);
    const auto a = d.a.question_means();
    const auto b = d.b.question_means();
    const auto result = clustered ? paired_clustered_diff(a, b, d.cluster, 1.0 - alpha)
                                  : paired_diff(a, b, 1.0 - alpha);
    return Outcome{static_cast<char>(std::abs(result.z) > z_crit), result.z};
  });
  std::vector<char> rejected;
  std::vector<double> zs;
  for (const auto& o : outcomes) {
    rejected.push_back(o.rejected);
    zs.push_back(o.z);
  }
  rep.metrics.push_back(
      proportion("rejection_rate", rejected, predicted_power(g.at("mean_diff"), true_se, alpha)));
  rep.metrics.push_back(summarize("mean_z", zs, g.at("mean_diff") / true_se));
  rep.ground_truth["n"] = static_cast<double>(questions);
  rep.ground_truth["true_se"] = true_se;
  rep.notes.push_back("two-sided test at alpha " + std::to_string(alpha) +
                      "; target is the normal-approximation power at the true difference");
  return rep;
}

SimReport run_variance_experiment(const Scenario& scenario, std::span<const std::size_t> ks,
                                  std::size_t replications, std::uint64_t seed) {
  require_replications(replications);
  if (scenario.kind != ScenarioKind::uniform_bernoulli)
    throw std::invalid_argument("the variance experiment runs on uniform_bernoulli");
  if (ks.empty()) throw std::invalid_argument("no resample counts given");
  Scenario s = scenario;
  s.k = *std::max_element(ks.begin(), ks.end());
  validate(s);
  if (std::find(ks.begin(), ks.end(), 0) != ks.end()) throw std::invalid_argument("K must be >= 1");

  auto rep = make_report("variance", s, replications, seed);
  const bool components = s.k >= 2;
  struct Outcome {
    std::vector<double> ratios;
    double var_conditional_mean = 0.0, mean_conditional_variance = 0.0;
  };
  const auto outcomes = replicate(replications, [&](std::size_t r) {
    const Scenario rs = replica(s, seed, r);
    Rng rng(rs.seed);
    const Draw d = draw(rs, rng);
    Outcome o;
    std::vector<double> first(d.a.samples.size()), means(d.a.samples.size());
    for (std::size_t i = 0; i < first.size(); ++i) first[i] = d.a.samples[i][0];
    const double single = sample_variance(first);
    for (std::size_t k : ks) {
      for (std::size_t i = 0; i < means.size(); ++i)
        means[i] = mean_of(std::span(d.a.samples[i]).first(k));
      o.ratios.push_back(sample_variance(means) / single);
    }
    if (components) {
      const auto vc = estimate_variance_components(d.a.samples);
      o.var_conditional_mean = vc.var_conditional_mean;
      o.mean_conditional_variance = vc.mean_conditional_variance;
    }
    return o;
  });

  for (std::size_t j = 0; j < ks.size(); ++j) {
    std::vector<double> ratio, reduction;
    for (const auto& o : outcomes) {
      ratio.push_back(o.ratios[j]);
      reduction.push_back(1.0 - o.ratios[j]);
    }
    const double k = static_cast<double>(ks[j]);
    rep.metrics.push_back(summarize("variance_ratio" + k_suffix(ks[j]), ratio, (1.0 + 2.0 / k) / 3.0));
    rep.metrics.push_back(
        summarize("variance_reduction" + k_suffix(ks[j]), reduction, 1.0 - (1.0 + 2.0 / k) / 3.0));
  }
  if (components) {
    std::vector<double> vcm, mcv;
    for (const auto& o : outcomes) {
      vcm.push_back(o.var_conditional_mean);
      mcv.push_back(o.mean_conditional_variance);
    }
    rep.metrics.push_back(summarize("var_conditional_mean", vcm, 1.0 / 12.0));
    rep.metrics.push_back(summarize("mean_conditional_variance", mcv, 1.0 / 6.0));
  }
  rep.notes.push_back(
      "variance_ratio_kK is the variance of K-resample question means over the variance of a "
      "single answer per question, computed on the same questions in each replication");
  return rep;
}

SimReport run_paired_variance_experiment(const Scenario& scenario, std::size_t replications,
                                         std::uint64_t seed) {
  require_replications(replications);
  if (scenario.kind != ScenarioKind::correlated_uniform_pair)
    throw std::invalid_argument("the paired variance experiment runs on correlated_uniform_pair");
  validate(scenario);
  auto rep = make_report("paired_variance", scenario, replications, seed);

  struct Outcome {
    double ratio = 0.0, correlation = 0.0, paired = 0.0, unpaired = 0.0;
  };
  const auto outcomes = replicate(replications, [&](std::size_t r) {
    const Scenario rs = replica(scenario, seed, r);
    Rng rng(rs.seed);
    const Draw d = draw(rs, rng);
    const auto a = d.a.question_means();
    const auto b = d.b.question_means();
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    Outcome o;
    o.paired = sample_variance(diff);
    o.unpaired = sample_variance(a) + sample_variance(b);
    o.ratio = o.paired / o.unpaired;
    o.correlation = pearson_correlation(a, b).value_or(0.0);
    return o;
  });
  std::vector<double> ratio, corr, paired, unpaired;
  for (const auto& o : outcomes) {
    ratio.push_back(o.ratio);
    corr.push_back(o.correlation);
    paired.push_back(o.paired);
    unpaired.push_back(o.unpaired);
  }
  const double rho = scenario.rho;
  rep.metrics.push_back(summarize("variance_ratio", ratio, 1.0 - rho));
  rep.metrics.push_back(summarize("correlation", corr, rho));
  rep.metrics.push_back(summarize("paired_variance", paired, (1.0 - rho) / 6.0));
  rep.metrics.push_back(summarize("unpaired_variance", unpaired, 1.0 / 6.0));
  rep.notes.push_back("per-question variance of paired differences over the unpaired sum of variances");
  return rep;
}

SimReport run_temperature_experiment(const Scenario& scenario, std::size_t replications,
                                     std::uint64_t seed) {
  require_replications(replications);
  if (scenario.kind != ScenarioKind::temperature_rounding)
    throw std::invalid_argument("the temperature experiment runs on temperature_rounding");
  validate(scenario);
  auto rep = make_report("temperature", scenario, replications, seed);
  const auto& g = rep.ground_truth;

  struct Outcome {
    double mean_t1 = 0.0, var_t1 = 0.0, mean_t0 = 0.0, var_t0 = 0.0;
  };
  const auto outcomes = replicate(replications, [&](std::size_t r) {
    const Scenario rs = replica(scenario, seed, r);
    Rng rng(rs.seed);
    const Draw d = draw(rs, rng);
    const auto& t1 = d.a.conditional_means;
    const auto& t0 = d.b.conditional_means;
    return Outcome{mean_of(t1), sample_variance(t1), mean_of(t0), sample_variance(t0)};
  });
  std::vector<double> m1, v1, m0, v0, ratio;
  for (const auto& o : outcomes) {
    m1.push_back(o.mean_t1);
    v1.push_back(o.var_t1);
    m0.push_back(o.mean_t0);
    v0.push_back(o.var_t0);
    ratio.push_back(o.var_t0 / o.var_t1);
  }
  rep.metrics.push_back(summarize("mean_t1", m1, g.at("mean_t1")));
  rep.metrics.push_back(summarize("mean_t0", m0, g.at("mean_t0")));
  rep.metrics.push_back(summarize("var_t1", v1, g.at("var_t1")));
  rep.metrics.push_back(summarize("var_t0", v0, g.at("var_t0")));
  rep.metrics.push_back(summarize("variance_ratio_t0_to_t1", ratio, g.at("var_t0") / g.at("var_t1")));
  return rep;
}

SimReport run_components_experiment(const Scenario& scenario, std::size_t replications,
                                    std::uint64_t seed) {
  require_replications(replications);
  if (scenario.kind != ScenarioKind::clustered_hierarchical || !scenario.paired)
    throw std::invalid_argument("the components experiment runs on paired clustered_hierarchical");
  validate(scenario);
  if (scenario.k < 2) throw std::invalid_argument("the components experiment needs k >= 2");
  auto rep = make_report("components", scenario, replications, seed);
  const auto& g = rep.ground_truth;

  const auto outcomes = replicate(replications, [&](std::size_t r) {
    const Scenario rs = replica(scenario, seed, r);
    Rng rng(rs.seed);
    const Draw d = draw(rs, rng);
    PairedDataset pd;
    pd.rows.resize(d.a.samples.size());
    for (std::size_t i = 0; i < pd.rows.size(); ++i) {
      auto& row = pd.rows[i];
      row.question_id = "q" + std::to_string(i);
      row.cluster_id = "c" + std::to_string(d.cluster[i]);
      row.samples_a = d.a.samples[i];
      row.samples_b = d.b.samples[i];
      row.score_a = mean_of(row.samples_a);
      row.score_b = mean_of(row.samples_b);
    }
    return estimate_clustered_components(pd);
  });
  std::vector<double> plugin, debiased, sa, sb;
  for (const auto& c : outcomes) {
    plugin.push_back(c.omega2_clustered);
    debiased.push_back(c.omega2_clustered_debiased);
    sa.push_back(c.sigma2_a_clustered);
    sb.push_back(c.sigma2_b_clustered);
  }
  rep.metrics.push_back(summarize("omega2_clustered", plugin, g.at("omega2_clustered_plugin")));
  rep.metrics.push_back(summarize("omega2_clustered_debiased", debiased, g.at("omega2_clustered")));
  rep.metrics.push_back(summarize("sigma2_a_clustered", sa, g.at("sigma2_clustered")));
  rep.metrics.push_back(summarize("sigma2_b_clustered", sb, g.at("sigma2_clustered")));
  rep.notes.push_back(
      "omega2_clustered uses resample means in place of conditional means and so carries "
      "sigma2_a/K + sigma2_b/K of resampling noise; the debiased value removes it");
  return rep;
}

}  // namespace evalstats
