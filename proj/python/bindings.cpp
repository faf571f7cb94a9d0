#include <sstream>

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli.hpp"
#include "evalstats/comparison.hpp"
#include "evalstats/errors.hpp"
#include "evalstats/estimators.hpp"
#include "evalstats/ingestion.hpp"
#include "evalstats/normal.hpp"
#include "evalstats/power.hpp"
#include "evalstats/report.hpp"
#include "evalstats/simlab.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace evalstats;

namespace {

void bind_ingestion(py::module_& m) {
  py::enum_<RecordFormat>(m, "RecordFormat")
      .value("jsonl", RecordFormat::jsonl)
      .value("csv", RecordFormat::csv);

  py::class_<ScoreRecord>(m, "ScoreRecord")
      .def(py::init([](std::string model_id, std::string question_id, double score, std::string cluster_id,
                       std::uint64_t sample_index) {
             if (cluster_id.empty()) cluster_id = question_id;
             return ScoreRecord{std::move(model_id), std::move(question_id), std::move(cluster_id), sample_index,
                                score};
           }),
           "model_id"_a, "question_id"_a, "score"_a, "cluster_id"_a = "", "sample_index"_a = 0)
      .def_readwrite("model_id", &ScoreRecord::model_id)
      .def_readwrite("question_id", &ScoreRecord::question_id)
      .def_readwrite("cluster_id", &ScoreRecord::cluster_id)
      .def_readwrite("sample_index", &ScoreRecord::sample_index)
      .def_readwrite("score", &ScoreRecord::score)
      .def(py::self == py::self)
      .def("__repr__", [](const ScoreRecord& r) {
        std::ostringstream os;
        os << "ScoreRecord(" << r.model_id << ", " << r.question_id << ", cluster=" << r.cluster_id
           << ", k=" << r.sample_index << ", score=" << r.score << ")";
        return os.str();
      });

  py::class_<EvalDataset>(m, "EvalDataset")
      .def_readonly("eval_name", &EvalDataset::eval_name)
      .def_readonly("model_id", &EvalDataset::model_id)
      .def_readonly("records", &EvalDataset::records)
      .def_readonly("n_questions", &EvalDataset::n_questions)
      .def_readonly("n_clusters", &EvalDataset::n_clusters)
      .def_readonly("warnings", &EvalDataset::warnings);

  py::class_<PairedRow>(m, "PairedRow")
      .def_readonly("question_id", &PairedRow::question_id)
      .def_readonly("cluster_id", &PairedRow::cluster_id)
      .def_readonly("score_a", &PairedRow::score_a)
      .def_readonly("score_b", &PairedRow::score_b)
      .def_readonly("samples_a", &PairedRow::samples_a)
      .def_readonly("samples_b", &PairedRow::samples_b);

  py::class_<PairedDataset>(m, "PairedDataset")
      .def_readonly("eval_name", &PairedDataset::eval_name)
      .def_readonly("model_a", &PairedDataset::model_a)
      .def_readonly("model_b", &PairedDataset::model_b)
      .def_readonly("rows", &PairedDataset::rows)
      .def_readonly("warnings", &PairedDataset::warnings)
      .def_property_readonly("n_questions", &PairedDataset::n_questions)
      .def_property_readonly("n_clusters", &PairedDataset::n_clusters)
      .def("scores_a", &PairedDataset::scores_a)
      .def("scores_b", &PairedDataset::scores_b)
      .def("cluster_labels", &PairedDataset::cluster_labels);

  m.def("parse_records", py::overload_cast<std::string_view, RecordFormat>(&parse_records), "text"_a, "format"_a);
  m.def("read_records", &read_records, "path"_a);
  m.def("serialize_records", [](const std::vector<ScoreRecord>& r, RecordFormat f) { return serialize_records(r, f); },
        "records"_a, "format"_a);
  m.def("build_dataset",
        [](const std::vector<ScoreRecord>& r, std::string_view model, std::string eval) {
          return build_dataset(r, model, std::move(eval));
        },
        "records"_a, "model_id"_a, "eval_name"_a = "");
  m.def("join_paired", &join_paired, "a"_a, "b"_a);
  m.def("swap_models", &swap_models, "pd"_a);
}

void bind_estimators(py::module_& m) {
  py::enum_<SeMethod>(m, "SeMethod")
      .value("clt", SeMethod::clt)
      .value("bernoulli", SeMethod::bernoulli)
      .value("clustered", SeMethod::clustered);

  py::class_<QuestionAggregate>(m, "QuestionAggregate")
      .def_readonly("question_id", &QuestionAggregate::question_id)
      .def_readonly("cluster_id", &QuestionAggregate::cluster_id)
      .def_readonly("k", &QuestionAggregate::k)
      .def_readonly("mean_score", &QuestionAggregate::mean_score);

  py::class_<PointEstimate>(m, "PointEstimate")
      .def(py::init([](double mean, double se, std::size_t n) {
             PointEstimate e;
             e.mean = mean;
             e.se = se;
             e.n_questions = e.n_clusters = n;
             return e;
           }),
           "mean"_a, "se"_a, "n_questions"_a = 0)
      .def_readonly("mean", &PointEstimate::mean)
      .def_readonly("se", &PointEstimate::se)
      .def_readonly("n_questions", &PointEstimate::n_questions)
      .def_readonly("n_clusters", &PointEstimate::n_clusters)
      .def_readonly("method", &PointEstimate::method)
      .def_readonly("clamped", &PointEstimate::clamped)
      .def("__repr__", [](const PointEstimate& e) {
        std::ostringstream os;
        os << "PointEstimate(mean=" << e.mean << ", se=" << e.se << ", n=" << e.n_questions << ")";
        return os.str();
      });

  py::class_<Interval>(m, "Interval")
      .def_readonly("lower", &Interval::lower)
      .def_readonly("upper", &Interval::upper)
      .def_readonly("level", &Interval::level)
      .def_property_readonly("half_width", &Interval::half_width)
      .def("contains", &Interval::contains)
      .def("__repr__", [](const Interval& i) {
        std::ostringstream os;
        os << "Interval(" << i.lower << ", " << i.upper << ", level=" << i.level << ")";
        return os.str();
      });

  py::class_<VarianceComponents>(m, "VarianceComponents")
      .def_readonly("var_conditional_mean", &VarianceComponents::var_conditional_mean)
      .def_readonly("mean_conditional_variance", &VarianceComponents::mean_conditional_variance)
      .def_readonly("k", &VarianceComponents::k)
      .def_readonly("clamped", &VarianceComponents::clamped);

  m.def("aggregate_resamples", &aggregate_resamples, "dataset"_a);
  m.def("se_clt", [](const std::vector<double>& s) { return se_clt(s); }, "scores"_a);
  m.def("se_clt", [](const std::vector<QuestionAggregate>& a) { return se_clt(a); }, "aggregates"_a);
  m.def("se_bernoulli", &se_bernoulli, "mean"_a, "n"_a);
  m.def("bernoulli_estimate", [](const std::vector<QuestionAggregate>& a) { return bernoulli_estimate(a); },
        "aggregates"_a);
  m.def("se_clustered",
        [](const std::vector<double>& s, const std::vector<std::string>& clusters) {
          return se_clustered(s, dense_labels(clusters));
        },
        "scores"_a, "clusters"_a);
  m.def("se_clustered", [](const std::vector<QuestionAggregate>& a) { return se_clustered(a); }, "aggregates"_a);
  m.def("confidence_interval", py::overload_cast<double, double, double>(&confidence_interval), "center"_a, "se"_a,
        "level"_a = 0.95);
  m.def("confidence_interval", py::overload_cast<const PointEstimate&, double>(&confidence_interval), "estimate"_a,
        "level"_a = 0.95);
  m.def("estimate_variance_components", py::overload_cast<const EvalDataset&>(&estimate_variance_components),
        "dataset"_a);
  m.def("estimate_variance_components",
        [](const std::vector<std::vector<double>>& r) { return estimate_variance_components(r); }, "resamples"_a);
}

void bind_comparison(py::module_& m) {
  py::enum_<ComparisonMethod>(m, "ComparisonMethod")
      .value("unpaired", ComparisonMethod::unpaired)
      .value("paired", ComparisonMethod::paired)
      .value("paired_clustered", ComparisonMethod::paired_clustered);

  py::class_<ComparisonResult>(m, "ComparisonResult")
      .def_readonly("mean_diff", &ComparisonResult::mean_diff)
      .def_readonly("se", &ComparisonResult::se)
      .def_readonly("z", &ComparisonResult::z)
      .def_readonly("ci", &ComparisonResult::ci)
      .def_readonly("correlation", &ComparisonResult::correlation)
      .def_readonly("method", &ComparisonResult::method)
      .def_readonly("n_questions", &ComparisonResult::n_questions)
      .def_readonly("n_questions_b", &ComparisonResult::n_questions_b)
      .def_readonly("n_clusters", &ComparisonResult::n_clusters)
      .def_readonly("significant", &ComparisonResult::significant)
      .def_readonly("infinite_z", &ComparisonResult::infinite_z);

  m.def("unpaired_diff", &unpaired_diff, "a"_a, "b"_a, "level"_a = 0.95);
  m.def("paired_diff",
        [](const std::vector<double>& a, const std::vector<double>& b, double level) { return paired_diff(a, b, level); },
        "scores_a"_a, "scores_b"_a, "level"_a = 0.95);
  m.def("paired_diff", py::overload_cast<const PairedDataset&, double>(&paired_diff), "pd"_a, "level"_a = 0.95);
  m.def("paired_clustered_diff",
        [](const std::vector<double>& a, const std::vector<double>& b, const std::vector<std::string>& clusters,
           double level) { return paired_clustered_diff(a, b, dense_labels(clusters), level); },
        "scores_a"_a, "scores_b"_a, "clusters"_a, "level"_a = 0.95);
  m.def("paired_clustered_diff", py::overload_cast<const PairedDataset&, double>(&paired_clustered_diff), "pd"_a,
        "level"_a = 0.95);
  m.def("pearson_correlation",
        [](const std::vector<double>& x, const std::vector<double>& y) { return pearson_correlation(x, y); }, "x"_a,
        "y"_a);
  m.def("paired_se_from_correlation", &paired_se_from_correlation, "se_a"_a, "se_b"_a, "correlation"_a);
}

void bind_power(py::module_& m) {
  m.def("normal_cdf", &normal_cdf, "x"_a);
  m.def("normal_quantile", &normal_quantile, "p"_a, "Upper-tail standard normal quantile.");

  py::class_<PowerSpec>(m, "PowerSpec")
      .def(py::init([](double alpha, double beta, std::optional<double> delta, std::optional<std::size_t> n,
                       double omega2, double sigma2_a, double sigma2_b, std::size_t k_a, std::size_t k_b) {
             return PowerSpec{alpha, beta, delta, n, omega2, sigma2_a, sigma2_b, k_a, k_b};
           }),
           py::kw_only(), "alpha"_a = 0.05, "beta"_a = 0.20, "delta"_a = py::none(), "n"_a = py::none(),
           "omega2"_a = 0.0, "sigma2_a"_a = 0.0, "sigma2_b"_a = 0.0, "k_a"_a = 1, "k_b"_a = 1)
      .def_readwrite("alpha", &PowerSpec::alpha)
      .def_readwrite("beta", &PowerSpec::beta)
      .def_readwrite("delta", &PowerSpec::delta)
      .def_readwrite("n", &PowerSpec::n)
      .def_readwrite("omega2", &PowerSpec::omega2)
      .def_readwrite("sigma2_a", &PowerSpec::sigma2_a)
      .def_readwrite("sigma2_b", &PowerSpec::sigma2_b)
      .def_readwrite("k_a", &PowerSpec::k_a)
      .def_readwrite("k_b", &PowerSpec::k_b);

  py::class_<PowerResult>(m, "PowerResult")
      .def_readonly("required_n", &PowerResult::required_n)
      .def_readonly("n_real", &PowerResult::n_real)
      .def_readonly("mde", &PowerResult::mde)
      .def_readonly("z_alpha_half", &PowerResult::z_alpha_half)
      .def_readonly("z_beta", &PowerResult::z_beta)
      .def_readonly("effective_variance", &PowerResult::effective_variance)
      .def_readonly("warnings", &PowerResult::warnings);

  py::class_<ClusteredComponents>(m, "ClusteredComponents")
      .def_readonly("omega2_clustered", &ClusteredComponents::omega2_clustered)
      .def_readonly("sigma2_a_clustered", &ClusteredComponents::sigma2_a_clustered)
      .def_readonly("sigma2_b_clustered", &ClusteredComponents::sigma2_b_clustered)
      .def_readonly("omega2_clustered_debiased", &ClusteredComponents::omega2_clustered_debiased)
      .def_readonly("k_a", &ClusteredComponents::k_a)
      .def_readonly("k_b", &ClusteredComponents::k_b)
      .def_readonly("n_questions", &ClusteredComponents::n_questions)
      .def_readonly("n_clusters", &ClusteredComponents::n_clusters);

  m.def("effective_variance", &effective_variance, "spec"_a);
  m.def("sample_size", &sample_size, "spec"_a);
  m.def("mde", &mde, "spec"_a);
  m.def("predicted_power", &predicted_power, "delta"_a, "se"_a, "alpha"_a = 0.05);
  m.def("estimate_clustered_components", &estimate_clustered_components, "pd"_a);
  m.def("subsample_clusters", py::overload_cast<const PairedDataset&, std::size_t, std::uint64_t>(&subsample_clusters),
        "pd"_a, "n_clusters"_a, "seed"_a = 0);
}

void bind_simlab(py::module_& m) {
  py::enum_<ScenarioKind>(m, "ScenarioKind")
      .value("uniform_bernoulli", ScenarioKind::uniform_bernoulli)
      .value("correlated_uniform_pair", ScenarioKind::correlated_uniform_pair)
      .value("clustered_hierarchical", ScenarioKind::clustered_hierarchical)
      .value("temperature_rounding", ScenarioKind::temperature_rounding);

  py::enum_<CoverageEstimator>(m, "CoverageEstimator")
      .value("clt", CoverageEstimator::clt)
      .value("clustered", CoverageEstimator::clustered)
      .value("paired", CoverageEstimator::paired)
      .value("paired_clustered", CoverageEstimator::paired_clustered);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init([](std::string_view kind, py::kwargs kwargs) {
             Scenario s;
             s.kind = scenario_kind_from_string(kind);
             auto obj = py::cast(s);
             for (auto item : kwargs) py::setattr(obj, item.first, item.second);
             return obj.cast<Scenario>();
           }),
           "kind"_a)
      .def_readwrite("kind", &Scenario::kind)
      .def_readwrite("n_questions", &Scenario::n_questions)
      .def_readwrite("k", &Scenario::k)
      .def_readwrite("rho", &Scenario::rho)
      .def_readwrite("delta", &Scenario::delta)
      .def_readwrite("n_clusters", &Scenario::n_clusters)
      .def_readwrite("cluster_size", &Scenario::cluster_size)
      .def_readwrite("icc", &Scenario::icc)
      .def_readwrite("paired", &Scenario::paired)
      .def_readwrite("support_lo", &Scenario::support_lo)
      .def_readwrite("support_hi", &Scenario::support_hi)
      .def_readwrite("seed", &Scenario::seed)
      .def("validate", [](const Scenario& s) { validate(s); })
      .def("ground_truth", [](const Scenario& s) { return ground_truth(s); });

  py::class_<SimMetric>(m, "SimMetric")
      .def_readonly("name", &SimMetric::name)
      .def_readonly("value", &SimMetric::value)
      .def_readonly("mc_se", &SimMetric::mc_se)
      .def_readonly("target", &SimMetric::target);

  py::class_<SimReport>(m, "SimReport")
      .def_readonly("experiment", &SimReport::experiment)
      .def_readonly("scenario", &SimReport::scenario)
      .def_readonly("replications", &SimReport::replications)
      .def_readonly("seed", &SimReport::seed)
      .def_readonly("metrics", &SimReport::metrics)
      .def_readonly("ground_truth", &SimReport::ground_truth)
      .def_readonly("notes", &SimReport::notes)
      .def("metric", &SimReport::metric, "name"_a, py::return_value_policy::copy)
      .def("to_json", [](const SimReport& r) { return to_json(r).dump(2); });

  m.def("generate", &generate, "scenario"_a);
  m.def("to_records", &to_records, "data"_a);

  const auto release = py::call_guard<py::gil_scoped_release>();
  m.def("run_coverage_experiment", &run_coverage_experiment, "scenario"_a, "estimator"_a, "level"_a = 0.95,
        "replications"_a = 1000, "seed"_a = 0, release);
  m.def("run_power_experiment", &run_power_experiment, "scenario"_a, "n"_a, "alpha"_a = 0.05, "replications"_a = 1000,
        "seed"_a = 0, release);
  m.def("run_variance_experiment",
        [](const Scenario& s, const std::vector<std::size_t>& ks, std::size_t reps, std::uint64_t seed) {
          return run_variance_experiment(s, ks, reps, seed);
        },
        "scenario"_a, "ks"_a, "replications"_a = 1000, "seed"_a = 0, release);
  m.def("run_paired_variance_experiment", &run_paired_variance_experiment, "scenario"_a, "replications"_a = 1000,
        "seed"_a = 0, release);
  m.def("run_temperature_experiment", &run_temperature_experiment, "scenario"_a, "replications"_a = 1000,
        "seed"_a = 0, release);
  m.def("run_components_experiment", &run_components_experiment, "scenario"_a, "replications"_a = 1000,
        "seed"_a = 0, release);
}

}  // namespace

PYBIND11_MODULE(_evalstats, m) {
  m.doc() = "Standard errors, paired comparisons and power analysis for eval scores";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);

  bind_ingestion(m);
  bind_estimators(m);
  bind_comparison(m);
  bind_power(m);
  bind_simlab(m);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      "args"_a, "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
