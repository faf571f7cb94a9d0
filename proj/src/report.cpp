#include "evalstats/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace evalstats {
namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// JSON has no infinities; they are written as strings.
json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::vector<std::string> split_lines(const std::string& cell) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : cell) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string markdown_cell(const std::string& cell) {
  std::string out;
  for (char c : cell) {
    if (c == '\n') out += "<br>";
    else if (c == '|') out += "\\|";
    else out.push_back(c);
  }
  return out;
}

std::string level_label(double level) {
  return format_number(level * 100.0, 6) + "%";
}

}  // namespace

std::string_view to_string(TableKind kind) {
  switch (kind) {
    case TableKind::single_model: return "single_model";
    case TableKind::clustered_single_model: return "clustered_single_model";
    case TableKind::pairwise: return "pairwise";
  }
  return "unknown";
}

OutputFormat output_format_from_string(std::string_view name) {
  if (name == "markdown" || name == "md") return OutputFormat::markdown;
  if (name == "json") return OutputFormat::json;
  if (name == "plain" || name == "text") return OutputFormat::plain;
  throw std::invalid_argument("unknown output format '" + std::string(name) + "'");
}

std::string format_number(double value, int digits, bool percent, bool sign) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? (sign ? "+inf" : "inf") : "-inf";
  if (percent) value *= 100.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, sign ? "%+.*g" : "%.*g", std::max(1, digits), value);
  std::string out(buf);
  if (out == "-0" || out == "+0") out = "0";
  if (percent) out.push_back('%');
  return out;
}

ReportTable single_model_table(std::span<const SingleModelRow> rows, bool clustered,
                               const RenderOptions& options) {
  ReportTable table;
  table.kind = clustered ? TableKind::clustered_single_model : TableKind::single_model;

  std::vector<std::string> evals, models;
  for (const auto& r : rows) {
    if (std::find(evals.begin(), evals.end(), r.eval_name) == evals.end()) evals.push_back(r.eval_name);
    if (std::find(models.begin(), models.end(), r.model_id) == models.end()) models.push_back(r.model_id);
  }
  table.headers = {"Eval", "# Questions"};
  if (clustered) table.headers.push_back("# Clusters");
  table.headers.insert(table.headers.end(), models.begin(), models.end());

  for (const auto& eval : evals) {
    std::vector<std::string> cells(table.headers.size());
    cells[0] = eval;
    for (const auto& r : rows) {
      if (r.eval_name != eval) continue;
      cells[1] = std::to_string(r.estimate.n_questions);
      if (clustered) cells[2] = std::to_string(r.estimate.n_clusters);
      const auto col = (clustered ? 3 : 2) +
                       static_cast<std::size_t>(std::find(models.begin(), models.end(), r.model_id) -
                                                models.begin());
      // The SE sits beneath the mean, in parentheses.
      cells[col] = format_number(r.estimate.mean, options.digits, options.percent) + "\n(" +
                   format_number(r.estimate.se, options.digits, options.percent) + ")";
    }
    table.rows.push_back(std::move(cells));
  }

  for (const auto& r : rows) {
    json row = {{"eval", r.eval_name},
                {"model", r.model_id},
                {"estimate", to_json(r.estimate)},
                {"ci", to_json(r.ci)}};
    if (r.reference) row["reference"] = to_json(*r.reference);
    table.data.push_back(std::move(row));
  }
  return table;
}

ReportTable pairwise_table(std::span<const PairwiseRow> rows, const RenderOptions& options) {
  ReportTable table;
  table.kind = TableKind::pairwise;
  const double level = rows.empty() ? 0.95 : rows.front().result.ci.level;
  const std::string lvl = level_label(level);
  table.headers = {"Eval",
                   "Model",
                   "Baseline",
                   "Model - Baseline",
                   lvl + " Conf. Interval",
                   "Correlation",
                   "Significant at " + level_label(1.0 - level)};
  for (const auto& r : rows) {
    const auto& c = r.result;
    const int d = options.digits;
    const bool pct = options.percent;
    table.rows.push_back(
        {r.eval_name, r.model, r.baseline,
         format_number(c.mean_diff, d, pct, true) + " (" + format_number(c.se, d, pct) + ")",
         "(" + format_number(c.ci.lower, d, pct, true) + ", " + format_number(c.ci.upper, d, pct, true) +
             ")",
         c.correlation ? format_number(*c.correlation, std::min(d, 2)) : "n/a",
         c.significant ? "yes" : "no"});
    table.data.push_back({{"eval", r.eval_name},
                          {"model", r.model},
                          {"baseline", r.baseline},
                          {"comparison", to_json(c)}});
    table.notes.push_back(r.eval_name + ": " + r.model + " vs " + r.baseline + " is " +
                          (c.significant ? "significant" : "not significant") + " at " +
                          level_label(1.0 - level) + " (two-sided; the " + lvl +
                          " confidence interval " + (c.significant ? "excludes" : "includes") +
                          " zero)");
  }
  return table;
}

std::string render(const ReportTable& table, OutputFormat format) {
  std::ostringstream out;
  switch (format) {
    case OutputFormat::json: {
      json doc = {{"kind", to_string(table.kind)},
                  {"rows", table.data},
                  {"notes", table.notes},
                  {"warnings", table.warnings}};
      out << doc.dump(2) << '\n';
      break;
    }
    case OutputFormat::markdown: {
      out << '|';
      for (const auto& h : table.headers) out << ' ' << markdown_cell(h) << " |";
      out << "\n|";
      for (std::size_t i = 0; i < table.headers.size(); ++i) out << "---|";
      out << '\n';
      for (const auto& row : table.rows) {
        out << '|';
        for (const auto& cell : row) out << ' ' << markdown_cell(cell) << " |";
        out << '\n';
      }
      if (!table.notes.empty()) {
        out << '\n';
        for (const auto& n : table.notes) out << "- " << n << '\n';
      }
      break;
    }
    case OutputFormat::plain: {
      std::vector<std::size_t> width(table.headers.size(), 0);
      auto measure = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size() && i < width.size(); ++i)
          for (const auto& line : split_lines(row[i])) width[i] = std::max(width[i], line.size());
      };
      measure(table.headers);
      for (const auto& row : table.rows) measure(row);
      auto emit = [&](const std::vector<std::string>& row) {
        std::vector<std::vector<std::string>> lines;
        std::size_t height = 1;
        for (const auto& cell : row) {
          lines.push_back(split_lines(cell));
          height = std::max(height, lines.back().size());
        }
        for (std::size_t h = 0; h < height; ++h) {
          std::string line;
          for (std::size_t i = 0; i < lines.size(); ++i) {
            const std::string text = h < lines[i].size() ? lines[i][h] : "";
            line += text + std::string(width[i] - text.size() + 2, ' ');
          }
          while (!line.empty() && line.back() == ' ') line.pop_back();
          out << line << '\n';
        }
      };
      emit(table.headers);
      for (const auto& row : table.rows) emit(row);
      for (const auto& n : table.notes) out << n << '\n';
      break;
    }
  }
  return out.str();
}

std::string render_key_values(const std::vector<std::pair<std::string, std::string>>& items,
                              OutputFormat format) {
  std::ostringstream out;
  if (format == OutputFormat::json) {
    json obj = json::object();
    for (const auto& [k, v] : items) obj[k] = v;
    out << obj.dump(2) << '\n';
  } else if (format == OutputFormat::markdown) {
    out << "| Quantity | Value |\n|---|---|\n";
    for (const auto& [k, v] : items) out << "| " << markdown_cell(k) << " | " << markdown_cell(v) << " |\n";
  } else {
    std::size_t width = 0;
    for (const auto& [k, v] : items) width = std::max(width, k.size());
    for (const auto& [k, v] : items) out << k << std::string(width - k.size() + 2, ' ') << v << '\n';
  }
  return out.str();
}

json to_json(const PointEstimate& e) {
  return {{"mean", e.mean},
          {"se", e.se},
          {"n_questions", e.n_questions},
          {"n_clusters", e.n_clusters},
          {"method", to_string(e.method)},
          {"clamped", e.clamped}};
}

json to_json(const Interval& i) {
  return {{"lower", i.lower}, {"upper", i.upper}, {"level", i.level}};
}

json to_json(const ComparisonResult& r) {
  json j = {{"mean_diff", r.mean_diff},
            {"se", r.se},
            {"z", number_json(r.z)},
            {"infinite_z", r.infinite_z},
            {"ci", to_json(r.ci)},
            {"correlation", optional_json(r.correlation)},
            {"method", to_string(r.method)},
            {"n_questions", r.n_questions},
            {"significant", r.significant}};
  j["n_questions_b"] = r.n_questions_b ? json(*r.n_questions_b) : json(nullptr);
  j["n_clusters"] = r.n_clusters ? json(*r.n_clusters) : json(nullptr);
  return j;
}

json to_json(const PowerSpec& s) {
  json j = {{"alpha", s.alpha},     {"beta", s.beta},         {"omega2", s.omega2},
            {"sigma2_a", s.sigma2_a}, {"sigma2_b", s.sigma2_b}, {"k_a", s.k_a},
            {"k_b", s.k_b}};
  j["delta"] = optional_json(s.delta);
  j["n"] = s.n ? json(*s.n) : json(nullptr);
  return j;
}

json to_json(const PowerResult& r) {
  json j = {{"z_alpha_half", r.z_alpha_half},
            {"z_beta", r.z_beta},
            {"effective_variance", r.effective_variance},
            {"warnings", r.warnings}};
  j["required_n"] = r.required_n ? json(*r.required_n) : json(nullptr);
  j["n_real"] = optional_json(r.n_real);
  j["mde"] = optional_json(r.mde);
  return j;
}

json to_json(const ClusteredComponents& c) {
  return {{"omega2_clustered", c.omega2_clustered},
          {"omega2_clustered_debiased", c.omega2_clustered_debiased},
          {"sigma2_a_clustered", c.sigma2_a_clustered},
          {"sigma2_b_clustered", c.sigma2_b_clustered},
          {"var_clustered_a", c.var_clustered_a},
          {"var_clustered_b", c.var_clustered_b},
          {"cov_clustered", c.cov_clustered},
          {"k_a", c.k_a},
          {"k_b", c.k_b},
          {"n_questions", c.n_questions},
          {"n_clusters", c.n_clusters},
          {"omega2_clamped", c.omega2_clamped},
          {"sigma2_a_clamped", c.sigma2_a_clamped},
          {"sigma2_b_clamped", c.sigma2_b_clamped}};
}

json to_json(const Scenario& s) {
  json j = {{"kind", to_string(s.kind)}, {"k", s.k}, {"seed", s.seed}};
  switch (s.kind) {
    case ScenarioKind::uniform_bernoulli:
      j["n_questions"] = s.n_questions;
      break;
    case ScenarioKind::correlated_uniform_pair:
      j["n_questions"] = s.n_questions;
      j["rho"] = s.rho;
      j["delta"] = s.delta;
      break;
    case ScenarioKind::clustered_hierarchical:
      j["n_clusters"] = s.n_clusters;
      j["cluster_size"] = s.cluster_size;
      j["icc"] = s.icc;
      j["paired"] = s.paired;
      break;
    case ScenarioKind::temperature_rounding:
      j["n_questions"] = s.n_questions;
      j["support"] = {s.support_lo, s.support_hi};
      break;
  }
  return j;
}

json to_json(const SimReport& r) {
  json metrics = json::array();
  for (const auto& m : r.metrics) {
    metrics.push_back({{"name", m.name},
                       {"value", number_json(m.value)},
                       {"mc_se", number_json(m.mc_se)},
                       {"target", m.target ? number_json(*m.target) : json(nullptr)}});
  }
  json truth = json::object();
  for (const auto& [k, v] : r.ground_truth) truth[k] = number_json(v);
  return {{"experiment", r.experiment},
          {"scenario", to_json(r.scenario)},
          {"replications", r.replications},
          {"seed", r.seed},
          {"metrics", metrics},
          {"ground_truth", truth},
          {"notes", r.notes}};
}

}  // namespace evalstats
