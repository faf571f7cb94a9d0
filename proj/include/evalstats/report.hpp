#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "evalstats/comparison.hpp"
#include "evalstats/estimators.hpp"
#include "evalstats/power.hpp"
#include "evalstats/simlab.hpp"

namespace evalstats {

enum class OutputFormat { markdown, json, plain };
enum class TableKind { single_model, clustered_single_model, pairwise };

std::string_view to_string(TableKind kind);
OutputFormat output_format_from_string(std::string_view name);

struct RenderOptions {
  OutputFormat format = OutputFormat::markdown;
  int digits = 4;        // significant digits for rendered numbers
  bool percent = false;  // render fractions as percentages
};

/// Rounds for display only; `percent` multiplies by 100 and appends '%'.
std::string format_number(double value, int digits, bool percent = false, bool sign = false);

struct SingleModelRow {
  std::string eval_name;
  std::string model_id;
  PointEstimate estimate;
  Interval ci;
  std::optional<PointEstimate> reference;  // e.g. the CLT estimate shown next to Bernoulli
};

struct PairwiseRow {
  std::string eval_name;
  std::string model;
  std::string baseline;
  ComparisonResult result;
};

/// Rendered cells plus the full-precision structured payload used for JSON.
/// Cells may contain '\n' where a value sits beneath another.
struct ReportTable {
  TableKind kind = TableKind::single_model;
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
  nlohmann::json data = nlohmann::json::array();
  std::vector<std::string> notes;
  std::vector<std::string> warnings;
};

ReportTable single_model_table(std::span<const SingleModelRow> rows, bool clustered,
                               const RenderOptions& options);
ReportTable pairwise_table(std::span<const PairwiseRow> rows, const RenderOptions& options);

std::string render(const ReportTable& table, OutputFormat format);

nlohmann::json to_json(const PointEstimate& estimate);
nlohmann::json to_json(const Interval& interval);
nlohmann::json to_json(const ComparisonResult& result);
nlohmann::json to_json(const PowerSpec& spec);
nlohmann::json to_json(const PowerResult& result);
nlohmann::json to_json(const ClusteredComponents& components);
nlohmann::json to_json(const Scenario& scenario);
nlohmann::json to_json(const SimReport& report);

/// Rendering of free-form key/value output (power, simulate) for the
/// non-JSON formats.
std::string render_key_values(const std::vector<std::pair<std::string, std::string>>& items,
                              OutputFormat format);

}  // namespace evalstats
