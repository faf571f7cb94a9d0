#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evalstats/errors.hpp"

namespace evalstats {

enum class RecordFormat { jsonl, csv };

/// One graded answer.
struct ScoreRecord {
  std::string model_id;
  std::string question_id;
  std::string cluster_id;  // defaults to question_id
  std::uint64_t sample_index = 0;
  double score = 0.0;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

/// All records of a single model on one eval.
struct EvalDataset {
  std::string eval_name;
  std::string model_id;
  std::vector<ScoreRecord> records;
  std::size_t n_questions = 0;
  std::size_t n_clusters = 0;
  std::vector<std::string> warnings;
};

/// One question answered by both models. `score_a` / `score_b` are the
/// per-question resample means; the raw resamples are kept, ordered by
/// sample index, for variance-component estimation.
struct PairedRow {
  std::string question_id;
  std::string cluster_id;
  double score_a = 0.0;
  double score_b = 0.0;
  std::vector<double> samples_a;
  std::vector<double> samples_b;
};

struct PairedDataset {
  std::string eval_name;
  std::string model_a;
  std::string model_b;
  std::vector<PairedRow> rows;
  std::vector<std::string> warnings;

  std::size_t n_questions() const noexcept { return rows.size(); }
  std::size_t n_clusters() const;
  std::vector<double> scores_a() const;
  std::vector<double> scores_b() const;
  /// Dense cluster labels 0..G-1, in order of first appearance.
  std::vector<std::size_t> cluster_labels() const;
};

RecordFormat format_from_path(const std::filesystem::path& path);

/// Parses JSONL or CSV score records. Missing cluster ids default to the
/// question id and missing sample indices to 0. Throws InputError carrying
/// the offending line for malformed lines, non-numeric or non-finite
/// scores, duplicate (model, question, sample) keys and questions whose
/// cluster id changes between records of the same model.
std::vector<ScoreRecord> parse_records(std::istream& source, RecordFormat format);
std::vector<ScoreRecord> parse_records(std::string_view text, RecordFormat format);
std::vector<ScoreRecord> read_records(const std::filesystem::path& path);

/// Inverse of parse_records: every field is written explicitly, scores with
/// round-trip precision.
std::string serialize_records(std::span<const ScoreRecord> records, RecordFormat format);

/// Selects `model_id`'s records and validates them as a dataset. Scores
/// outside [0,1] and unequal resample counts are reported as warnings.
EvalDataset build_dataset(std::span<const ScoreRecord> records, std::string_view model_id,
                          std::string eval_name = {});

/// Pairs two models on their shared questions. Rows follow the question
/// order of `a`. Throws PreconditionError when the question sets differ
/// (listing the symmetric difference) or a question's cluster differs.
PairedDataset join_paired(const EvalDataset& a, const EvalDataset& b);

/// The same data with the roles of the two models exchanged.
PairedDataset swap_models(const PairedDataset& pd);

}  // namespace evalstats
