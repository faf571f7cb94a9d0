#include "evalstats/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "evalstats/errors.hpp"
#include "evalstats/estimators.hpp"

namespace evalstats {
namespace {

using nlohmann::json;

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t j = 1; j <= extra; ++j) {
      const auto cc = static_cast<unsigned char>(s[i + j]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong encodings, surrogates and out-of-range code points.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return false;
    i += extra + 1;
  }
  return true;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Collects records and enforces the per-file key and cluster invariants.
class RecordChecker {
 public:
  void add(ScoreRecord rec, std::size_t line) {
    if (rec.model_id.empty()) throw InputError("empty model_id", line);
    if (rec.question_id.empty()) throw InputError("empty question_id", line);
    if (!std::isfinite(rec.score)) throw InputError("score is not finite", line);
    if (rec.cluster_id.empty()) rec.cluster_id = rec.question_id;

    std::string key = rec.model_id;
    key.push_back('\x1f');
    key += rec.question_id;
    const std::string question_key = key;
    key.push_back('\x1f');
    key += std::to_string(rec.sample_index);
    if (auto [it, inserted] = seen_.emplace(key, line); !inserted) {
      throw InputError("duplicate key (model_id=" + rec.model_id + ", question_id=" +
                           rec.question_id + ", sample_index=" +
                           std::to_string(rec.sample_index) + "), first seen on line " +
                           std::to_string(it->second),
                       line);
    }
    if (auto [it, inserted] = clusters_.emplace(question_key, rec.cluster_id); !inserted) {
      if (it->second != rec.cluster_id) {
        throw InputError("question " + rec.question_id + " of model " + rec.model_id +
                             " assigned to cluster " + rec.cluster_id +
                             " but earlier to cluster " + it->second,
                         line);
      }
    }
    records_.push_back(std::move(rec));
  }

  std::vector<ScoreRecord> take() { return std::move(records_); }

 private:
  std::vector<ScoreRecord> records_;
  std::unordered_map<std::string, std::size_t> seen_;
  std::unordered_map<std::string, std::string> clusters_;
};

std::string required_string(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) throw InputError(std::string("missing ") + key, line);
  if (!it->is_string()) throw InputError(std::string(key) + " must be a string", line);
  return it->get<std::string>();
}

ScoreRecord record_from_json(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw InputError("expected a JSON object", line);
  ScoreRecord rec;
  rec.model_id = required_string(obj, "model_id", line);
  rec.question_id = required_string(obj, "question_id", line);
  if (const auto it = obj.find("cluster_id"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw InputError("cluster_id must be a string", line);
    rec.cluster_id = it->get<std::string>();
  }
  if (const auto it = obj.find("sample_index"); it != obj.end() && !it->is_null()) {
    if (it->is_number_unsigned()) {
      rec.sample_index = it->get<std::uint64_t>();
    } else if (it->is_number_integer()) {
      throw InputError("sample_index must be >= 0", line);
    } else {
      throw InputError("sample_index must be a non-negative integer", line);
    }
  }
  const auto score = obj.find("score");
  if (score == obj.end() || score->is_null()) throw InputError("missing score", line);
  if (!score->is_number()) throw InputError("non-numeric score", line);
  rec.score = score->get<double>();
  return rec;
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool field_was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && trim(cur).empty() && !field_was_quoted) {
      cur.clear();
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(field_was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      field_was_quoted = false;
    } else if (field_was_quoted) {
      if (c != ' ' && c != '\t' && c != '\r')
        throw InputError("unexpected character after closing quote", line_no);
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw InputError("unterminated quoted field", line_no);
  fields.push_back(field_was_quoted ? cur : std::string(trim(cur)));
  return fields;
}

double parse_score(std::string_view text, std::size_t line) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    throw InputError("non-numeric score '" + std::string(text) + "'", line);
  }
  return value;
}

std::uint64_t parse_index(std::string_view text, std::size_t line) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError("sample_index must be a non-negative integer, got '" + std::string(text) + "'",
                     line);
  }
  return value;
}

std::vector<ScoreRecord> parse_jsonl(std::istream& in) {
  RecordChecker checker;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!valid_utf8(line)) throw InputError("invalid UTF-8", line_no);
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    checker.add(record_from_json(obj, line_no), line_no);
  }
  return checker.take();
}

std::vector<ScoreRecord> parse_csv(std::istream& in) {
  RecordChecker checker;
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t, std::less<>> column;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!valid_utf8(line)) throw InputError("invalid UTF-8", line_no);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (!have_header) {
      for (std::size_t i = 0; i < fields.size(); ++i) column.emplace(fields[i], i);
      for (const char* required : {"model_id", "question_id", "score"}) {
        if (!column.contains(required))
          throw InputError(std::string("CSV header lacks column ") + required, line_no);
      }
      have_header = true;
      continue;
    }
    auto cell = [&](std::string_view name) -> std::string_view {
      const auto it = column.find(name);
      if (it == column.end() || it->second >= fields.size()) return {};
      return fields[it->second];
    };
    if (fields.size() > column.size())
      throw InputError("row has more cells than the header", line_no);
    ScoreRecord rec;
    rec.model_id = std::string(cell("model_id"));
    rec.question_id = std::string(cell("question_id"));
    rec.cluster_id = std::string(cell("cluster_id"));
    if (const auto idx = cell("sample_index"); !idx.empty()) rec.sample_index = parse_index(idx, line_no);
    const auto score = cell("score");
    if (score.empty()) throw InputError("missing score", line_no);
    rec.score = parse_score(score, line_no);
    checker.add(std::move(rec), line_no);
  }
  if (!have_header) throw InputError("CSV input has no header row");
  return checker.take();
}

std::string csv_escape(std::string_view s) {
  const bool needs_quotes = s.find_first_of(",\"\r\n") != std::string_view::npos ||
                            (!s.empty() && (s.front() == ' ' || s.back() == ' ' ||
                                            s.front() == '\t' || s.back() == '\t'));
  if (!needs_quotes) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string list_ids(const std::vector<std::string>& ids) {
  constexpr std::size_t kMaxListed = 20;
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < kMaxListed; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > kMaxListed) out += ", ... (" + std::to_string(ids.size() - kMaxListed) + " more)";
  return out.empty() ? "(none)" : out;
}

// Resamples of each question ordered by sample index, in question order.
struct QuestionSamples {
  std::string cluster_id;
  std::vector<std::pair<std::uint64_t, double>> samples;
};

std::unordered_map<std::string, QuestionSamples> group_samples(const EvalDataset& ds) {
  std::unordered_map<std::string, QuestionSamples> out;
  for (const auto& r : ds.records) {
    auto& q = out[r.question_id];
    q.cluster_id = r.cluster_id;
    q.samples.emplace_back(r.sample_index, r.score);
  }
  for (auto& [id, q] : out) std::sort(q.samples.begin(), q.samples.end());
  return out;
}

}  // namespace

std::size_t PairedDataset::n_clusters() const {
  std::unordered_set<std::string_view> ids;
  for (const auto& r : rows) ids.insert(r.cluster_id);
  return ids.size();
}

std::vector<double> PairedDataset::scores_a() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.score_a);
  return out;
}

std::vector<double> PairedDataset::scores_b() const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.score_b);
  return out;
}

std::vector<std::size_t> PairedDataset::cluster_labels() const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (const auto& r : rows) ids.push_back(r.cluster_id);
  return dense_labels(ids);
}

RecordFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return RecordFormat::jsonl;
  if (ext == ".csv") return RecordFormat::csv;
  throw InputError("cannot infer record format from extension of " + path.string() +
                   " (expected .jsonl or .csv)");
}

std::vector<ScoreRecord> parse_records(std::istream& source, RecordFormat format) {
  return format == RecordFormat::jsonl ? parse_jsonl(source) : parse_csv(source);
}

std::vector<ScoreRecord> parse_records(std::string_view text, RecordFormat format) {
  std::istringstream in{std::string(text)};
  return parse_records(in, format);
}

std::vector<ScoreRecord> read_records(const std::filesystem::path& path) {
  const auto format = format_from_path(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_records(in, format);
}

std::string serialize_records(std::span<const ScoreRecord> records, RecordFormat format) {
  std::string out;
  if (format == RecordFormat::jsonl) {
    for (const auto& r : records) {
      nlohmann::ordered_json obj;
      obj["model_id"] = r.model_id;
      obj["question_id"] = r.question_id;
      obj["cluster_id"] = r.cluster_id;
      obj["sample_index"] = r.sample_index;
      obj["score"] = r.score;
      out += obj.dump();
      out.push_back('\n');
    }
    return out;
  }
  out = "model_id,question_id,cluster_id,sample_index,score\n";
  for (const auto& r : records) {
    out += csv_escape(r.model_id) + ',' + csv_escape(r.question_id) + ',' +
           csv_escape(r.cluster_id) + ',' + std::to_string(r.sample_index) + ',' +
           shortest(r.score) + '\n';
  }
  return out;
}

EvalDataset build_dataset(std::span<const ScoreRecord> records, std::string_view model_id,
                          std::string eval_name) {
  EvalDataset ds;
  ds.eval_name = std::move(eval_name);
  ds.model_id = std::string(model_id);

  RecordChecker checker;
  std::size_t position = 0;
  for (const auto& r : records) {
    ++position;
    if (r.model_id != model_id) continue;
    try {
      checker.add(r, 0);
    } catch (const InputError& e) {
      throw InputError(std::string(e.what()) + " (record " + std::to_string(position) + ")");
    }
  }
  ds.records = checker.take();
  if (ds.records.empty()) throw InputError("no records for model '" + std::string(model_id) + "'");

  std::unordered_map<std::string_view, std::size_t> k_per_question;
  std::unordered_set<std::string_view> clusters;
  std::size_t out_of_range = 0;
  for (const auto& r : ds.records) {
    ++k_per_question[r.question_id];
    clusters.insert(r.cluster_id);
    if (r.score < 0.0 || r.score > 1.0) ++out_of_range;
  }
  ds.n_questions = k_per_question.size();
  ds.n_clusters = clusters.size();

  if (out_of_range) {
    ds.warnings.push_back(std::to_string(out_of_range) + " score(s) of model " + ds.model_id +
                          " lie outside [0,1]");
  }
  std::size_t k_min = ds.records.size(), k_max = 0;
  for (const auto& [q, k] : k_per_question) {
    k_min = std::min(k_min, k);
    k_max = std::max(k_max, k);
  }
  if (k_min != k_max) {
    ds.warnings.push_back("model " + ds.model_id + " has unequal resample counts per question (K from " +
                          std::to_string(k_min) + " to " + std::to_string(k_max) + ")");
  }
  return ds;
}

PairedDataset join_paired(const EvalDataset& a, const EvalDataset& b) {
  if (!a.eval_name.empty() && !b.eval_name.empty() && a.eval_name != b.eval_name) {
    throw PreconditionError("cannot pair datasets from different evals: " + a.eval_name + " vs " +
                            b.eval_name);
  }
  const auto agg_a = aggregate_resamples(a);
  const auto agg_b = aggregate_resamples(b);
  auto samples_a = group_samples(a);
  auto samples_b = group_samples(b);

  std::vector<std::string> only_a, only_b;
  for (const auto& q : agg_a)
    if (!samples_b.contains(q.question_id)) only_a.push_back(q.question_id);
  for (const auto& q : agg_b)
    if (!samples_a.contains(q.question_id)) only_b.push_back(q.question_id);
  if (!only_a.empty() || !only_b.empty()) {
    throw PreconditionError("question sets differ between " + a.model_id + " and " + b.model_id +
                            "; only in " + a.model_id + ": " + list_ids(only_a) + "; only in " +
                            b.model_id + ": " + list_ids(only_b));
  }

  std::unordered_map<std::string_view, const QuestionAggregate*> by_id_b;
  for (const auto& q : agg_b) by_id_b.emplace(q.question_id, &q);

  PairedDataset pd;
  pd.eval_name = a.eval_name.empty() ? b.eval_name : a.eval_name;
  pd.model_a = a.model_id;
  pd.model_b = b.model_id;
  pd.warnings = a.warnings;
  pd.warnings.insert(pd.warnings.end(), b.warnings.begin(), b.warnings.end());
  pd.rows.reserve(agg_a.size());
  for (const auto& qa : agg_a) {
    const auto& qb = *by_id_b.at(qa.question_id);
    if (qa.cluster_id != qb.cluster_id) {
      throw PreconditionError("question " + qa.question_id + " is in cluster " + qa.cluster_id +
                              " for " + a.model_id + " but in cluster " + qb.cluster_id + " for " +
                              b.model_id);
    }
    PairedRow row;
    row.question_id = qa.question_id;
    row.cluster_id = qa.cluster_id;
    row.score_a = qa.mean_score;
    row.score_b = qb.mean_score;
    for (const auto& [idx, s] : samples_a.at(qa.question_id).samples) row.samples_a.push_back(s);
    for (const auto& [idx, s] : samples_b.at(qa.question_id).samples) row.samples_b.push_back(s);
    pd.rows.push_back(std::move(row));
  }
  return pd;
}

PairedDataset swap_models(const PairedDataset& pd) {
  PairedDataset out = pd;
  std::swap(out.model_a, out.model_b);
  for (auto& r : out.rows) {
    std::swap(r.score_a, r.score_b);
    std::swap(r.samples_a, r.samples_b);
  }
  return out;
}

}  // namespace evalstats
