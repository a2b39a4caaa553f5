#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqlsketch/schema.hpp"

namespace sqlsketch {

enum class SketchKind { Select, From, Keywords };

std::string_view to_string(SketchKind kind);

/// One of the three sketch components, in index form (`SELECT t0.c2`,
/// `FROM t0, t1`, `SELECT FROM WHERE`).
class SketchPart {
 public:
  /// Throws InvalidArgumentError when content is empty, or for Keywords when
  /// it is not a sequence of canonical keywords.
  SketchPart(SketchKind kind, std::string content);

  SketchKind kind() const noexcept { return kind_; }
  const std::string& content() const noexcept { return content_; }

  bool operator==(const SketchPart&) const = default;

 private:
  SketchKind kind_;
  std::string content_;
};

/// Canonical clause keywords, multi-word entries included ("GROUP BY").
const std::vector<std::string>& keyword_vocabulary();

/// Splits keyword text into vocabulary entries; nullopt if any word is not
/// part of the vocabulary. Case-insensitive, output upper-case.
std::optional<std::vector<std::string>> parse_keywords(std::string_view text);

struct CandidateSets {
  std::vector<SketchPart> select_candidates;
  std::vector<SketchPart> from_candidates;
  std::vector<SketchPart> keyword_candidates;
};

struct CandidatePair {
  SketchPart select_part;
  SketchPart keywords_part;
  std::size_t select_rank = 0;
  std::size_t keyword_rank = 0;

  bool operator==(const CandidatePair&) const = default;
};

struct AlignedPair {
  SketchPart select_part;
  SketchPart keywords_part;
  double score = 0.0;
  std::size_t select_rank = 0;
  std::size_t keyword_rank = 0;
};

struct SqlSketch {
  SketchPart select_part;
  SketchPart from_part;
  SketchPart keywords_part;
  std::size_t rank = 0;

  bool operator==(const SqlSketch&) const = default;
};

struct TrainingRecord {
  std::string instruction;
  std::string question;
  std::string serialized_schema;
  std::string label;
  SketchKind subtask = SketchKind::Select;
};

struct AlignerRecord {
  std::string question;
  std::string select_part;
  std::string keywords_part;
  int label = 0;
};

/// Fixed instruction sentence for each sub-task.
std::string_view instruction_for(SketchKind kind);

/// `<instruction> question: <Q> database: <serialized schema>`.
std::string build_task_input(std::string_view instruction, std::string_view question,
                             const DatabaseSchema& schema);

/// Every (select, keywords) pair ordered by (select rank, keyword rank).
/// Repeated pairs (from repeated candidates) keep their first occurrence.
std::vector<CandidatePair> combine_candidates(std::span<const SketchPart> selects,
                                              std::span<const SketchPart> keywords);

/// `[CLS] user question: <Q>. our solution: <select>, <keywords> [SEP]`.
std::string build_aligner_input(std::string_view question, const CandidatePair& pair);

/// Highest score wins; ties go to the earlier pair (lower ranks).
AlignedPair rank_pairs(std::span<const CandidatePair> pairs, std::span<const double> scores);

std::vector<SqlSketch> assemble_sketches(const AlignedPair& best,
                                         std::span<const SketchPart> from_candidates);

/// Sketch of a gold query in index form.
///   SELECT part: the outermost select list, names replaced by t<i>.c<j>.
///   FROM part: every base table at any depth, in order of appearance.
///   Keywords: canonical keywords in order of appearance, deduplicated.
SqlSketch extract_sketch_from_sql(std::string_view sql, const DatabaseSchema& schema);

/// Keywords of a query (parsing is assumed to have succeeded).
std::vector<std::string> extract_keywords(std::string_view sql);

/// Sketch with every index token replaced by names.
struct NamedSketch {
  std::string select_part;
  std::string from_part;
  std::string keywords_part;
};
NamedSketch translate_sketch(const DatabaseSchema& schema, const SqlSketch& sketch);

struct LabeledExample {
  std::string question;
  const DatabaseSchema* schema = nullptr;
  std::string gold_sql;
};

struct TrainingDerivation {
  std::vector<TrainingRecord> records;
  std::vector<std::string> diagnostics;
};

/// Three records per example (Select, From, Keywords); failing examples
/// contribute a diagnostic instead.
TrainingDerivation derive_training_records(std::span<const LabeledExample> examples);

/// Label 1 iff both parts equal the gold parts after case folding and
/// whitespace collapsing.
std::vector<AlignerRecord> derive_aligner_records(std::string_view question,
                                                  std::span<const CandidatePair> pairs,
                                                  const SketchPart& gold_select,
                                                  const SketchPart& gold_keywords);

bool parts_match(std::string_view a, std::string_view b);

nlohmann::ordered_json to_json(const TrainingRecord& record);
nlohmann::ordered_json to_json(const AlignerRecord& record);
nlohmann::ordered_json to_json(const SqlSketch& sketch);

}  // namespace sqlsketch
