#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqlsketch/gateway.hpp"
#include "sqlsketch/selection.hpp"
#include "sqlsketch/sketch.hpp"

namespace sqlsketch {

struct GenerationConfig {
  std::size_t k_select = 4;
  std::size_t k_from = 2;
  std::size_t k_keywords = 2;

  void validate() const;
};

struct GenerationTrace {
  std::vector<std::string> select_hypotheses;
  std::vector<std::string> from_hypotheses;
  std::vector<std::string> keyword_hypotheses;
  std::vector<std::string> dropped;  // hypotheses that are not valid parts
  std::vector<std::string> aligner_inputs;
  std::vector<double> aligner_scores;
  std::size_t best_select_rank = 0;
  std::size_t best_keyword_rank = 0;
};

struct GeneratedSketches {
  std::vector<SqlSketch> sketches;
  GenerationTrace trace;
};

/// Top-k candidates per sub-task, aligner ranking of (select, keywords)
/// pairs, then one sketch per FROM candidate. Without an aligner the first
/// pair wins. Throws EmptyCandidateError when a sub-task yields no valid part.
GeneratedSketches generate_sketches(SketchClient& provider, AlignerClient* aligner, std::string_view question,
                                    const DatabaseSchema& schema, const GenerationConfig& config = {});

struct Pipeline {
  std::shared_ptr<SketchClient> sketch_provider;
  std::shared_ptr<AlignerClient> aligner;  // optional
  std::shared_ptr<CompleterClient> completer;
  GenerationConfig generation;
  SelectionConfig selection;
};

struct TranslationResult {
  std::string sql;
  GenerationTrace generation;
  SelectionTrace selection;
};

TranslationResult translate(const Pipeline& pipeline, std::string_view question, const DatabaseSchema& schema,
                            Connection& db);

nlohmann::ordered_json to_json(const GenerationTrace& trace);
nlohmann::ordered_json to_json(const TranslationResult& result);

}  // namespace sqlsketch
