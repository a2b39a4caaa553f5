#include "sqlsketch/pipeline.hpp"

#include "sqlsketch/errors.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch {

void GenerationConfig::validate() const {
  if (k_select == 0 || k_from == 0 || k_keywords == 0)
    throw InvalidArgumentError("candidate counts must be at least 1");
}

namespace {

// Parts whose index tokens do not resolve are dropped too.
std::vector<SketchPart> to_parts(SketchKind kind, const std::vector<std::string>& hyps, const DatabaseSchema& schema,
                                 std::vector<std::string>& dropped) {
  std::vector<SketchPart> parts;
  for (const auto& h : hyps) {
    try {
      SketchPart part(kind, std::string(text::trim(h)));
      if (kind != SketchKind::Keywords) translate_indexed_text(schema, part.content());
      parts.push_back(std::move(part));
    } catch (const InvalidArgumentError&) {
      dropped.push_back(std::string(to_string(kind)) + ": " + h);
    } catch (const IndexResolutionError&) {
      dropped.push_back(std::string(to_string(kind)) + ": " + h);
    }
  }
  if (parts.empty()) throw EmptyCandidateError(std::string("no valid ") + std::string(to_string(kind)) + " candidate");
  return parts;
}

}  // namespace

GeneratedSketches generate_sketches(SketchClient& provider, AlignerClient* aligner, std::string_view question,
                                    const DatabaseSchema& schema, const GenerationConfig& config) {
  config.validate();
  GeneratedSketches out;
  auto& tr = out.trace;
  tr.select_hypotheses = provider.request_candidates(
      build_task_input(instruction_for(SketchKind::Select), question, schema), config.k_select);
  tr.from_hypotheses =
      provider.request_candidates(build_task_input(instruction_for(SketchKind::From), question, schema), config.k_from);
  tr.keyword_hypotheses = provider.request_candidates(
      build_task_input(instruction_for(SketchKind::Keywords), question, schema), config.k_keywords);

  const auto selects = to_parts(SketchKind::Select, tr.select_hypotheses, schema, tr.dropped);
  const auto froms = to_parts(SketchKind::From, tr.from_hypotheses, schema, tr.dropped);
  const auto keywords = to_parts(SketchKind::Keywords, tr.keyword_hypotheses, schema, tr.dropped);

  const auto pairs = combine_candidates(selects, keywords);
  for (const auto& p : pairs) tr.aligner_inputs.push_back(build_aligner_input(question, p));
  if (aligner)
    tr.aligner_scores = aligner->request_alignment_scores(tr.aligner_inputs);
  else
    tr.aligner_scores.assign(pairs.size(), 0.0);
  const auto best = rank_pairs(pairs, tr.aligner_scores);
  tr.best_select_rank = best.select_rank;
  tr.best_keyword_rank = best.keyword_rank;
  out.sketches = assemble_sketches(best, froms);
  return out;
}

TranslationResult translate(const Pipeline& pipeline, std::string_view question, const DatabaseSchema& schema,
                            Connection& db) {
  if (!pipeline.sketch_provider || !pipeline.completer)
    throw InvalidArgumentError("pipeline needs a sketch provider and a completer");
  auto generated = generate_sketches(*pipeline.sketch_provider, pipeline.aligner.get(), question, schema,
                                     pipeline.generation);
  auto selected = select_query(question, schema, db, generated.sketches, *pipeline.completer, pipeline.selection);
  return {std::move(selected.sql), std::move(generated.trace), std::move(selected.trace)};
}

nlohmann::ordered_json to_json(const GenerationTrace& t) {
  nlohmann::ordered_json out;
  out["select_hypotheses"] = t.select_hypotheses;
  out["from_hypotheses"] = t.from_hypotheses;
  out["keyword_hypotheses"] = t.keyword_hypotheses;
  out["dropped"] = t.dropped;
  out["aligner_inputs"] = t.aligner_inputs;
  out["aligner_scores"] = t.aligner_scores;
  out["best_select_rank"] = t.best_select_rank;
  out["best_keyword_rank"] = t.best_keyword_rank;
  return out;
}

nlohmann::ordered_json to_json(const TranslationResult& r) {
  return {{"sql", r.sql}, {"generation", to_json(r.generation)}, {"selection", to_json(r.selection)}};
}

}  // namespace sqlsketch
