#include "sqlsketch/similarity.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sqlsketch/errors.hpp"
#include "sqlsketch/kernels.hpp"
#include "sqlsketch/text.hpp"

namespace sqlsketch {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::CharacterFuzzy:
      return "fuzzy";
    case BackendKind::WordEmbedding:
      return "embedding";
    case BackendKind::SentenceEncoder:
      break;
  }
  return "encoder";
}

namespace {

std::u32string fold(std::string_view s) { return text::decode_utf8(text::to_lower(text::trim(s))); }

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  double out = 0.0;
  kernels::cosine_scores_serial(a, b, a.size(), std::span<double>(&out, 1));
  return out;
}

}  // namespace

double fuzzy_similarity(std::string_view a, std::string_view b) {
  const auto fa = fold(a);
  const auto fb = fold(b);
  if (fa.empty() || fb.empty()) throw EmptyValueError("fuzzy similarity of an empty value");
  const kernels::LcsPattern pattern(fa);
  return kernels::fuzzy_score(fa.size(), fb.size(), pattern.lcs_length(fb));
}

// --- embedding table ---

EmbeddingTable::EmbeddingTable(std::size_t dimension,
                               std::unordered_map<std::string, std::vector<double>> entries)
    : dimension_(dimension), entries_(std::move(entries)) {
  if (dimension_ == 0) throw EmbeddingFormatError("embedding dimension must be positive");
  for (const auto& [token, vec] : entries_) {
    if (vec.size() != dimension_)
      throw EmbeddingFormatError("vector for '" + token + "' has dimension " + std::to_string(vec.size()));
  }
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EmbeddingFormatError("cannot read word-vector file " + path.string());
  return parse(in);
}

EmbeddingTable EmbeddingTable::parse(std::istream& in) {
  std::unordered_map<std::string, std::vector<double>> entries;
  std::size_t dimension = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = text::split_whitespace(line);
    if (fields.empty()) continue;
    if (dimension == 0) {
      if (fields.size() < 2) throw EmbeddingFormatError("line 1: expected a token and at least one number");
      dimension = fields.size() - 1;
    }
    if (fields.size() != dimension + 1) {
      throw EmbeddingFormatError("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(dimension) + " numbers, found " +
                                 std::to_string(fields.size() - 1));
    }
    std::vector<double> vec(dimension);
    for (std::size_t i = 0; i < dimension; ++i) {
      const auto& f = fields[i + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), vec[i]);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw EmbeddingFormatError("line " + std::to_string(line_no) + ": bad number '" + f + "'");
    }
    entries.emplace(text::to_lower(fields[0]), std::move(vec));
  }
  if (entries.empty()) throw EmbeddingFormatError("word-vector file is empty");
  return EmbeddingTable(dimension, std::move(entries));
}

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
  auto it = entries_.find(text::to_lower(token));
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> tokenize_value(std::string_view value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value) {
    auto u = static_cast<unsigned char>(c);
    if (std::isspace(u) || (u < 0x80 && std::ispunct(u))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(u));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<double> average_embedding(const EmbeddingTable& table, std::string_view value) {
  std::vector<double> sum(table.dimension(), 0.0);
  std::size_t hits = 0;
  for (const auto& tok : tokenize_value(value)) {
    if (const auto* vec = table.find(tok)) {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*vec)[i];
      ++hits;
    }
  }
  if (hits == 0) return {};
  for (double& x : sum) x /= static_cast<double>(hits);
  return sum;
}

double embedding_similarity(std::string_view a, std::string_view b, const EmbeddingTable& table) {
  auto va = average_embedding(table, a);
  auto vb = average_embedding(table, b);
  if (va.empty() || vb.empty()) return fuzzy_similarity(a, b);
  return cosine(va, vb);
}

double sentence_similarity(std::string_view a, std::string_view b, TextEncoder& encoder,
                           bool fallback_to_fuzzy) {
  std::vector<std::string> texts{std::string(a), std::string(b)};
  std::vector<std::vector<double>> vectors;
  try {
    vectors = encoder.encode(texts);
  } catch (const EncoderUnavailableError&) {
    if (fallback_to_fuzzy) return fuzzy_similarity(a, b);
    throw;
  }
  if (vectors.size() != 2) throw ProtocolError("encoder returned " + std::to_string(vectors.size()) + " vectors for 2 texts");
  return cosine(vectors[0], vectors[1]);
}

// --- backends ---

double FuzzyBackend::score(std::string_view a, std::string_view b) const { return fuzzy_similarity(a, b); }

std::vector<double> FuzzyBackend::score_batch(std::string_view query,
                                              std::span<const std::string> candidates) const {
  const auto q = fold(query);
  if (q.empty()) throw EmptyValueError("fuzzy similarity of an empty value");
  std::vector<std::u32string> folded;
  folded.reserve(candidates.size());
  for (const auto& c : candidates) folded.push_back(fold(c));
  std::vector<double> out(candidates.size(), 0.0);
  kernels::fuzzy_scores(q, folded, out);
  return out;
}

EmbeddingBackend::EmbeddingBackend(std::shared_ptr<const EmbeddingTable> table) : table_(std::move(table)) {
  if (!table_) throw InvalidArgumentError("embedding backend needs a table");
}

double EmbeddingBackend::score(std::string_view a, std::string_view b) const {
  return embedding_similarity(a, b, *table_);
}

std::vector<double> EmbeddingBackend::score_batch(std::string_view query,
                                                  std::span<const std::string> candidates) const {
  const auto qvec = average_embedding(*table_, query);
  if (qvec.empty()) return fuzzy_.score_batch(query, candidates);

  const std::size_t dim = table_->dimension();
  std::vector<double> out(candidates.size(), 0.0);
  std::vector<double> rows;
  std::vector<std::size_t> embedded;
  std::vector<std::string> missing;
  std::vector<std::size_t> missing_at;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (text::trim(candidates[i]).empty()) continue;
    auto v = average_embedding(*table_, candidates[i]);
    if (v.empty()) {
      missing.push_back(candidates[i]);
      missing_at.push_back(i);
    } else {
      rows.insert(rows.end(), v.begin(), v.end());
      embedded.push_back(i);
    }
  }
  std::vector<double> scores(embedded.size());
  kernels::cosine_scores(qvec, rows, dim, scores);
  for (std::size_t k = 0; k < embedded.size(); ++k) out[embedded[k]] = scores[k];
  if (!missing.empty()) {
    auto fuzzy = fuzzy_.score_batch(query, missing);
    for (std::size_t k = 0; k < missing.size(); ++k) out[missing_at[k]] = fuzzy[k];
  }
  return out;
}

EncoderBackend::EncoderBackend(std::shared_ptr<TextEncoder> encoder, bool fallback_to_fuzzy,
                               std::size_t chunk_size)
    : encoder_(std::move(encoder)), fallback_(fallback_to_fuzzy), chunk_size_(chunk_size == 0 ? 1 : chunk_size) {
  if (!encoder_) throw InvalidArgumentError("encoder backend needs an encoder");
}

void EncoderBackend::ensure_encoded(std::span<const std::string> texts) const {
  std::vector<std::string> todo;
  {
    std::lock_guard lock(mutex_);
    for (const auto& t : texts)
      if (!cache_.count(t) && std::find(todo.begin(), todo.end(), t) == todo.end()) todo.push_back(t);
  }
  for (std::size_t start = 0; start < todo.size(); start += chunk_size_) {
    std::span<const std::string> chunk(todo.data() + start, std::min(chunk_size_, todo.size() - start));
    auto vectors = encoder_->encode(chunk);
    if (vectors.size() != chunk.size()) {
      throw ProtocolError("encoder returned " + std::to_string(vectors.size()) + " vectors for " +
                          std::to_string(chunk.size()) + " texts");
    }
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < chunk.size(); ++i) cache_.emplace(chunk[i], std::move(vectors[i]));
  }
}

std::vector<double> EncoderBackend::cached(const std::string& text) const {
  std::lock_guard lock(mutex_);
  return cache_.at(text);
}

double EncoderBackend::score(std::string_view a, std::string_view b) const {
  std::vector<std::string> texts{std::string(a), std::string(b)};
  try {
    ensure_encoded(texts);
  } catch (const EncoderUnavailableError&) {
    if (!fallback_) throw;
    ++fallbacks_;
    return fuzzy_.score(a, b);
  }
  return cosine(cached(texts[0]), cached(texts[1]));
}

std::vector<double> EncoderBackend::score_batch(std::string_view query,
                                                std::span<const std::string> candidates) const {
  std::vector<std::string> texts{std::string(query)};
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (text::trim(candidates[i]).empty()) continue;
    texts.push_back(candidates[i]);
    live.push_back(i);
  }
  try {
    ensure_encoded(texts);
  } catch (const EncoderUnavailableError&) {
    if (!fallback_) throw;
    ++fallbacks_;
    return fuzzy_.score_batch(query, candidates);
  }
  const auto qvec = cached(texts[0]);
  const std::size_t dim = qvec.size();
  std::vector<double> rows;
  rows.reserve(live.size() * dim);
  for (std::size_t k = 0; k < live.size(); ++k) {
    auto v = cached(texts[k + 1]);
    if (v.size() != dim) throw ProtocolError("encoder vectors have inconsistent dimensions");
    rows.insert(rows.end(), v.begin(), v.end());
  }
  std::vector<double> scores(live.size());
  kernels::cosine_scores(qvec, rows, dim, scores);
  std::vector<double> out(candidates.size(), 0.0);
  for (std::size_t k = 0; k < live.size(); ++k) out[live[k]] = scores[k];
  return out;
}

}  // namespace sqlsketch
