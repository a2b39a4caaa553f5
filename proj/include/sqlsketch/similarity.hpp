#pragma once

#include <atomic>
#include <filesystem>
#include <istream>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sqlsketch {

enum class BackendKind { CharacterFuzzy, WordEmbedding, SentenceEncoder };

std::string_view to_string(BackendKind kind);

/// Case-insensitive indel similarity, clamped to [0, 1]. Both inputs must be
/// non-empty after trimming (EmptyValueError otherwise).
double fuzzy_similarity(std::string_view a, std::string_view b);

/// Word-vector dictionary: `token v1 ... vD` per line, D taken from line one.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dimension, std::unordered_map<std::string, std::vector<double>> entries);

  static EmbeddingTable load(const std::filesystem::path& path);
  static EmbeddingTable parse(std::istream& in);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<double>* find(std::string_view token) const;

 private:
  std::size_t dimension_;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

/// Lower-cased tokens split on whitespace and ASCII punctuation.
std::vector<std::string> tokenize_value(std::string_view value);

/// Mean of in-vocabulary token vectors; empty when no token is known.
std::vector<double> average_embedding(const EmbeddingTable& table, std::string_view value);

/// Cosine of averaged embeddings, clamped; falls back to fuzzy_similarity
/// when either side has no in-vocabulary token.
double embedding_similarity(std::string_view a, std::string_view b, const EmbeddingTable& table);

/// Anything that turns texts into vectors (the sentence-encoder endpoint).
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  /// One vector per text, same order. Throws EncoderUnavailableError.
  virtual std::vector<std::vector<double>> encode(std::span<const std::string> texts) = 0;
};

/// Cosine of the two encodings, clamped. With fallback, endpoint failure
/// yields fuzzy_similarity instead of EncoderUnavailableError.
double sentence_similarity(std::string_view a, std::string_view b, TextEncoder& encoder,
                           bool fallback_to_fuzzy = false);

/// Pluggable scorer used by calibration. Batch scoring is the hot loop.
class SimilarityBackend {
 public:
  virtual ~SimilarityBackend() = default;
  virtual BackendKind kind() const = 0;
  virtual double score(std::string_view a, std::string_view b) const = 0;
  /// Scores of `query` against each candidate; empty candidates score 0.
  virtual std::vector<double> score_batch(std::string_view query,
                                          std::span<const std::string> candidates) const = 0;
};

class FuzzyBackend final : public SimilarityBackend {
 public:
  BackendKind kind() const override { return BackendKind::CharacterFuzzy; }
  double score(std::string_view a, std::string_view b) const override;
  std::vector<double> score_batch(std::string_view query,
                                  std::span<const std::string> candidates) const override;
};

class EmbeddingBackend final : public SimilarityBackend {
 public:
  explicit EmbeddingBackend(std::shared_ptr<const EmbeddingTable> table);
  BackendKind kind() const override { return BackendKind::WordEmbedding; }
  double score(std::string_view a, std::string_view b) const override;
  std::vector<double> score_batch(std::string_view query,
                                  std::span<const std::string> candidates) const override;

 private:
  std::shared_ptr<const EmbeddingTable> table_;
  FuzzyBackend fuzzy_;
};

/// Caches encodings per text; requests uncached texts in chunks.
class EncoderBackend final : public SimilarityBackend {
 public:
  EncoderBackend(std::shared_ptr<TextEncoder> encoder, bool fallback_to_fuzzy,
                 std::size_t chunk_size = 256);
  BackendKind kind() const override { return BackendKind::SentenceEncoder; }
  double score(std::string_view a, std::string_view b) const override;
  std::vector<double> score_batch(std::string_view query,
                                  std::span<const std::string> candidates) const override;

  /// Number of batches answered by the fuzzy fallback.
  std::size_t fallback_count() const noexcept { return fallbacks_.load(); }

 private:
  void ensure_encoded(std::span<const std::string> texts) const;
  std::vector<double> cached(const std::string& text) const;

  std::shared_ptr<TextEncoder> encoder_;
  bool fallback_;
  std::size_t chunk_size_;
  FuzzyBackend fuzzy_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::vector<double>> cache_;
  mutable std::atomic<std::size_t> fallbacks_{0};
};

}  // namespace sqlsketch
