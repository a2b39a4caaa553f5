#pragma once

// Candidate-scoring kernels. Every batch kernel has an OpenMP version and a
// serial reference with identical results; tests compare the two and
// bench/ times them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sqlsketch::kernels {

/// Bit-parallel LCS length against a fixed pattern (one bit per pattern
/// position, V' = (V + (V & M)) | (V & ~M)). Build once, query many texts.
class LcsPattern {
 public:
  explicit LcsPattern(std::u32string_view pattern);

  std::size_t size() const noexcept { return length_; }
  std::size_t lcs_length(std::u32string_view text) const;

 private:
  const std::uint64_t* mask_for(char32_t c) const;

  std::size_t length_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> ascii_masks_;  // 128 * words_
  std::unordered_map<char32_t, std::vector<std::uint64_t>> other_masks_;
  std::vector<std::uint64_t> zero_;
};

/// clamp(1 - (m + n - 2 LCS) / min(m, n), 0, 1); 0 when either side is empty.
double fuzzy_score(std::size_t m, std::size_t n, std::size_t lcs);

/// Inputs must already be case-folded.
void fuzzy_scores(std::u32string_view query, std::span<const std::u32string> candidates,
                  std::span<double> out);
void fuzzy_scores_serial(std::u32string_view query, std::span<const std::u32string> candidates,
                         std::span<double> out);

/// Row-major `rows x dim` matrix of vectors; scores are clamp(cos, 0, 1) and
/// 0 for zero-norm rows.
void cosine_scores(std::span<const double> query, std::span<const double> rows, std::size_t dim,
                   std::span<double> out);
void cosine_scores_serial(std::span<const double> query, std::span<const double> rows,
                          std::size_t dim, std::span<double> out);

}  // namespace sqlsketch::kernels
