#include <cmath>

#include "sqlsketch/kernels.hpp"

namespace sqlsketch::kernels {

void fuzzy_scores_serial(std::u32string_view query, std::span<const std::u32string> candidates,
                         std::span<double> out) {
  const LcsPattern pattern(query);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    out[i] = fuzzy_score(query.size(), candidates[i].size(), pattern.lcs_length(candidates[i]));
}

void cosine_scores_serial(std::span<const double> query, std::span<const double> rows,
                          std::size_t dim, std::span<double> out) {
  double qnorm = 0.0;
  for (double x : query) qnorm += x * x;
  qnorm = std::sqrt(qnorm);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double dot = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      dot += query[k] * rows[i * dim + k];
      norm += rows[i * dim + k] * rows[i * dim + k];
    }
    double score = 0.0;
    if (qnorm > 0.0 && norm > 0.0) score = dot / (qnorm * std::sqrt(norm));
    out[i] = score < 0.0 ? 0.0 : (score > 1.0 ? 1.0 : score);
  }
}

}  // namespace sqlsketch::kernels
