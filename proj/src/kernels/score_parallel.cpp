#include <omp.h>

#include <cmath>

#include "sqlsketch/kernels.hpp"

namespace sqlsketch::kernels {

void fuzzy_scores(std::u32string_view query, std::span<const std::u32string> candidates,
                  std::span<double> out) {
  const LcsPattern pattern(query);
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& cand = candidates[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = fuzzy_score(query.size(), cand.size(), pattern.lcs_length(cand));
  }
}

void cosine_scores(std::span<const double> query, std::span<const double> rows, std::size_t dim,
                   std::span<double> out) {
  double qnorm = 0.0;
  for (double x : query) qnorm += x * x;
  qnorm = std::sqrt(qnorm);
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* row = rows.data() + static_cast<std::size_t>(i) * dim;
    double dot = 0.0;
    double norm = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      dot += query[k] * row[k];
      norm += row[k] * row[k];
    }
    double score = 0.0;
    if (qnorm > 0.0 && norm > 0.0) score = dot / (qnorm * std::sqrt(norm));
    out[static_cast<std::size_t>(i)] = score < 0.0 ? 0.0 : (score > 1.0 ? 1.0 : score);
  }
}

}  // namespace sqlsketch::kernels
