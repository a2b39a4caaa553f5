#include <algorithm>

#include "sqlsketch/kernels.hpp"

namespace sqlsketch::kernels {

LcsPattern::LcsPattern(std::u32string_view pattern)
    : length_(pattern.size()), words_((pattern.size() + 63) / 64), ascii_masks_(128 * words_, 0), zero_(words_, 0) {
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char32_t c = pattern[i];
    const std::uint64_t bit = std::uint64_t{1} << (i % 64);
    if (c < 128) {
      ascii_masks_[c * words_ + i / 64] |= bit;
    } else {
      auto& mask = other_masks_[c];
      if (mask.empty()) mask.assign(words_, 0);
      mask[i / 64] |= bit;
    }
  }
}

const std::uint64_t* LcsPattern::mask_for(char32_t c) const {
  if (c < 128) return ascii_masks_.data() + c * words_;
  auto it = other_masks_.find(c);
  return it == other_masks_.end() ? zero_.data() : it->second.data();
}

std::size_t LcsPattern::lcs_length(std::u32string_view text) const {
  if (length_ == 0 || text.empty()) return 0;
  if (words_ == 1) {
    std::uint64_t v = ~std::uint64_t{0};
    for (char32_t c : text) {
      const std::uint64_t m = *mask_for(c);
      const std::uint64_t u = v & m;
      v = (v + u) | (v & ~m);
    }
    const std::uint64_t live = length_ == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << length_) - 1;
    return static_cast<std::size_t>(__builtin_popcountll(~v & live));
  }
  std::vector<std::uint64_t> v(words_, ~std::uint64_t{0});
  for (char32_t c : text) {
    const std::uint64_t* m = mask_for(c);
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      const std::uint64_t old = v[w];
      const std::uint64_t u = old & m[w];
      const std::uint64_t t = old + carry;
      const std::uint64_t c1 = t < carry ? 1 : 0;
      const std::uint64_t sum = t + u;
      const std::uint64_t c2 = sum < u ? 1 : 0;
      carry = c1 | c2;
      v[w] = sum | (old & ~m[w]);
    }
  }
  std::size_t zeros = 0;
  for (std::size_t w = 0; w < words_; ++w) {
    const std::size_t bits = std::min<std::size_t>(64, length_ - w * 64);
    const std::uint64_t live = bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
    zeros += static_cast<std::size_t>(__builtin_popcountll(~v[w] & live));
  }
  return zeros;
}

double fuzzy_score(std::size_t m, std::size_t n, std::size_t lcs) {
  if (m == 0 || n == 0) return 0.0;
  const double indel = static_cast<double>(m + n - 2 * lcs);
  const double raw = 1.0 - indel / static_cast<double>(std::min(m, n));
  return std::clamp(raw, 0.0, 1.0);
}

}  // namespace sqlsketch::kernels
