#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "sqlsketch/kernels.hpp"
#include "sqlsketch/text.hpp"

using namespace sqlsketch;

namespace {

std::string random_word(std::mt19937& rng, std::size_t min_len, std::size_t max_len, char hi = 'z') {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> ch('a', hi);
  std::string s(len(rng), 'a');
  for (auto& c : s) c = static_cast<char>(ch(rng));
  return s;
}

}  // namespace

TEST_CASE("bit-parallel LCS equals the DP table") {
  std::mt19937 rng(11);
  for (int i = 0; i < 2000; ++i) {
    // long patterns cross the 64-bit word boundary
    const auto a = random_word(rng, 1, i % 4 == 0 ? 150 : 20, 'f');
    const auto b = random_word(rng, 0, i % 4 == 0 ? 150 : 20, 'f');
    kernels::LcsPattern p(text::decode_utf8(a));
    CHECK(p.lcs_length(text::decode_utf8(b)) == fixtures::lcs_dp(a, b));
  }
}

TEST_CASE("LCS over non-ASCII code points") {
  kernels::LcsPattern p(U"héllo wörld");
  CHECK(p.lcs_length(U"hello world") == 9);
  CHECK(p.lcs_length(U"wörld") == 5);
}

TEST_CASE("fuzzy score formula") {
  CHECK(kernels::fuzzy_score(5, 8, 5) == doctest::Approx(0.4));
  CHECK(kernels::fuzzy_score(2, 6, 2) == 0.0);
  CHECK(kernels::fuzzy_score(0, 3, 0) == 0.0);
  CHECK(kernels::fuzzy_score(4, 4, 4) == 1.0);
}

TEST_CASE("parallel and serial kernels agree") {
  std::mt19937 rng(5);
  std::vector<std::u32string> cands;
  for (int i = 0; i < 5000; ++i) cands.push_back(text::decode_utf8(random_word(rng, 0, 30)));
  const auto q = text::decode_utf8("timmothy");
  std::vector<double> par(cands.size()), ser(cands.size());
  kernels::fuzzy_scores(q, cands, par);
  kernels::fuzzy_scores_serial(q, cands, ser);
  CHECK(par == ser);

  const std::size_t dim = 16, rows = 3000;
  std::normal_distribution<double> nd;
  std::vector<double> query(dim), m(rows * dim);
  for (auto& x : query) x = nd(rng);
  for (auto& x : m) x = nd(rng);
  std::fill(m.begin(), m.begin() + dim, 0.0);  // zero row
  std::vector<double> cp(rows), cs(rows);
  kernels::cosine_scores(query, m, dim, cp);
  kernels::cosine_scores_serial(query, m, dim, cs);
  CHECK(cp == cs);
  CHECK(cp[0] == 0.0);
  for (double v : cp) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
