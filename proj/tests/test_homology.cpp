#include <gtest/gtest.h>

#include "morsehom/homology.hpp"

namespace morsehom {
namespace {

TEST(BitMatrix, RankOverGF2) {
  BitMatrix m(3, 3);
  // Rows 110, 011, 101: the third is the sum of the first two over GF(2).
  m.set(0, 0, true);
  m.set(0, 1, true);
  m.set(1, 1, true);
  m.set(1, 2, true);
  m.set(2, 0, true);
  m.set(2, 2, true);
  EXPECT_EQ(m.rank(), 2);
  m.set(2, 2, false);
  EXPECT_EQ(m.rank(), 3);
  EXPECT_EQ(BitMatrix(4, 0).rank(), 0);
  EXPECT_EQ(BitMatrix(0, 4).rank(), 0);
}

TEST(BitMatrix, WideRowsAcrossWords) {
  BitMatrix m(2, 130);
  m.set(0, 129, true);
  m.set(1, 129, true);
  m.set(1, 3, true);
  EXPECT_TRUE(m.get(0, 129));
  EXPECT_EQ(m.rank(), 2);
  const BitMatrix sq = m * BitMatrix(130, 1);
  EXPECT_TRUE(sq.is_zero());
  EXPECT_EQ(m.bit_rows()[0].size(), 130u);
  EXPECT_EQ(m.bit_rows()[0][129], '1');
}

TEST(BitMatrix, RankMatchesBruteForceSpanSize) {
  // Oracle: |row span| = 2^rank, counted by enumerating all row subsets.
  NormalSampler rng(substream(12, "bitmatrix"));
  for (int trial = 0; trial < 50; ++trial) {
    BitMatrix m(5, 6);
    std::vector<unsigned> rows(5, 0);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 6; ++c) {
        if (rng.uniform() < 0.4) {
          m.set(r, c, true);
          rows[r] |= 1U << c;
        }
      }
    }
    std::vector<bool> seen(64, false);
    int span = 0;
    for (unsigned mask = 0; mask < 32; ++mask) {
      unsigned v = 0;
      for (int r = 0; r < 5; ++r) {
        if (mask & (1U << r)) v ^= rows[r];
      }
      if (!seen[v]) {
        seen[v] = true;
        ++span;
      }
    }
    EXPECT_EQ(1 << m.rank(), span);
  }
}

std::vector<GradedPoint> double_well_points() {
  return {{0, 0, 0.0, false}, {1, 0, 0.0, false}, {2, 1, 1.0, false}};
}

TEST(MorseComplex, SingleMinimum) {
  const auto mc = build_morse_complex({{0, 0, 0.0, false}}, {});
  EXPECT_TRUE(d_squared_zero(mc));
  EXPECT_EQ(betti(mc), std::vector<int>{1});
  EXPECT_EQ(mc.boundaries[0].rows(), 0);
}

TEST(MorseComplex, EmptyComplex) {
  const auto mc = build_morse_complex({}, {});
  EXPECT_TRUE(d_squared_zero(mc));
  EXPECT_EQ(betti(mc), std::vector<int>{0});
}

TEST(MorseComplex, DoubleWell) {
  const ParityMap par{{{2, 0}, 1}, {{2, 1}, 1}};
  const auto mc = build_morse_complex(double_well_points(), par);
  ASSERT_EQ(mc.boundaries.size(), 2u);
  EXPECT_EQ(mc.boundaries[1].rows(), 2);
  EXPECT_EQ(mc.boundaries[1].cols(), 1);
  EXPECT_TRUE(mc.boundaries[1].get(0, 0));
  EXPECT_TRUE(mc.boundaries[1].get(1, 0));
  const auto b = betti(mc);
  EXPECT_EQ(b, (std::vector<int>{1, 0}));
  EXPECT_EQ(euler_characteristic(b), 1);
  EXPECT_EQ(b, point_betti(2));
}

TEST(MorseComplex, MissingParityIsIncompleteData) {
  const ParityMap par{{{2, 0}, 1}};
  EXPECT_THROW(build_morse_complex(double_well_points(), par), IncompleteData);
}

TEST(MorseComplex, NonZeroSquareIsIntegrityError) {
  // One index-2 point hitting a single saddle that hits a single minimum.
  const std::vector<GradedPoint> pts{{0, 0, 0.0, false}, {1, 1, 1.0, false}, {2, 2, 2.0, false}};
  const ParityMap par{{{1, 0}, 1}, {{2, 1}, 1}};
  try {
    build_morse_complex(pts, par);
    FAIL();
  } catch (const IntegrityError& e) {
    EXPECT_EQ(e.upper_degree(), 2);
  }
}

TEST(MorseComplex, DegenerateAndSublevelPointsAreExcluded) {
  std::vector<GradedPoint> pts = double_well_points();
  pts.push_back({3, 1, 0.5, true});
  const ParityMap par{{{2, 0}, 1}, {{2, 1}, 1}};
  const auto mc = build_morse_complex(pts, par);
  EXPECT_EQ(mc.generators[1], std::vector<int>{2});
  // P = f^{-1}(-inf, 0.5) removes both minima; the saddle is a relative cycle.
  const auto rel = build_morse_complex(double_well_points(), {}, {0.5});
  EXPECT_TRUE(rel.generators[0].empty());
  EXPECT_EQ(betti(rel), (std::vector<int>{0, 1}));
}

TEST(MorseComplex, LambdaFiftyStructure) {
  // Two minima, two saddles, one index-2 point with the orbit counts found by
  // shooting: each saddle reaches both minima, the top point reaches each
  // saddle once.
  const std::vector<GradedPoint> pts{{0, 0, -14.9, false}, {1, 0, -14.9, false},
                                     {2, 1, -0.03, false}, {3, 1, -0.03, false},
                                     {4, 2, 0.0, false}};
  const ParityMap par{{{2, 0}, 1}, {{2, 1}, 1}, {{3, 0}, 1}, {{3, 1}, 1},
                      {{4, 2}, 1}, {{4, 3}, 1}};
  const auto mc = build_morse_complex(pts, par);
  const auto b = betti(mc);
  EXPECT_EQ(b, (std::vector<int>{1, 0, 0}));
  for (std::size_t k = 0; k < b.size(); ++k) {
    EXPECT_LE(b[k], static_cast<int>(mc.generators[k].size()));
  }
}

}  // namespace
}  // namespace morsehom
