#pragma once

#include "morsehom/common.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace morsehom {

/// Dense matrix over GF(2), one bitset row per entry.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), words_((cols + 63) / 64),
        bits_(static_cast<std::size_t>(rows) * words_, 0) {
    if (rows < 0 || cols < 0) throw InvalidInput("bit matrix: negative size");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  bool get(int r, int c) const { return (row(r)[c / 64] >> (c % 64)) & 1U; }
  void set(int r, int c, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (c % 64);
    if (v) {
      row(r)[c / 64] |= mask;
    } else {
      row(r)[c / 64] &= ~mask;
    }
  }

  /// Rank by Gaussian elimination on a copy.
  int rank() const {
    BitMatrix m = *this;
    int rank = 0;
    for (int c = 0; c < cols_ && rank < rows_; ++c) {
      int pivot = -1;
      for (int r = rank; r < rows_; ++r) {
        if (m.get(r, c)) {
          pivot = r;
          break;
        }
      }
      if (pivot < 0) continue;
      m.swap_rows(pivot, rank);
      for (int r = 0; r < rows_; ++r) {
        if (r != rank && m.get(r, c)) m.xor_row(r, rank);
      }
      ++rank;
    }
    return rank;
  }

  bool is_zero() const {
    return std::all_of(bits_.begin(), bits_.end(), [](std::uint64_t w) { return w == 0; });
  }

  friend BitMatrix operator*(const BitMatrix& a, const BitMatrix& b) {
    if (a.cols_ != b.rows_) throw InvalidInput("bit matrix: size mismatch in product");
    BitMatrix out(a.rows_, b.cols_);
    for (int r = 0; r < a.rows_; ++r) {
      for (int k = 0; k < a.cols_; ++k) {
        if (!a.get(r, k)) continue;
        for (int w = 0; w < out.words_; ++w) out.row(r)[w] ^= b.row(k)[w];
      }
    }
    return out;
  }

  /// Rows as strings of '0'/'1'.
  std::vector<std::string> bit_rows() const {
    std::vector<std::string> out;
    for (int r = 0; r < rows_; ++r) {
      std::string s(cols_, '0');
      for (int c = 0; c < cols_; ++c) {
        if (get(r, c)) s[c] = '1';
      }
      out.push_back(std::move(s));
    }
    return out;
  }

 private:
  std::uint64_t* row(int r) { return bits_.data() + static_cast<std::size_t>(r) * words_; }
  const std::uint64_t* row(int r) const {
    return bits_.data() + static_cast<std::size_t>(r) * words_;
  }
  void swap_rows(int a, int b) {
    if (a == b) return;
    std::swap_ranges(row(a), row(a) + words_, row(b));
  }
  void xor_row(int dst, int src) {
    for (int w = 0; w < words_; ++w) row(dst)[w] ^= row(src)[w];
  }

  int rows_ = 0;
  int cols_ = 0;
  int words_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Either P is empty or P = f^{-1}(-inf, a).
struct SublevelSpec {
  std::optional<double> threshold;
  bool empty() const { return !threshold.has_value(); }
};

struct GradedPoint {
  int id = -1;
  int index = 0;
  double value = 0.0;
  bool degenerate = false;
};

/// (higher id, lower id) -> number of connecting orbits mod 2.
using ParityMap = std::map<std::pair<int, int>, int>;

struct MorseComplex {
  std::vector<std::vector<int>> generators;  // by degree
  /// boundaries[k] is d_k : C_k -> C_{k-1}; boundaries[0] has zero rows.
  std::vector<BitMatrix> boundaries;
  SublevelSpec P;

  int top_degree() const { return static_cast<int>(generators.size()) - 1; }
};

inline bool d_squared_zero(const MorseComplex& mc) {
  for (std::size_t k = 2; k < mc.boundaries.size(); ++k) {
    if (!(mc.boundaries[k - 1] * mc.boundaries[k]).is_zero()) return false;
  }
  return true;
}

/// Builds the GF(2) complex on the non-degenerate points outside P.
inline MorseComplex build_morse_complex(const std::vector<GradedPoint>& crits,
                                        const ParityMap& parities, const SublevelSpec& P = {}) {
  MorseComplex mc;
  mc.P = P;
  int top = -1;
  for (const auto& cp : crits) {
    if (cp.index < 0) throw InvalidInput("morse complex: negative index");
    if (cp.degenerate) continue;
    if (P.threshold && cp.value < *P.threshold) continue;
    top = std::max(top, cp.index);
  }
  mc.generators.assign(std::max(top + 1, 0), {});
  for (const auto& cp : crits) {
    if (cp.degenerate || (P.threshold && cp.value < *P.threshold)) continue;
    mc.generators[cp.index].push_back(cp.id);
  }
  for (auto& g : mc.generators) std::sort(g.begin(), g.end());
  for (int k = 0; k <= top; ++k) {
    const int rows = k == 0 ? 0 : static_cast<int>(mc.generators[k - 1].size());
    BitMatrix d(rows, static_cast<int>(mc.generators[k].size()));
    for (int c = 0; k > 0 && c < d.cols(); ++c) {
      for (int r = 0; r < rows; ++r) {
        const auto key = std::make_pair(mc.generators[k][c], mc.generators[k - 1][r]);
        const auto it = parities.find(key);
        if (it == parities.end()) {
          throw IncompleteData("morse complex: missing parity for " + std::to_string(key.first) +
                               " -> " + std::to_string(key.second));
        }
        d.set(r, c, (it->second % 2) != 0);
      }
    }
    mc.boundaries.push_back(std::move(d));
  }
  for (std::size_t k = 2; k < mc.boundaries.size(); ++k) {
    if (!(mc.boundaries[k - 1] * mc.boundaries[k]).is_zero()) {
      throw IntegrityError("morse complex: d_" + std::to_string(k - 1) + " o d_" +
                               std::to_string(k) + " != 0",
                           static_cast<int>(k));
    }
  }
  return mc;
}

/// betti_k = |gen_k| - rank d_k - rank d_{k+1}; an empty complex gives {0}.
inline std::vector<int> betti(const MorseComplex& mc) {
  if (mc.generators.empty()) return {0};
  std::vector<int> ranks(mc.boundaries.size() + 1, 0);
  for (std::size_t k = 0; k < mc.boundaries.size(); ++k) ranks[k] = mc.boundaries[k].rank();
  std::vector<int> out;
  for (std::size_t k = 0; k < mc.generators.size(); ++k) {
    out.push_back(static_cast<int>(mc.generators[k].size()) - ranks[k] - ranks[k + 1]);
  }
  return out;
}

inline int euler_characteristic(const std::vector<int>& b) {
  int chi = 0;
  for (std::size_t k = 0; k < b.size(); ++k) chi += (k % 2 == 0 ? 1 : -1) * b[k];
  return chi;
}

/// Homology of a point over GF(2), padded to `degrees` entries.
inline std::vector<int> point_betti(int degrees) {
  std::vector<int> out(std::max(degrees, 1), 0);
  out[0] = 1;
  return out;
}

}  // namespace morsehom
