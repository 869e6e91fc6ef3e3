#pragma once

#include <optional>
#include <vector>

#include "aqsim/bits.hpp"

namespace aqsim {

// Dense GF(2) matrix as a list of BitVec rows. Sized for protocol keys and
// code descriptors (tens of columns), not for bulk linear algebra.
struct GF2Mat {
  std::vector<BitVec> rows;
  size_t cols = 0;

  GF2Mat() = default;
  GF2Mat(size_t r, size_t c) : rows(r, BitVec(c)), cols(c) {}

  static GF2Mat identity(size_t n) {
    GF2Mat m(n, n);
    for (size_t i = 0; i < n; ++i) m.rows[i].set(i, true);
    return m;
  }

  size_t row_count() const { return rows.size(); }

  // y = M x (rows dotted with x).
  BitVec mul(const BitVec& x) const {
    BitVec y(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) y.set(i, rows[i].dot(x));
    return y;
  }

  size_t rank() const {
    GF2Mat m = *this;
    return m.eliminate();
  }

  // In-place row echelon form; returns rank. pivot_of[r] = pivot column of
  // echelon row r when requested.
  size_t eliminate(std::vector<size_t>* pivot_of = nullptr) {
    size_t r = 0;
    for (size_t c = 0; c < cols && r < rows.size(); ++c) {
      size_t p = r;
      while (p < rows.size() && !rows[p].get(c)) ++p;
      if (p == rows.size()) continue;
      std::swap(rows[p], rows[r]);
      for (size_t i = 0; i < rows.size(); ++i)
        if (i != r && rows[i].get(c)) rows[i] ^= rows[r];
      if (pivot_of) pivot_of->push_back(c);
      ++r;
    }
    return r;
  }

  // One solution of M x = b, or nullopt if inconsistent.
  std::optional<BitVec> solve(const BitVec& b) const {
    assert(b.size() == rows.size());
    // Eliminate on the augmented matrix [M | b].
    std::vector<BitVec> aug;
    aug.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      BitVec r = rows[i];
      BitVec e(1);
      e.set(0, b.get(i));
      aug.push_back(r.concat(e));
    }
    std::vector<size_t> pivots;
    size_t r = 0;
    for (size_t c = 0; c < cols && r < aug.size(); ++c) {
      size_t p = r;
      while (p < aug.size() && !aug[p].get(c)) ++p;
      if (p == aug.size()) continue;
      std::swap(aug[p], aug[r]);
      for (size_t i = 0; i < aug.size(); ++i)
        if (i != r && aug[i].get(c)) aug[i] ^= aug[r];
      pivots.push_back(c);
      ++r;
    }
    for (size_t i = r; i < aug.size(); ++i)
      if (aug[i].get(cols)) return std::nullopt;
    BitVec x(cols);
    for (size_t i = 0; i < r; ++i) x.set(pivots[i], aug[i].get(cols));
    return x;
  }

  // Basis of the null space {x : M x = 0}.
  std::vector<BitVec> kernel() const {
    GF2Mat m = *this;
    std::vector<size_t> pivots;
    m.eliminate(&pivots);
    std::vector<bool> is_pivot(cols, false);
    for (size_t c : pivots) is_pivot[c] = true;
    std::vector<BitVec> basis;
    for (size_t c = 0; c < cols; ++c) {
      if (is_pivot[c]) continue;
      BitVec v(cols);
      v.set(c, true);
      for (size_t i = 0; i < pivots.size(); ++i)
        if (m.rows[i].get(c)) v.set(pivots[i], true);
      basis.push_back(v);
    }
    return basis;
  }
};

}  // namespace aqsim
