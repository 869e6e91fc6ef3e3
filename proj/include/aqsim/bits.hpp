#pragma once

#include <bit>
#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace aqsim {

// Packed GF(2) vector. Bit i lives in word i/64 at position i%64. All
// operations keep the bits past size() zero, so whole-word comparisons and
// popcounts are valid.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(size_t n) : n_(n), w_(word_count(n), 0) {}

  static size_t word_count(size_t n) { return (n + 63) / 64; }

  static BitVec from_string(const std::string& s) {
    BitVec v(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1') {
        v.set(i, true);
      } else if (s[i] != '0') {
        throw std::invalid_argument("BitVec::from_string: bad character");
      }
    }
    return v;
  }

  size_t size() const { return n_; }

  bool get(size_t i) const {
    assert(i < n_);
    return (w_[i >> 6] >> (i & 63)) & 1;
  }

  void set(size_t i, bool b) {
    assert(i < n_);
    uint64_t m = uint64_t{1} << (i & 63);
    if (b) {
      w_[i >> 6] |= m;
    } else {
      w_[i >> 6] &= ~m;
    }
  }

  void flip(size_t i) {
    assert(i < n_);
    w_[i >> 6] ^= uint64_t{1} << (i & 63);
  }

  // Grow-only resize; new bits are zero.
  void resize(size_t n) {
    assert(n >= n_);
    n_ = n;
    w_.resize(word_count(n), 0);
  }

  BitVec& operator^=(const BitVec& o) {
    assert(n_ == o.n_);
    for (size_t k = 0; k < w_.size(); ++k) w_[k] ^= o.w_[k];
    return *this;
  }

  friend BitVec operator^(BitVec a, const BitVec& b) { return a ^= b; }

  bool operator==(const BitVec&) const = default;

  bool any() const {
    for (uint64_t w : w_)
      if (w) return true;
    return false;
  }
  bool none() const { return !any(); }

  size_t popcount() const {
    size_t c = 0;
    for (uint64_t w : w_) c += std::popcount(w);
    return c;
  }

  // Parity of the AND of two vectors (the GF(2) inner product).
  bool dot(const BitVec& o) const {
    assert(n_ == o.n_);
    uint64_t acc = 0;
    for (size_t k = 0; k < w_.size(); ++k) acc ^= w_[k] & o.w_[k];
    return std::popcount(acc) & 1;
  }

  // Bits [lo, hi) as a new vector.
  BitVec slice(size_t lo, size_t hi) const {
    assert(lo <= hi && hi <= n_);
    BitVec out(hi - lo);
    for (size_t i = lo; i < hi; ++i) out.set(i - lo, get(i));
    return out;
  }

  // Writes src into bits [lo, lo + src.size()).
  void assign_slice(size_t lo, const BitVec& src) {
    assert(lo + src.size() <= n_);
    for (size_t i = 0; i < src.size(); ++i) set(lo + i, src.get(i));
  }

  BitVec concat(const BitVec& o) const {
    BitVec out(n_ + o.n_);
    out.assign_slice(0, *this);
    out.assign_slice(n_, o);
    return out;
  }

  std::string to_string() const {
    std::string s(n_, '0');
    for (size_t i = 0; i < n_; ++i)
      if (get(i)) s[i] = '1';
    return s;
  }

  // Hex form used in transcripts: nibble j encodes bits [4j, 4j+4), bit 4j in
  // the nibble's least significant position. ceil(n/4) digits, lowercase.
  std::string to_hex() const {
    static const char* digits = "0123456789abcdef";
    size_t nd = (n_ + 3) / 4;
    std::string s(nd, '0');
    for (size_t j = 0; j < nd; ++j) {
      unsigned v = 0;
      for (size_t b = 0; b < 4; ++b) {
        size_t i = 4 * j + b;
        if (i < n_ && get(i)) v |= 1u << b;
      }
      s[j] = digits[v];
    }
    return s;
  }

  static BitVec from_hex(size_t n, const std::string& s) {
    if (s.size() != (n + 3) / 4)
      throw std::invalid_argument("BitVec::from_hex: length mismatch");
    BitVec v(n);
    for (size_t j = 0; j < s.size(); ++j) {
      char c = s[j];
      unsigned d;
      if (c >= '0' && c <= '9') {
        d = c - '0';
      } else if (c >= 'a' && c <= 'f') {
        d = c - 'a' + 10;
      } else {
        throw std::invalid_argument("BitVec::from_hex: bad digit");
      }
      for (size_t b = 0; b < 4; ++b) {
        size_t i = 4 * j + b;
        if (d & (1u << b)) {
          if (i >= n)
            throw std::invalid_argument("BitVec::from_hex: stray high bits");
          v.set(i, true);
        }
      }
    }
    return v;
  }

  uint64_t word(size_t k) const { return w_[k]; }
  size_t words() const { return w_.size(); }

 private:
  size_t n_ = 0;
  std::vector<uint64_t> w_;
};

}  // namespace aqsim
