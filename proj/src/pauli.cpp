#include "aqsim/pauli.hpp"

#include <stdexcept>

namespace aqsim {

PauliOp PauliOp::single(size_t n, size_t q, char letter) {
  PauliOp p(n);
  switch (letter) {
    case 'I':
      break;
    case 'X':
      p.x.set(q, true);
      break;
    case 'Z':
      p.z.set(q, true);
      break;
    case 'Y':  // Y = i·XZ
      p.x.set(q, true);
      p.z.set(q, true);
      p.phase = 1;
      break;
    default:
      throw std::invalid_argument("PauliOp::single: bad letter");
  }
  return p;
}

PauliOp PauliOp::from_xz(const BitVec& xs, const BitVec& zs) {
  assert(xs.size() == zs.size());
  PauliOp p(xs.size());
  p.x = xs;
  p.z = zs;
  return p;
}

PauliOp PauliOp::adjoint() const {
  // (i^p X^x Z^z)† = i^{-p} Z^z X^x = i^{-p} (-1)^{x·z} X^x Z^z.
  PauliOp r = *this;
  r.phase = static_cast<uint8_t>((4 - phase + 2 * (x.dot(z) ? 1 : 0)) & 3);
  return r;
}

PauliOp PauliOp::slice(size_t lo, size_t hi) const {
  PauliOp r(hi - lo);
  r.x = x.slice(lo, hi);
  r.z = z.slice(lo, hi);
  r.phase = phase;
  return r;
}

PauliOp pauli_compose(const PauliOp& a, const PauliOp& b) {
  if (a.n != b.n) throw std::invalid_argument("pauli_compose: size mismatch");
  // (X^x1 Z^z1)(X^x2 Z^z2) = (-1)^{z1·x2} X^{x1+x2} Z^{z1+z2}.
  PauliOp r(a.n);
  r.x = a.x ^ b.x;
  r.z = a.z ^ b.z;
  r.phase =
      static_cast<uint8_t>((a.phase + b.phase + 2 * (a.z.dot(b.x) ? 1 : 0)) & 3);
  return r;
}

PauliOp pauli_tensor(const PauliOp& a, const PauliOp& b) {
  PauliOp r(a.n + b.n);
  r.x = a.x.concat(b.x);
  r.z = a.z.concat(b.z);
  r.phase = (a.phase + b.phase) & 3;
  return r;
}

PauliOp random_pauli(size_t n, Rng& rng) {
  PauliOp p(n);
  p.x = rng.bits(n);
  p.z = rng.bits(n);
  return p;
}

std::string to_string(const PauliOp& p) {
  std::string body(p.n, 'I');
  int ys = 0;
  for (size_t q = 0; q < p.n; ++q) {
    bool xb = p.x.get(q), zb = p.z.get(q);
    if (xb && zb) {
      body[q] = 'Y';
      ++ys;
    } else if (xb) {
      body[q] = 'X';
    } else if (zb) {
      body[q] = 'Z';
    }
  }
  // Letters absorb one i per Y; the prefix carries the remainder.
  static const char* prefix[4] = {"+", "+i", "-", "-i"};
  return std::string(prefix[(p.phase - ys) & 3]) + body;
}

PauliOp pauli_from_string(const std::string& s) {
  size_t at = 0;
  int ph = 0;
  if (at < s.size() && (s[at] == '+' || s[at] == '-')) {
    if (s[at] == '-') ph = 2;
    ++at;
  }
  if (at < s.size() && s[at] == 'i') {
    ph += 1;
    ++at;
  }
  std::string body = s.substr(at);
  PauliOp p(body.size());
  for (size_t q = 0; q < body.size(); ++q) {
    switch (body[q]) {
      case 'I':
        break;
      case 'X':
        p.x.set(q, true);
        break;
      case 'Z':
        p.z.set(q, true);
        break;
      case 'Y':
        p.x.set(q, true);
        p.z.set(q, true);
        ph += 1;
        break;
      default:
        throw std::invalid_argument("pauli_from_string: bad letter");
    }
  }
  p.phase = static_cast<uint8_t>(ph & 3);
  return p;
}

}  // namespace aqsim
