#pragma once

#include <string>

#include "aqsim/bits.hpp"
#include "aqsim/rng.hpp"

namespace aqsim {

// Phase-tracked Pauli operator i^phase · X^x Z^z (phase mod 4). Qubit index 0
// is the leftmost tensor factor; that ordering convention is global to the
// library (states, tableaus, registers and serializations all share it).
struct PauliOp {
  size_t n = 0;
  BitVec x, z;
  uint8_t phase = 0;  // exponent of i, mod 4

  PauliOp() = default;
  explicit PauliOp(size_t n_) : n(n_), x(n_), z(n_) {}

  static PauliOp identity(size_t n) { return PauliOp(n); }

  // Single-qubit letter embedded at position q; Y is stored as i·XZ.
  static PauliOp single(size_t n, size_t q, char letter);

  // X^xs Z^zs with zero phase.
  static PauliOp from_xz(const BitVec& xs, const BitVec& zs);

  bool is_identity() const { return x.none() && z.none() && phase == 0; }
  bool same_axes(const PauliOp& o) const { return x == o.x && z == o.z; }

  bool commutes_with(const PauliOp& o) const {
    assert(n == o.n);
    return !(x.dot(o.z) ^ z.dot(o.x));
  }

  // True for operators squaring to +I, i.e. a ±1 displayed sign.  Each
  // Y factor contributes one i to the stored phase, so the test is
  // phase parity == |x ∧ z| parity.
  bool is_hermitian() const {
    return ((phase ^ (x.dot(z) ? 1u : 0u)) & 1) == 0;
  }

  PauliOp adjoint() const;

  // Restriction to positions [lo, hi); phase kept on the piece.
  PauliOp slice(size_t lo, size_t hi) const;

  bool operator==(const PauliOp&) const = default;
};

// Operator product a·b with exact phase.
PauliOp pauli_compose(const PauliOp& a, const PauliOp& b);

PauliOp pauli_tensor(const PauliOp& a, const PauliOp& b);

// Uniform over the 4^n (x, z) pairs, phase 0.
PauliOp random_pauli(size_t n, Rng& rng);

// Canonical text form, e.g. "+XIZY", "-iYZ". Phase prefix is one of
// +, -, +i, -i relative to the tensor of {I,X,Y,Z} letters.
std::string to_string(const PauliOp& p);
PauliOp pauli_from_string(const std::string& s);

}  // namespace aqsim
