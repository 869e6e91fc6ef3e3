#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aqsim/clifford.hpp"
#include "aqsim/pauli.hpp"
#include "aqsim/rng.hpp"

namespace aqsim {

enum class Backend { stabilizer, dense };

// Named, ordered, disjoint qubit-index lists.
class RegisterMap {
 public:
  void define(const std::string& name, std::vector<size_t> idx);
  const std::vector<size_t>& at(const std::string& name) const;
  bool contains(const std::string& name) const;

 private:
  std::map<std::string, std::vector<size_t>> regs_;
};

// Simulated quantum state. The stabilizer form scales to protocol size; the
// dense form is capped at kDenseCap qubits and exists for arbitrary-unitary
// attack experiments and as a numeric cross-check.
//
// Qubits are allocated on demand (alloc_* return the new indices) and start
// in |0>. Qubit 0 is the leftmost tensor factor; for the dense form that is
// the most significant bit of the amplitude index.
class QuantumState {
 public:
  static constexpr size_t kDenseCap = 12;

  explicit QuantumState(Backend kind) : kind_(kind) {}

  Backend kind() const { return kind_; }
  size_t qubit_count() const { return n_; }

  std::vector<size_t> alloc_zeros(size_t k);
  std::vector<size_t> alloc_plus(size_t k);
  // k Bell pairs; returns (first-half indices, second-half indices), with
  // pair i = (first[i], second[i]).
  std::pair<std::vector<size_t>, std::vector<size_t>> alloc_epr(size_t k);

  void apply_gate(const Gate& g);
  // Embeds c on the listed qubits (|idx| == c.n) and applies it.
  void apply_clifford(const std::vector<size_t>& idx, const CliffordOp& c);
  // Applies X^x Z^z (indexed by position within idx); phases are global and
  // therefore dropped.
  void apply_pauli(const std::vector<size_t>& idx, const PauliOp& p);
  // Dense backend only: arbitrary unitary on |idx| qubits, row-major matrix
  // of dimension 2^|idx|, unitarity checked to 1e-10.
  void apply_unitary_dense(const std::vector<size_t>& idx,
                           const std::vector<std::complex<double>>& u);

  // Measures the Hermitian Pauli observable obs embedded on idx; returns the
  // outcome bit b meaning eigenvalue (-1)^b. Collapses the state.
  bool measure_pauli(const std::vector<size_t>& idx, const PauliOp& obs,
                     Rng& rng);
  // Computational-basis measurement of each listed qubit, in list order.
  BitVec measure_z(const std::vector<size_t>& idx, Rng& rng);
  BitVec measure_x(const std::vector<size_t>& idx, Rng& rng);

  // Debug/golden dump of the tableau: destabilizer rows, a separator, then
  // stabilizer rows, each as sign+Pauli string.
  std::string dump_tableau() const;

  const std::vector<std::complex<double>>& amplitudes() const { return amp_; }

  // Internal rows (stabilizer backend).
  const std::vector<PauliOp>& stabilizers() const { return stab_; }

 private:
  friend bool state_equal(const QuantumState& a, const QuantumState& b);

  void grow(size_t k);
  size_t amp_bit(size_t q) const { return n_ - 1 - q; }

  Backend kind_;
  size_t n_ = 0;
  std::vector<PauliOp> destab_, stab_;
  std::vector<std::complex<double>> amp_;
};

struct PrepEntry {
  enum Kind { zeros, plus, epr } kind;
  size_t count;
  std::string name;
  std::string name2;  // second half, epr only
};

// Builds a fresh state with named registers, e.g.
// prepare(Backend::stabilizer, {{PrepEntry::epr, 3, "eS", "eR"}}, ...).
std::pair<QuantumState, RegisterMap> prepare(Backend kind,
                                             const std::vector<PrepEntry>& spec);

// TP.Send: entangles message M into portal S (CNOT M->S, H on M), measures
// both; returns (z from M, x from S).
std::pair<BitVec, BitVec> tp_send(QuantumState& st,
                                  const std::vector<size_t>& regM,
                                  const std::vector<size_t>& regS, Rng& rng);

// TP.Receive: applies (X^x Z^z)† on the receiver register.
void tp_receive(QuantumState& st, const std::vector<size_t>& regR,
                const BitVec& z, const BitVec& x);

// Equality up to global phase. Both states must use the same backend.
bool state_equal(const QuantumState& a, const QuantumState& b);

}  // namespace aqsim
