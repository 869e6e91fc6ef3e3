#pragma once

#include <vector>

#include "aqsim/qecc.hpp"
#include "aqsim/state.hpp"

namespace aqsim {

// Clifford-code key: a secret Clifford on l message qubits plus t traps.
struct CliffordKey {
  size_t l = 0, t = 0;
  CliffordOp e;  // on l + t qubits
};

CliffordKey clifford_key(size_t l, size_t t, Rng& rng);

// Trap-code key: QECC encoding of one logical qubit into q = t shares,
// t |0⟩-traps and t |+⟩-traps shuffled by a secret permutation, then a
// Pauli one-time pad. perm maps plain position i to ciphertext position
// perm[i]; pad is applied in ciphertext order.
struct TrapKey {
  const CssCode* code = nullptr;  // q = t
  std::vector<size_t> perm;       // permutation of 3t positions
  PauliOp pad;                    // on 3t qubits

  size_t t() const { return code->q; }
};

TrapKey trap_key(const CssCode& code, Rng& rng);

// The whole trap-code encoder as one Clifford on 3t wires:
// pad ∘ perm ∘ (QECC.Enc ⊗ I^t ⊗ H^t).  Input convention is
// (msg, 0^{t-1}, 0^t, 0^t); the H layer creates the |+⟩ traps.
CliffordOp trap_clifford(const TrapKey& key);

// Decode verdict: on reject the plaintext is ⊥ — the registers are zeroed
// and `plaintext` is empty.
struct AuthVerdict {
  bool accept = false;
  std::vector<size_t> plaintext;
};

// E·(ρ ⊗ 0^t).  traps must hold |0^t⟩ (caller contract).
void c_enc(QuantumState& st, const CliffordKey& key,
           const std::vector<size_t>& msg, const std::vector<size_t>& traps);

// Applies E†, measures the trap block; accepts iff all zero.
AuthVerdict c_dec(QuantumState& st, const CliffordKey& key,
                  const std::vector<size_t>& regs, Rng& rng);

// Trap-code encode over registers (msg ⊕ qecc ancilla ⊕ 0-traps ⊕ +-traps);
// the aux registers must hold |0⟩^{t-1}, |0⟩^t, |+⟩^t.  The permutation is
// realized as transmission order: the returned vector is the ciphertext
// register list (position p holds plain qubit perm⁻¹(p)), padded in place.
std::vector<size_t> t_enc(QuantumState& st, const TrapKey& key,
                          const std::vector<size_t>& msg,
                          const std::vector<size_t>& qecc_anc,
                          const std::vector<size_t>& zero_traps,
                          const std::vector<size_t>& plus_traps);

// Removes the pad and permutation, measures 0-traps in Z and +-traps in X,
// undoes the QECC encoder and measures its ancilla (the full syndrome);
// accepts iff every check bit is zero.
AuthVerdict t_dec(QuantumState& st, const TrapKey& key,
                  const std::vector<size_t>& cipher, Rng& rng);

}  // namespace aqsim
