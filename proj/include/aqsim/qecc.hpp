#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aqsim/gf2.hpp"
#include "aqsim/state.hpp"

namespace aqsim {

// A CSS code on q physical qubits holding one logical qubit, together with
// its encoder tableau and the per-share realization of transversal gates.
// Immutable after construction.
struct CssCode {
  std::string name;
  size_t q = 0;  // physical qubits per logical qubit
  size_t d = 0;  // distance
  GF2Mat hx;     // X-stabilizer supports, one row per generator
  GF2Mat hz;     // Z-stabilizer supports
  BitVec lx;     // logical X support
  BitVec lz;     // logical Z support
  CliffordOp enc;  // maps (logical at position 0) ⊗ |0⟩^{q-1} to the codeword
  // Per-share physical gate realizing a single-qubit logical gate.  CNOT is
  // always realized pairwise between corresponding physical qubits.
  std::map<GateKind, GateKind> transversal;

  size_t max_flips() const { return (d - 1) / 2; }
};

// Parse/serialize the JSON descriptor:
//   {"name": ..., "q": 7, "d": 3,
//    "hx": ["1010101", ...], "hz": [...], "lx": "1111111", "lz": "1111111",
//    "transversal": {"H": "H", "S": "SDG", "SDG": "S"}}
// Throws std::invalid_argument with a precise message on any inconsistency
// (dimension mismatch, non-commuting stabilizers, bad logical operators).
CssCode css_from_json(const nlohmann::json& j);
nlohmann::json css_to_json(const CssCode& code);

// The [[7,1,3]] self-dual code with transversal H, S/S† and CNOT.
CssCode steane();

// GHZ-type share code on q qubits (enc: |b,0..0⟩ ↦ |b..b⟩): distance 1,
// transversal CNOT/X/Z only (plus everything at q = 1).  Lets the share
// protocols run at party counts without a dedicated CSS code.
CssCode repetition_code(size_t q);

// Encode: logical qubit sits at `logical`, `ancilla` holds |0⟩^{q-1}
// (caller contract, not checked).  Afterwards the q qubits
// logical+ancilla (in that order) hold the codeword.
void qecc_encode(QuantumState& st, const CssCode& code,
                 const std::vector<size_t>& logical,
                 const std::vector<size_t>& ancilla);

// Inverse of qecc_encode with error correction: undoes the encoder, reads
// the syndrome off the ancilla, applies the minimum-weight correction if
// one of weight ≤ ⌊(d-1)/2⌋ exists.  Returns false when the syndrome is
// uncorrectable within that budget (state left decoded but uncorrected).
bool qecc_decode(QuantumState& st, const CssCode& code,
                 const std::vector<size_t>& logical,
                 const std::vector<size_t>& ancilla, Rng& rng);

// Decode one logical measurement bit from the q per-share outcomes.
// Erased positions are treated as unknown (every fill is considered), and
// among the consistent explanations with the fewest bit flips on non-erased
// positions the logical value must be unique — otherwise ⊥ (nullopt).
// basis 'z': Z-measurement outcomes (hz/lz); basis 'x': X-measurement (hx/lx).
std::optional<bool> classical_decode(const CssCode& code, const BitVec& word,
                                     const std::vector<size_t>& erasures,
                                     char basis);

// Recovers the logical qubit from a codeword whose shares at the `erased`
// positions were lost (their registers may hold anything; they are measured
// away first).  Requires |erased| ≤ d−1.  Undoes the encoder, reads the
// error pattern off the ancilla, and applies a consistent correction — any
// candidate supported on the erased set works, the ambiguity is a
// stabilizer.  Afterwards shares[0] holds the logical state and the rest
// |0⟩.  Returns false when no candidate explains the pattern (the block was
// corrupted beyond erasures).
bool qecc_erasure_decode(QuantumState& st, const CssCode& code,
                         const std::vector<size_t>& shares,
                         const std::vector<size_t>& erased, Rng& rng);

// Physical gates realizing a logical Clifford gate transversally across
// `blocks` codeword blocks laid out back to back (block b = physical
// positions [b*q, (b+1)*q)).  Throws on gates outside the transversal set.
std::vector<Gate> transversal_physical(const CssCode& code,
                                       const Gate& logical, size_t blocks);

// enc · (p ⊗ I^{q-1}) · enc† for a single-qubit Pauli p: the physical Pauli
// acting on the whole codeword; callers slice it per share.
PauliOp conjugate_through_encoder(const CssCode& code, const PauliOp& p);

}  // namespace aqsim
