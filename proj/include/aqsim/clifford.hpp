#pragma once

#include <string>
#include <vector>

#include "aqsim/pauli.hpp"

namespace aqsim {

// Elementary gate vocabulary shared by circuits, synthesis and both backends.
enum class GateKind { H, S, SDG, X, Z, CNOT };

struct Gate {
  GateKind kind;
  size_t q0 = 0;
  size_t q1 = 0;  // CNOT target; unused otherwise

  bool operator==(const Gate&) const = default;
};

// Names used by config files and transcripts: "H", "S", "SDG", "X", "Z",
// "CNOT". gate_kind_from_string throws std::invalid_argument on others.
const char* gate_kind_name(GateKind k);
GateKind gate_kind_from_string(const std::string& s);

// Clifford operator as the table of conjugated generator images:
// imgs[i] = C X_i C†, imgs[n+i] = C Z_i C†. The images determine C up to
// global phase, which is all the protocols need.
struct CliffordOp {
  size_t n = 0;
  std::vector<PauliOp> imgs;

  CliffordOp() = default;

  static CliffordOp identity(size_t n);
  // Conjugation action of a Pauli operator (sign flips only).
  static CliffordOp from_pauli(const PauliOp& p);
  // Wire permutation: X_i -> X_{perm[i]}, Z_i -> Z_{perm[i]}.
  static CliffordOp permutation(const std::vector<size_t>& perm);
  // Single elementary gate embedded in n wires.
  static CliffordOp from_gate(size_t n, const Gate& g);

  const PauliOp& img_x(size_t i) const { return imgs[i]; }
  const PauliOp& img_z(size_t i) const { return imgs[n + i]; }

  // Checks that the images preserve the generator (anti)commutation pattern,
  // are independent, and carry Hermitian (±1) phases.
  bool valid_symplectic() const;

  bool operator==(const CliffordOp&) const = default;
};

// p <- g p g† for one elementary gate (shared by tableau rows and synthesis).
void conjugate_by_gate(PauliOp& p, const Gate& g);

// c · p · c†, phase included.
PauliOp clifford_conjugate(const CliffordOp& c, const PauliOp& p);

// Composition a∘b: (a∘b)(ρ) = a(b(ρ)).
CliffordOp clifford_compose(const CliffordOp& a, const CliffordOp& b);

CliffordOp clifford_inverse(const CliffordOp& c);

CliffordOp clifford_tensor(const CliffordOp& a, const CliffordOp& b);

// Uniform over the Clifford group modulo global phase; deterministic in rng.
CliffordOp random_clifford(size_t n, Rng& rng);

// Gate sequence realizing c (in application order: element 0 acts first).
// Used to run a tableau-described operator on the dense backend.
std::vector<Gate> clifford_to_circuit(const CliffordOp& c);

// Generator-image table, one line per generator: "X0 -> +XZ" etc.
std::string to_string(const CliffordOp& c);

}  // namespace aqsim
