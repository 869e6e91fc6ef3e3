#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aqsim/authcode.hpp"
#include "aqsim/state.hpp"

namespace aqsim {

// Auditable quantum authentication: a trusted setup hands out entangled
// portals, the sender teleports a ciphertext and measures check traps, a
// classical referee turns the announced bits into a public verdict — either
// a correction Pauli for the receiver or the identity of the cheating
// sender.
//
// Both forms fit one frame.  The key E acts on n = mu + tau wires; in the
// Ẽ†-frame the first mu wires carry the payload block and the last tau
// wires are traps that must read zero.  Clifford form: mu = l, tau = t,
// a single trap mismatch convicts (u_thres = 1).  Trap-code form on a
// distance-d code with q shares: mu = q, tau = 2q, and the referee
// tolerates u < d mismatches, leaving sub-distance noise to the receiver's
// decoder.

// Referee-side secret produced by the setup.
struct AqaSecret {
  size_t mu = 0, tau = 0;  // Ẽ†-frame split: payload block | trap block
  size_t u_thres = 1;      // accept iff u < u_thres
  PauliOp pm, ps, pr;      // one-time pads, on mu + tau qubits
  PauliOp pc;              // checking-portal pad, on tau qubits
  CliffordOp e;            // current authentication key
  CliffordOp eprime;       // fresh key for the receiving portal
  CliffordOp etilde;       // Ẽ = P_M† E
  CliffordOp etilde_inv;   // cached Ẽ†

  size_t n() const { return mu + tau; }
};

// Quantum registers handed to the parties.  One-shot: sending consumes
// them.
struct AqaPortals {
  std::vector<size_t> s;  // sending portal, mu + tau qubits (sender)
  std::vector<size_t> c;  // checking portal, tau qubits (sender)
  std::vector<size_t> r;  // receiving portal, mu + tau qubits (receiver)
  bool consumed = false;
};

// The sender's public announcement.
struct AqaReport {
  BitVec r_z, r_x;  // teleportation outcome, mu + tau bits each
  BitVec r_c;       // checking-portal Z outcome, tau bits
};

// Public verdict.  On identification no key material is released:
// correction and eprime stay empty.
struct AqaVerdict {
  bool accepted = false;
  size_t u = 0;         // trap mismatch count
  PauliOp correction;   // P′ = P_R E′ (P_μ ⊗ I) E′†
  CliffordOp eprime;    // the receiver's new key
  std::string party;    // identified party when !accepted
};

// Clifford form: EPR portals for key E on l + t wires, fresh uniform E′.
std::pair<AqaPortals, AqaSecret> aqa_setup(QuantumState& st, size_t l,
                                           size_t t, const CliffordKey& key,
                                           Rng& rng);

// Trap-code form: key and fresh key both trap-structured over `code`,
// tolerance u_thres = d.
std::pair<AqaPortals, AqaSecret> aqa_setup_trap(QuantumState& st,
                                                const CssCode& code, Rng& rng);

// Sender step: teleport the ciphertext through the sending portal and
// Z-measure the checking portal.  Throws std::logic_error on reuse.
AqaReport aqa_send(QuantumState& st, AqaPortals& portals,
                   const std::vector<size_t>& input, Rng& rng);

// Referee step: strip the classical pads from the report, conjugate the
// announced Pauli into the Ẽ†-frame, count trap mismatches.
AqaVerdict aqa_check(const AqaSecret& secret, const AqaReport& report);

// Receiver step: apply P′† to the receiving portal, leaving E′·(ρ ⊗ 0^tau).
// Throws std::logic_error on an identified verdict.
void aqa_receive(QuantumState& st, const AqaPortals& portals,
                 const AqaVerdict& verdict);

// Membership test for the linear map δ = (β|α) ↦ x(Ẽ† X^α Z^β Ẽ)[mu:].
// v = (β | α | γ), length 2n + tau; true iff γ is the image of δ.
// Acceptance of a report-offset attack is exactly membership of the offset.
bool range_oracle(const CliffordOp& etilde, size_t mu, const BitVec& v);

// Transcript serialization (bit-vectors as hex, nibble j = bits [4j, 4j+4)).
nlohmann::json report_to_json(const AqaReport& report);
AqaReport report_from_json(const nlohmann::json& j, size_t n, size_t tau);
nlohmann::json verdict_to_json(const AqaVerdict& verdict);

}  // namespace aqsim
