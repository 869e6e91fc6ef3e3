#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aqsim/aqa.hpp"
#include "aqsim/qecc.hpp"
#include "aqsim/state.hpp"

namespace aqsim {

// Multi-party computation over shared, trap-padded, Clifford-encrypted
// registers.  A trusted classical referee (the cMPC) owns every key; the
// parties only ever touch ciphertexts.  The pipeline:
//
//   input encoding   each input qubit is teleported into a share code so
//                    party j holds share j, padded with t |0⟩ traps and
//                    encrypted under a per-party Clifford key
//   computation      transversal Clifford gates are pure key updates;
//                    logical measurements swap one block out per party,
//                    measure it, and let the referee cross-check the traps
//   delivery         output shares travel to their receivers through
//                    auditable authentication, so every tampering verdict
//                    is public and names the culprit
//
// Identified parties accumulate in Corr; the run publicly aborts exactly
// when |Corr| exceeds the threshold, otherwise Corr positions are treated
// as share erasures and the outputs are still reconstructed.

// ---------------------------------------------------------------------------
// Circuit description

struct CircuitInstr {
  enum class Kind { gate, measure };
  Kind kind = Kind::gate;
  Gate gate{GateKind::H, 0, 0};  // q0/q1 index logical qubits
  size_t qubit = 0;              // measured logical qubit (measure only)
};

// Logical qubits are numbered with party 1's inputs first, then party 2's,
// ..., then the ancilla block.  Measured qubits feed the public classical
// output in instruction order; the surviving qubits are assigned to
// receivers in order (the first output_sizes[0] to party 1, and so on).
struct CircuitIR {
  std::vector<size_t> input_sizes;
  size_t l_anc = 0;
  std::vector<CircuitInstr> instrs;
  std::vector<size_t> output_sizes;

  size_t parties() const { return input_sizes.size(); }
  size_t logical_total() const;
  size_t measured_total() const;
  std::vector<size_t> input_offsets() const;  // first logical id per party
  // Ids of the unmeasured qubits, in block order (= delivery order).
  std::vector<size_t> surviving() const;

  // Structural checks: sizes consistent, gate qubits live and distinct,
  // measured qubits not reused, single-qubit gates inside the code's
  // transversal set, output sizes matching the survivors.  Throws
  // std::invalid_argument with a precise message.
  void validate(const CssCode& code) const;
};

// {"inputs": [1,1], "ancilla": 0, "outputs": [0,1],
//  "instructions": [["CNOT", 0, 1], ["measure", 0]]}
CircuitIR circuit_from_json(const nlohmann::json& j);
nlohmann::json circuit_to_json(const CircuitIR& c);

// ---------------------------------------------------------------------------
// Adversary hooks

// The protocols call out to an Adversary at fixed, named points; the base
// class does nothing, which is the honest run.  Points and their context:
//
//   "ie.input"            regs = the party's input plaintext, pre-teleport
//   "rqc.measure.pre"     regs = the swapped-out block, pre-measurement
//   "rqc.measure.report"  bits = the announcement about to be sent
//   "aqa.pre_send"        regs = the outgoing chunk, peer = receiver
//   "aqa.report"          report = the teleportation announcement
//
// Setting drop at "rqc.measure.report" or "aqa.pre_send" makes the party
// send nothing; the referee treats silence as refusal and identifies it.
struct HookCtx {
  QuantumState* st = nullptr;
  Rng* rng = nullptr;
  size_t party = 0;  // acting party, global id
  size_t peer = 0;   // receiver, delivery hooks only
  std::vector<size_t> regs;
  AqaReport* report = nullptr;
  BitVec* bits = nullptr;
  bool drop = false;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual void hook(const std::string& point, HookCtx& ctx);
};

// Shared no-op instance.
Adversary& honest_adversary();

// ---------------------------------------------------------------------------
// Referee state

struct MpqcConfig {
  size_t n = 0;      // share holders; must equal code->q
  size_t t = 0;      // traps per share
  size_t thres = 0;  // tolerated corruptions: abort iff |Corr| > thres
  const CssCode* code = nullptr;
};

struct CmpcParty {
  CliffordOp key;            // plain frame = key† · ciphertext
  std::vector<size_t> regs;  // ciphertext registers, one (1+t) block per
                             // live logical qubit, in `live` order
};

struct CmpcState {
  MpqcConfig cfg;
  std::vector<size_t> members;   // global ids of the share holders
  std::vector<CmpcParty> party;  // indexed like members
  std::vector<size_t> live;      // unmeasured logical qubits, block order
  std::set<size_t> corr;         // identified parties, global ids
  bool aborted = false;
  size_t round = 0;
  BitVec r_out{0};  // decoded measurement bits, instruction order
  std::vector<nlohmann::json> transcript;

  std::string name(size_t global_id) const;
  bool corrupted(size_t local) const { return corr.count(members[local]) > 0; }

  // Appends {"round", "sender", "type", "payload"} to the transcript.
  void publish(const std::string& sender, const std::string& type,
               nlohmann::json payload);
  // Puts a party into Corr (idempotent), publishes the verdict, and declares
  // the public abort the moment |Corr| > thres.
  void identify(size_t global_id);
};

// members empty = parties 0..n-1.  Throws on n != code->q, thres ≥ d.
CmpcState cmpc_init(const MpqcConfig& cfg, std::vector<size_t> members = {});

// ---------------------------------------------------------------------------
// Input encoding

struct IePortals {
  // Teleportation portals per global party (empty unless it is a member
  // with inputs); entry i holds the ℓ_i sending halves.
  std::vector<std::vector<size_t>> send;
};

// Allocates the whole encoded world: EPR input portals for members, |0⟩
// defaults for non-member input slots, the ancilla block, the share
// encoding, the traps, and the per-party keys.  Ciphertexts land in
// cmpc.party[j].regs.
IePortals ie_setup(QuantumState& st, const CircuitIR& circuit,
                   CmpcState& cmpc, Rng& rng);

// Teleports the inputs through the portals, publishes every (z, x), and has
// each party apply the referee's conjugated correction.  inputs[i] holds
// global party i's plaintext registers (ignored for non-members and empty
// input slots).
void ie_run(QuantumState& st, const CircuitIR& circuit, IePortals& portals,
            const std::vector<std::vector<size_t>>& inputs, CmpcState& cmpc,
            Adversary& adv, Rng& rng);

// ---------------------------------------------------------------------------
// Redistributed computation

// Transversal logical gate as a pure key update inside the referee; no
// quantum operation happens.  Gate qubits index `live` logical ids.
void rqc_clifford_step(CmpcState& cmpc, const Gate& gate);

// The referee's per-party announcement check.  After stripping the x-mask,
// a block announcement v0 = r ⊕ c^x of a share bit b must read b on the
// share wire and b·c^t on the trap wires, i.e. v0 = b·(1 | c^t).  Returns
// the unique consistent b, or nullopt when no b explains the announcement
// (evidence of tampering).  v0 has 1 + t bits, ct has t.
std::optional<bool> rqc_solve_announcement(const BitVec& v0, const BitVec& ct);

// One logical Z measurement: fresh keys, the measured block swapped out and
// masked, per-party announcements, the referee's consistency check (silence
// or an inconsistent announcement identifies the party), then the erasure-
// aware classical decode.  The bit is appended to cmpc.r_out and published;
// nullopt means the decode was impossible and the run aborted.
std::optional<bool> rqc_measure_step(QuantumState& st, CmpcState& cmpc,
                                     size_t logical, Adversary& adv, Rng& rng);

// Runs every instruction in order; stops early once aborted.
void rqc_run(QuantumState& st, const CircuitIR& circuit, CmpcState& cmpc,
             Adversary& adv, Rng& rng);

// ---------------------------------------------------------------------------
// Best-of-both-worlds run

struct BobwSetup {
  IePortals ie;
  // One authentication instance per (global receiver i, local sender j),
  // created for receivers among the members with output_sizes[i] > 0.
  std::vector<std::vector<AqaPortals>> aqa_portals;
  std::vector<std::vector<AqaSecret>> aqa_secrets;
};

// Input-encoding setup plus the pairwise delivery instances.
BobwSetup bobw_setup(QuantumState& st, const CircuitIR& circuit,
                     CmpcState& cmpc, Rng& rng);

struct BobwResult {
  bool aborted = false;
  std::set<size_t> identified;  // final Corr, global ids
  BitVec r_out{0};
  // Per global party: plaintext output registers (decoded logical qubits).
  std::vector<std::vector<size_t>> outputs;
  std::vector<bool> output_ok;  // delivery + reconstruction succeeded
};

// Encode inputs, run the circuit, re-key and deliver the output shares
// through pairwise auditable authentication, reconstruct with Corr
// positions as erasures.  Never fails silently: the result either carries
// outputs or a public abort naming only identified parties.
BobwResult bobw0_run(QuantumState& st, const CircuitIR& circuit,
                     BobwSetup& setup,
                     const std::vector<std::vector<size_t>>& inputs,
                     CmpcState& cmpc, Adversary& adv, Rng& rng);

// ---------------------------------------------------------------------------
// Hierarchical partition driver

// Preprocessing oracle: nullopt = the group's setup succeeded; otherwise a
// partition of the group into two nonempty halves.  The oracle's contract
// is that honest parties are never separated.
class SwiaOracle {
 public:
  virtual ~SwiaOracle() = default;
  virtual std::optional<std::pair<std::set<size_t>, std::set<size_t>>>
  attempt(const std::set<size_t>& group) = 0;
};

struct PartitionLeaf {
  std::set<size_t> members;
  bool finished = false;
};

struct PartitionTree {
  std::vector<PartitionLeaf> leaves;
};

struct GroupOutcome {
  std::set<size_t> members;
  BobwResult result;
  std::shared_ptr<QuantumState> st;  // the group's world, for inspection
  std::vector<nlohmann::json> transcript;
};

struct HierarchyResult {
  PartitionTree tree;
  size_t oracle_calls = 0;
  std::vector<GroupOutcome> groups;
};

// Prepares global party `party`'s input plaintext in a fresh state.
using InputPrep =
    std::function<std::vector<size_t>(QuantumState&, size_t, Rng&)>;
// Share code for a group of the given size.
using CodeProvider = std::function<CssCode(size_t)>;

// Splits the party set until every leaf's preprocessing succeeds, then runs
// each finished group independently on C_S: members keep their inputs,
// everyone else is replaced by default |0⟩ inputs, and only members receive
// outputs.  Requires private outputs only (output_sizes drive delivery; a
// classical slot measured by the circuit is fine, the r_out of different
// groups is per-group).  Throws std::runtime_error if the oracle ever
// separates two honest parties.
HierarchyResult hierarchy_run(const CircuitIR& circuit, const InputPrep& prep,
                              const CodeProvider& code_for, size_t t,
                              size_t thres, Backend backend, SwiaOracle& swia,
                              Adversary& adv, const std::set<size_t>& honest,
                              Rng& rng);

// ---------------------------------------------------------------------------
// Ideal functionalities (trusted-party pseudocode, behavioral references)

struct IdealAqaResult {
  bool aborted = false;
  std::string named;  // on abort: the sender
  CliffordOp eprime;
};

// Trusted re-authentication: refusal becomes a public abort naming the
// sender, otherwise sigma is re-encrypted in place under a fresh key.
IdealAqaResult ideal_aqa(QuantumState& st, const CliffordOp& e,
                         const std::vector<size_t>& sigma, bool sender_abort,
                         Rng& rng);

struct IdealRqcResult {
  bool aborted = false;
  std::set<size_t> corr;
  BitVec r_out{0};
  std::vector<CliffordOp> keys;  // fresh per-party keys; empty op for Corr
  std::vector<std::vector<size_t>> share_regs;  // encrypted output shares
};

// Trusted evaluation plus re-sharing: inputs are consumed literally (a
// corrupted party substitutes its input by preparing something else),
// abort_parties land in Corr with a ⊥ key, and the public abort happens
// iff |Corr| > cfg.thres.
IdealRqcResult ideal_rqc(QuantumState& st, const CircuitIR& circuit,
                         const MpqcConfig& cfg,
                         const std::vector<std::vector<size_t>>& inputs,
                         const std::set<size_t>& abort_parties, Rng& rng);

struct IdealMpqcResult {
  bool aborted = false;
  std::string named;  // on abort: the party that refused
  BitVec r_out{0};
  std::vector<std::vector<size_t>> outputs;
};

// Trusted end-to-end evaluation.  abort_party (if set) refuses after
// receiving its output: honest parties then see a public abort naming it
// and no outputs are delivered.
IdealMpqcResult ideal_mpqc(QuantumState& st, const CircuitIR& circuit,
                           const std::vector<std::vector<size_t>>& inputs,
                           std::optional<size_t> abort_party, Rng& rng);

}  // namespace aqsim
