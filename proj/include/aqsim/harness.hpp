#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "aqsim/mpqc.hpp"

namespace aqsim {

// Monte-Carlo driver around the protocol stack: scenario configs scripted
// from JSON, a table-driven adversary bound to the named hook points, a
// synchronous round scheduler enforcing single ownership of quantum
// registers, per-trial RNG streams split from one master seed, and an
// observer that recomputes the public verdict from the transcript alone.

// ---------------------------------------------------------------------------
// Round scheduler

// Synchronous rounds with ownership bookkeeping.  A message posted in round
// r is deliverable exactly in round r + 1, and a quantum register belongs
// to exactly one party at any time; sending transfers ownership, so a sent
// register cannot be retained.
struct RoundScheduler {
  struct Handoff {
    size_t from = 0, to = 0;
    std::vector<size_t> regs;
  };

  size_t round = 0;

  // Initial distribution of fresh registers (setup step).
  void claim(size_t party, const std::vector<size_t>& regs);
  // Throws std::logic_error naming the register on a violation.
  void assert_owns(size_t party, const std::vector<size_t>& regs) const;
  // Queues a transfer for delivery next round; the sender loses the
  // registers immediately.
  void send(size_t from, size_t to, std::vector<size_t> regs);
  // Queues a classical line for everyone next round.
  void broadcast(nlohmann::json line);
  // Advances the round and delivers everything queued in the previous one.
  struct Delivery {
    std::vector<Handoff> handoffs;
    std::vector<nlohmann::json> lines;
  };
  Delivery advance();

 private:
  std::map<size_t, size_t> owner_;
  std::vector<std::pair<size_t, Handoff>> queued_q_;
  std::vector<std::pair<size_t, nlohmann::json>> queued_c_;
};

// ---------------------------------------------------------------------------
// Table-driven adversary

// One scripted reaction at a hook point.  `kind` selects:
//   pauli-attack       apply `pauli` to the visible registers (single-qubit
//                      form targets regs[reg])
//   report-offset      XOR `offset` into the announcement; for the AQA
//                      report the offset covers r_z | r_x | r_c.  The
//                      special specs "random" / "random-nonzero" sample a
//                      fresh offset per trial
//   drop-message       send nothing (the referee identifies the silence)
//   substitute-input   replace the visible registers by |state⟩^k
//   abort              stop participating at this point (same observable
//                      effect as a drop: refusal)
//   dense-unitary      apply `matrix` to the visible registers
//                      (dense backend only)
struct AdversaryAction {
  std::string kind;
  std::optional<size_t> party;  // restrict to one corrupted party
  PauliOp pauli{0};
  size_t reg = 0;
  BitVec offset{0};
  std::string offset_mode;  // "", "random", "random-nonzero"
  std::string state;        // zero | one | plus | minus
  std::vector<std::complex<double>> matrix;
};

// Static corruption: the corrupted set is fixed before round 0, and only
// hooks fired for corrupted parties act.  The hook-point registry (the only
// valid table keys) is the one documented in mpqc.hpp:
//
//   ie.input  rqc.measure.pre  rqc.measure.report  aqa.pre_send  aqa.report
//
// Every hook first asserts register ownership against the ledger, honest or
// not.
class AdversaryStrategy : public Adversary {
 public:
  std::set<size_t> corrupted;
  std::map<std::string, std::vector<AdversaryAction>> hooks;

  // Per-trial wiring (the driver copies the strategy for each trial).
  RoundScheduler* ledger = nullptr;
  std::optional<BitVec> last_offset;  // offset actually applied, for oracles

  void hook(const std::string& point, HookCtx& ctx) override;
};

// {"corrupted": [2], "hooks": {"aqa.pre_send":
//   {"action": "pauli-attack", "pauli": "+X", "register": 0}}}
// A hook value may also be an array of action objects.
AdversaryStrategy strategy_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Scenario configuration

struct ScenarioConfig {
  std::string scenario;  // display name
  std::string protocol;  // aqa | aqa-trap | ie | rqc | mpqc | ideal-vs-real
  size_t trials = 1;
  uint64_t seed = 0;
  Backend backend = Backend::stabilizer;
  size_t jobs = 1;

  // aqa family
  size_t l = 1, t = 1;
  std::string aqa_input = "epr";  // zero | one | plus | epr

  // share code (mpqc family) or trap structure (aqa-trap)
  CssCode code;

  // mpqc family
  size_t n = 0, thres = 0;
  CircuitIR circuit;
  std::vector<std::string> inputs;  // per party: zero | one | plus

  AdversaryStrategy adversary;
};

// Parses and validates; throws std::invalid_argument with a precise
// message.  Codes are named ("steane", "rep<k>") or inline JSON objects.
ScenarioConfig scenario_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Trial statistics

// Every trial lands in exactly one of the five counters:
//   identified_wrong   the public verdict named an honest party
//   aborts             public abort (all named parties corrupted)
//   identified_correct somebody was named, no abort
//   output_correct     clean completion and the scenario's correctness
//                      check passed
//   accepted           clean completion otherwise — for AQA scenarios this
//                      is the natural bucket (the verdict accepted); for
//                      computation scenarios it means the run was accepted
//                      without the outputs verifying
// Side tallies (not part of the partition): payload Bell checks, the
// range-oracle cross-count for report-offset attacks, per-party
// identification counts, and the real-vs-ideal total variation.
struct TrialStats {
  std::string scenario, protocol;
  size_t trials = 0;
  uint64_t seed = 0;
  size_t accepted = 0;
  size_t identified_correct = 0;
  size_t identified_wrong = 0;
  size_t aborts = 0;
  size_t output_correct = 0;

  size_t payload_checked = 0, payload_intact = 0;
  size_t oracle_checked = 0, oracle_member = 0;
  std::map<std::string, size_t> identified;
  std::optional<double> tv;
  double seconds = 0.0;
};

nlohmann::json stats_to_json(const TrialStats& s);
// Deterministic byte string: the JSON dump without the timing field.
std::string stats_fingerprint(const TrialStats& s);
std::string stats_csv_header();
std::string stats_csv_row(const TrialStats& s);

// ---------------------------------------------------------------------------
// Driver

// Called once per trial, in trial order, when non-null.
using TranscriptSink =
    std::function<void(size_t trial, const std::vector<nlohmann::json>&)>;

// Runs cfg.trials independent trials, trial i on Rng::stream(cfg.seed, i),
// possibly across cfg.jobs threads (results are identical either way).
// Throws std::invalid_argument for config problems and std::logic_error
// when an internal invariant breaks.
TrialStats run_scenario(const ScenarioConfig& cfg,
                        const TranscriptSink& sink = {});

// ---------------------------------------------------------------------------
// Observer

// What an outsider learns from the public transcript alone.
struct ObserverVerdict {
  bool aborted = false;
  std::set<std::string> named;
  bool completed = false;  // saw the public r-out line (computation runs)
  std::string r_out_hex;
  size_t r_out_count = 0;
};

// Recomputes the verdict from transcript lines; malformed input throws
// std::runtime_error("transcript line N: ...").  The JSON-lines overload
// reports the same positions.
ObserverVerdict observer_replay(const std::vector<std::string>& lines);
ObserverVerdict observer_verdict(const std::vector<nlohmann::json>& lines);
ObserverVerdict observer_replay_file(const std::string& path);

}  // namespace aqsim
