#include "aqsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "aqsim/aqa.hpp"

namespace aqsim {

// ---------------------------------------------------------------------------
// Round scheduler

void RoundScheduler::claim(size_t party, const std::vector<size_t>& regs) {
  for (size_t r : regs) {
    if (owner_.count(r))
      throw std::logic_error("scheduler: register " + std::to_string(r) +
                             " is already owned");
    owner_[r] = party;
  }
}

void RoundScheduler::assert_owns(size_t party,
                                 const std::vector<size_t>& regs) const {
  for (size_t r : regs) {
    auto it = owner_.find(r);
    if (it == owner_.end() || it->second != party)
      throw std::logic_error("scheduler: party P" + std::to_string(party + 1) +
                             " does not own register " + std::to_string(r));
  }
}

void RoundScheduler::send(size_t from, size_t to, std::vector<size_t> regs) {
  assert_owns(from, regs);
  for (size_t r : regs) owner_.erase(r);  // in flight: the sender lets go
  queued_q_.push_back({round, Handoff{from, to, std::move(regs)}});
}

void RoundScheduler::broadcast(nlohmann::json line) {
  queued_c_.push_back({round, std::move(line)});
}

RoundScheduler::Delivery RoundScheduler::advance() {
  ++round;
  Delivery d;
  auto qit = queued_q_.begin();
  while (qit != queued_q_.end()) {
    if (qit->first + 1 == round) {
      for (size_t r : qit->second.regs) owner_[r] = qit->second.to;
      d.handoffs.push_back(std::move(qit->second));
      qit = queued_q_.erase(qit);
    } else {
      ++qit;
    }
  }
  auto cit = queued_c_.begin();
  while (cit != queued_c_.end()) {
    if (cit->first + 1 == round) {
      d.lines.push_back(std::move(cit->second));
      cit = queued_c_.erase(cit);
    } else {
      ++cit;
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Table-driven adversary

namespace {

const std::set<std::string> kHookPoints = {
    "ie.input", "rqc.measure.pre", "rqc.measure.report", "aqa.pre_send",
    "aqa.report"};
const std::set<std::string> kActionKinds = {
    "pauli-attack", "report-offset",    "drop-message",
    "abort",        "substitute-input", "dense-unitary"};

BitVec resolve_offset(const AdversaryAction& act, size_t len, Rng& rng) {
  if (act.offset_mode == "random") return rng.bits(len);
  if (act.offset_mode == "random-nonzero") return rng.nonzero_bits(len);
  if (act.offset.size() != len)
    throw std::invalid_argument(
        "adversary: report-offset is " + std::to_string(act.offset.size()) +
        " bits but the announcement has " + std::to_string(len));
  return act.offset;
}

void prepare_state(QuantumState& st, const std::vector<size_t>& regs,
                   const std::string& state, Rng& rng) {
  BitVec got = st.measure_z(regs, rng);
  for (size_t i = 0; i < regs.size(); ++i)
    if (got.get(i)) st.apply_gate({GateKind::X, regs[i]});
  for (size_t r : regs) {
    if (state == "one") st.apply_gate({GateKind::X, r});
    if (state == "plus") st.apply_gate({GateKind::H, r});
    if (state == "minus") {
      st.apply_gate({GateKind::X, r});
      st.apply_gate({GateKind::H, r});
    }
  }
}

void apply_action(AdversaryStrategy& self, const AdversaryAction& act,
                  HookCtx& ctx) {
  if (act.kind == "drop-message" || act.kind == "abort") {
    ctx.drop = true;
    return;
  }
  if (act.kind == "pauli-attack") {
    if (ctx.st == nullptr || ctx.regs.empty())
      throw std::invalid_argument(
          "adversary: pauli-attack bound to a hook without registers");
    if (act.pauli.n == 1) {
      if (act.reg >= ctx.regs.size())
        throw std::invalid_argument(
            "adversary: pauli-attack register " + std::to_string(act.reg) +
            " out of range (" + std::to_string(ctx.regs.size()) + " visible)");
      ctx.st->apply_pauli({ctx.regs[act.reg]}, act.pauli);
    } else {
      if (act.pauli.n != ctx.regs.size())
        throw std::invalid_argument(
            "adversary: pauli-attack acts on " + std::to_string(act.pauli.n) +
            " qubits but " + std::to_string(ctx.regs.size()) + " are visible");
      ctx.st->apply_pauli(ctx.regs, act.pauli);
    }
    return;
  }
  if (act.kind == "report-offset") {
    if (ctx.report != nullptr) {
      size_t n = ctx.report->r_z.size(), tau = ctx.report->r_c.size();
      BitVec off = resolve_offset(act, 2 * n + tau, *ctx.rng);
      ctx.report->r_z ^= off.slice(0, n);
      ctx.report->r_x ^= off.slice(n, 2 * n);
      ctx.report->r_c ^= off.slice(2 * n, 2 * n + tau);
      self.last_offset = off;
    } else if (ctx.bits != nullptr) {
      BitVec off = resolve_offset(act, ctx.bits->size(), *ctx.rng);
      *ctx.bits ^= off;
      self.last_offset = off;
    } else {
      throw std::invalid_argument(
          "adversary: report-offset bound to a hook without an announcement");
    }
    return;
  }
  if (act.kind == "substitute-input") {
    if (ctx.st == nullptr || ctx.regs.empty())
      throw std::invalid_argument(
          "adversary: substitute-input bound to a hook without registers");
    prepare_state(*ctx.st, ctx.regs, act.state, *ctx.rng);
    return;
  }
  // dense-unitary
  if (ctx.st == nullptr || ctx.regs.empty())
    throw std::invalid_argument(
        "adversary: dense-unitary bound to a hook without registers");
  ctx.st->apply_unitary_dense(ctx.regs, act.matrix);
}

}  // namespace

void AdversaryStrategy::hook(const std::string& point, HookCtx& ctx) {
  // Ownership linearity is asserted for every party, honest or not.
  if (ledger != nullptr && !ctx.regs.empty())
    ledger->assert_owns(ctx.party, ctx.regs);
  if (!corrupted.count(ctx.party)) return;
  auto it = hooks.find(point);
  if (it == hooks.end()) return;
  for (const AdversaryAction& act : it->second) {
    if (act.party && *act.party != ctx.party) continue;
    apply_action(*this, act, ctx);
  }
}

namespace {

AdversaryAction action_from_json(const std::string& point,
                                 const nlohmann::json& a) {
  if (!a.is_object() || !a.count("action"))
    throw std::invalid_argument("adversary: hook \"" + point +
                                "\" needs an object with an \"action\"");
  AdversaryAction act;
  act.kind = a.at("action").get<std::string>();
  if (!kActionKinds.count(act.kind))
    throw std::invalid_argument("adversary: unknown action '" + act.kind +
                                "'");
  if (a.count("party")) act.party = a.at("party").get<size_t>();
  if (act.kind == "pauli-attack") {
    if (!a.count("pauli"))
      throw std::invalid_argument(
          "adversary: pauli-attack needs a \"pauli\" string");
    std::string p = a.at("pauli").get<std::string>();
    if (p.empty())
      throw std::invalid_argument("adversary: empty pauli string");
    if (p[0] != '+' && p[0] != '-') p = "+" + p;
    act.pauli = pauli_from_string(p);
    act.reg = a.value("register", size_t{0});
  } else if (act.kind == "report-offset") {
    if (!a.count("offset"))
      throw std::invalid_argument(
          "adversary: report-offset needs an \"offset\"");
    std::string o = a.at("offset").get<std::string>();
    if (o == "random" || o == "random-nonzero") {
      act.offset_mode = o;
    } else {
      if (o.find_first_not_of("01") != std::string::npos)
        throw std::invalid_argument(
            "adversary: offset must be a binary string, \"random\" or "
            "\"random-nonzero\"");
      act.offset = BitVec::from_string(o);
    }
  } else if (act.kind == "substitute-input") {
    act.state = a.value("state", std::string("zero"));
    if (act.state != "zero" && act.state != "one" && act.state != "plus" &&
        act.state != "minus")
      throw std::invalid_argument("adversary: substitute-input state '" +
                                  act.state + "' is not zero|one|plus|minus");
  } else if (act.kind == "dense-unitary") {
    if (!a.count("matrix") || !a.at("matrix").is_array())
      throw std::invalid_argument(
          "adversary: dense-unitary needs a \"matrix\" array of [re, im] "
          "rows");
    for (const auto& row : a.at("matrix"))
      for (const auto& cell : row) {
        if (!cell.is_array() || cell.size() != 2)
          throw std::invalid_argument(
              "adversary: matrix entries must be [re, im] pairs");
        act.matrix.emplace_back(cell[0].get<double>(), cell[1].get<double>());
      }
    size_t dim = a.at("matrix").size();
    if (dim == 0 || (dim & (dim - 1)) != 0 || act.matrix.size() != dim * dim)
      throw std::invalid_argument(
          "adversary: matrix must be square with power-of-two dimension");
  }
  return act;
}

}  // namespace

AdversaryStrategy strategy_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw std::invalid_argument("adversary: section must be a JSON object");
  AdversaryStrategy s;
  if (j.count("corrupted"))
    for (const auto& id : j.at("corrupted")) s.corrupted.insert(id.get<size_t>());
  if (j.count("hooks")) {
    if (!j.at("hooks").is_object())
      throw std::invalid_argument("adversary: \"hooks\" must map point ids");
    for (const auto& [point, spec] : j.at("hooks").items()) {
      if (!kHookPoints.count(point))
        throw std::invalid_argument("adversary: unknown hook point '" + point +
                                    "'");
      if (spec.is_array())
        for (const auto& a : spec)
          s.hooks[point].push_back(action_from_json(point, a));
      else
        s.hooks[point].push_back(action_from_json(point, spec));
    }
  }
  if (!s.hooks.empty() && s.corrupted.empty())
    throw std::invalid_argument(
        "adversary: hooks without a corrupted set never fire");
  return s;
}

// ---------------------------------------------------------------------------
// Scenario configuration

namespace {

CssCode parse_code(const nlohmann::json& c) {
  if (c.is_object()) return css_from_json(c);
  if (c.is_string()) {
    std::string s = c.get<std::string>();
    if (s == "steane") return steane();
    if (s.rfind("rep", 0) == 0) {
      size_t q = 0;
      try {
        q = std::stoul(s.substr(3));
      } catch (...) {
        throw std::invalid_argument("scenario: bad share count in '" + s +
                                    "'");
      }
      return repetition_code(q);
    }
    throw std::invalid_argument("scenario: unknown code '" + s +
                                "' (use \"steane\", \"rep<k>\", or an inline "
                                "object)");
  }
  throw std::invalid_argument("scenario: code must be a name or an object");
}

const std::set<std::string> kProtocols = {"aqa", "aqa-trap", "ie",
                                          "rqc", "mpqc",     "ideal-vs-real"};
const std::set<std::string> kAqaInputs = {"zero", "one", "plus", "epr"};
const std::set<std::string> kCompInputs = {"zero", "one", "plus"};

bool aqa_family(const std::string& protocol) {
  return protocol == "aqa" || protocol == "aqa-trap";
}

}  // namespace

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw std::invalid_argument("scenario: config must be a JSON object");
  ScenarioConfig cfg;
  cfg.scenario = j.value("scenario", std::string("unnamed"));
  if (!j.count("protocol"))
    throw std::invalid_argument("scenario: missing \"protocol\"");
  cfg.protocol = j.at("protocol").get<std::string>();
  if (!kProtocols.count(cfg.protocol))
    throw std::invalid_argument("scenario: unknown protocol '" + cfg.protocol +
                                "'");
  cfg.trials = j.value("trials", size_t{1});
  if (cfg.trials == 0)
    throw std::invalid_argument("scenario: trials must be positive");
  cfg.seed = j.value("seed", uint64_t{0});
  std::string backend = j.value("backend", std::string("stabilizer"));
  if (backend == "stabilizer") {
    cfg.backend = Backend::stabilizer;
  } else if (backend == "dense") {
    cfg.backend = Backend::dense;
  } else {
    throw std::invalid_argument("scenario: backend must be stabilizer|dense");
  }
  cfg.jobs = j.value("jobs", size_t{1});
  if (cfg.jobs == 0)
    throw std::invalid_argument("scenario: jobs must be positive");
  if (j.count("adversary")) cfg.adversary = strategy_from_json(j.at("adversary"));

  if (aqa_family(cfg.protocol)) {
    nlohmann::json a = j.value("aqa", nlohmann::json::object());
    cfg.aqa_input = a.value("input", std::string("epr"));
    if (!kAqaInputs.count(cfg.aqa_input))
      throw std::invalid_argument("scenario: aqa input '" + cfg.aqa_input +
                                  "' is not zero|one|plus|epr");
    if (cfg.protocol == "aqa") {
      cfg.l = a.value("l", size_t{1});
      cfg.t = a.value("t", size_t{1});
      if (cfg.l == 0)
        throw std::invalid_argument("scenario: aqa.l must be positive");
      if (cfg.t == 0)
        throw std::invalid_argument("scenario: aqa.t must be positive");
    } else {
      cfg.code =
          parse_code(a.count("code") ? a.at("code") : nlohmann::json("steane"));
      cfg.l = 1;
      cfg.t = 2 * cfg.code.q;
    }
    for (size_t id : cfg.adversary.corrupted)
      if (id != 0)
        throw std::invalid_argument(
            "scenario: only the sender (party 0) can be corrupted in aqa "
            "scenarios");
    return cfg;
  }

  if (!j.count("mpqc"))
    throw std::invalid_argument("scenario: protocol '" + cfg.protocol +
                                "' needs an \"mpqc\" section");
  const nlohmann::json& m = j.at("mpqc");
  cfg.code =
      parse_code(m.count("code") ? m.at("code") : nlohmann::json("steane"));
  cfg.n = m.value("n", cfg.code.q);
  cfg.t = m.value("t", size_t{1});
  cfg.thres = m.value("thres", size_t{0});
  if (cfg.n != cfg.code.q)
    throw std::invalid_argument(
        "scenario: n = " + std::to_string(cfg.n) + " but the code has " +
        std::to_string(cfg.code.q) + " shares");
  if (cfg.thres >= cfg.code.d)
    throw std::invalid_argument(
        "scenario: thres " + std::to_string(cfg.thres) +
        " must be below the code distance " + std::to_string(cfg.code.d));
  if (!m.count("circuit"))
    throw std::invalid_argument("scenario: mpqc needs a \"circuit\"");
  cfg.circuit = circuit_from_json(m.at("circuit"));
  if (cfg.circuit.parties() != cfg.n)
    throw std::invalid_argument(
        "scenario: circuit describes " +
        std::to_string(cfg.circuit.parties()) + " parties, config has " +
        std::to_string(cfg.n));
  cfg.circuit.validate(cfg.code);

  cfg.inputs.assign(cfg.n, "zero");
  if (m.count("inputs")) {
    const auto& in = m.at("inputs");
    if (!in.is_array() || in.size() != cfg.n)
      throw std::invalid_argument("scenario: inputs must list one state per "
                                  "party");
    for (size_t i = 0; i < cfg.n; ++i) {
      cfg.inputs[i] = in[i].get<std::string>();
      if (!kCompInputs.count(cfg.inputs[i]))
        throw std::invalid_argument("scenario: input '" + cfg.inputs[i] +
                                    "' is not zero|one|plus");
    }
  }
  for (size_t id : cfg.adversary.corrupted)
    if (id >= cfg.n)
      throw std::invalid_argument("scenario: corrupted party " +
                                  std::to_string(id) + " is out of range");
  if (cfg.protocol == "ideal-vs-real" && !cfg.adversary.corrupted.empty())
    throw std::invalid_argument(
        "scenario: ideal-vs-real compares honest runs; drop the adversary");
  return cfg;
}

// ---------------------------------------------------------------------------
// Trial machinery

namespace {

enum class Bucket {
  accepted,
  identified_correct,
  identified_wrong,
  abort,
  output_correct
};

struct TrialOut {
  Bucket bucket = Bucket::accepted;
  bool payload_checked = false, payload_intact = false;
  bool oracle_checked = false, oracle_member = false;
  std::set<std::string> names;
  std::string hist_real, hist_ideal;
  std::vector<nlohmann::json> transcript;
};

std::string party_name(size_t id) { return "P" + std::to_string(id + 1); }

std::set<std::string> corrupt_names(const ScenarioConfig& cfg) {
  std::set<std::string> out;
  for (size_t id : cfg.adversary.corrupted) out.insert(party_name(id));
  return out;
}

Bucket classify(const std::set<std::string>& named,
                const std::set<std::string>& corrupt, bool aborted,
                Bucket clean) {
  if (!std::includes(corrupt.begin(), corrupt.end(), named.begin(),
                     named.end()))
    return Bucket::identified_wrong;
  if (aborted) return Bucket::abort;
  if (!named.empty()) return Bucket::identified_correct;
  return clean;
}

bool bell_intact(QuantumState& st, size_t ref, size_t out, Rng& rng) {
  bool xx = st.measure_pauli({ref, out}, pauli_from_string("+XX"), rng);
  bool zz = st.measure_pauli({ref, out}, pauli_from_string("+ZZ"), rng);
  return !xx && !zz;
}

// --- auditable-authentication trials ---------------------------------------

TrialOut run_aqa_trial(const ScenarioConfig& cfg, Rng& rng,
                       bool want_transcript) {
  TrialOut out;
  QuantumState st(cfg.backend);
  RoundScheduler sched;
  AdversaryStrategy adv = cfg.adversary;
  adv.ledger = &sched;
  bool trap = (cfg.protocol == "aqa-trap");
  size_t l = cfg.l;

  std::vector<nlohmann::json> transcript;
  auto publish = [&](const std::string& sender, const std::string& type,
                     nlohmann::json payload) {
    transcript.push_back({{"round", sched.round},
                          {"sender", sender},
                          {"type", type},
                          {"payload", std::move(payload)}});
  };
  auto finish = [&]() {
    out.bucket =
        classify(out.names, corrupt_names(cfg), false, Bucket::accepted);
    ObserverVerdict ov = observer_verdict(transcript);
    if (ov.aborted || ov.named != out.names)
      throw std::logic_error(
          "observer: replay disagrees with the live verdict");
    if (want_transcript) out.transcript = std::move(transcript);
    return out;
  };

  // Round 0: trusted setup distributes portals and the sender authenticates.
  AqaPortals portals;
  AqaSecret secret;
  CliffordKey key;
  if (trap) {
    std::tie(portals, secret) = aqa_setup_trap(st, cfg.code, rng);
  } else {
    key = clifford_key(l, cfg.t, rng);
    std::tie(portals, secret) = aqa_setup(st, l, cfg.t, key, rng);
  }

  std::vector<size_t> refs, msg;
  if (cfg.aqa_input == "epr") {
    auto [r, m] = st.alloc_epr(l);
    refs = r;
    msg = m;
  } else if (cfg.aqa_input == "plus") {
    msg = st.alloc_plus(l);
  } else {
    msg = st.alloc_zeros(l);
    if (cfg.aqa_input == "one")
      for (size_t r : msg) st.apply_gate({GateKind::X, r});
  }
  std::vector<size_t> input = msg;
  if (trap) {
    auto rest = st.alloc_zeros(3 * cfg.code.q - 1);
    input.insert(input.end(), rest.begin(), rest.end());
    st.apply_clifford(input, secret.e);
  } else {
    auto traps = st.alloc_zeros(cfg.t);
    input.insert(input.end(), traps.begin(), traps.end());
    c_enc(st, key, msg, traps);
  }
  sched.claim(0, input);
  sched.claim(0, portals.s);
  sched.claim(0, portals.c);
  sched.claim(1, portals.r);
  publish("cMPC", "setup",
          {{"mu", secret.mu}, {"tau", secret.tau}, {"u_thres", secret.u_thres}});

  // Round 1: the sender teleports and announces.
  sched.advance();
  HookCtx pre;
  pre.st = &st;
  pre.rng = &rng;
  pre.party = 0;
  pre.peer = 1;
  pre.regs = input;
  adv.hook("aqa.pre_send", pre);
  if (pre.drop) {
    publish("cMPC", "aqa-verdict",
            {{"verdict", "identified"}, {"party", party_name(0)}});
    out.names.insert(party_name(0));
    return finish();
  }
  AqaReport rep = aqa_send(st, portals, input, rng);
  HookCtx rctx;
  rctx.st = &st;
  rctx.rng = &rng;
  rctx.party = 0;
  rctx.peer = 1;
  rctx.report = &rep;
  adv.hook("aqa.report", rctx);
  if (rctx.drop) {
    publish("cMPC", "aqa-verdict",
            {{"verdict", "identified"}, {"party", party_name(0)}});
    out.names.insert(party_name(0));
    return finish();
  }
  sched.broadcast(report_to_json(rep));
  publish(party_name(0), "aqa-report", report_to_json(rep));

  // Round 2: the referee checks the report it actually received.
  RoundScheduler::Delivery delivery = sched.advance();
  AqaReport checked =
      report_from_json(delivery.lines.at(0), secret.n(), secret.tau);
  AqaVerdict v = aqa_check(secret, checked);
  nlohmann::json vline = verdict_to_json(v);
  if (!v.accepted) vline["party"] = party_name(0);
  publish("cMPC", "aqa-verdict", vline);

  if (adv.last_offset) {
    out.oracle_checked = true;
    out.oracle_member =
        range_oracle(secret.etilde, secret.mu, *adv.last_offset);
  }

  if (!v.accepted) {
    out.names.insert(party_name(0));
    return finish();
  }

  // Receiver: correct, strip the fresh key, and audit the payload.
  aqa_receive(st, portals, v);
  st.apply_clifford(portals.r, clifford_inverse(v.eprime));
  std::vector<size_t> rest(portals.r.begin() + l, portals.r.end());
  bool ok = st.measure_z(rest, rng).none();
  std::vector<size_t> payload(portals.r.begin(), portals.r.begin() + l);
  if (cfg.aqa_input == "epr") {
    for (size_t i = 0; i < l; ++i)
      ok = bell_intact(st, refs[i], payload[i], rng) && ok;
  } else if (cfg.aqa_input == "plus") {
    ok = st.measure_x(payload, rng).none() && ok;
  } else {
    BitVec got = st.measure_z(payload, rng);
    ok = (cfg.aqa_input == "one" ? got.popcount() == l : got.none()) && ok;
  }
  out.payload_checked = true;
  out.payload_intact = ok;
  return finish();
}

// --- computation trials -----------------------------------------------------

std::optional<bool> expected_value(const std::string& s) {
  if (s == "zero") return false;
  if (s == "one") return true;
  return std::nullopt;  // plus
}

struct ClassicalTrace {
  std::vector<std::optional<bool>> wire;
  std::vector<std::optional<bool>> bits;
};

ClassicalTrace trace_circuit(const CircuitIR& c,
                             std::vector<std::optional<bool>> init) {
  ClassicalTrace tr;
  tr.wire = std::move(init);
  tr.wire.resize(c.logical_total(), false);  // ancilla block is |0⟩
  for (const CircuitInstr& in : c.instrs) {
    if (in.kind == CircuitInstr::Kind::measure) {
      tr.bits.push_back(tr.wire[in.qubit]);
      continue;
    }
    auto& w = tr.wire;
    switch (in.gate.kind) {
      case GateKind::X:
        if (w[in.gate.q0]) w[in.gate.q0] = !*w[in.gate.q0];
        break;
      case GateKind::H:
        w[in.gate.q0] = std::nullopt;
        break;
      case GateKind::CNOT:
        if (!w[in.gate.q0])
          w[in.gate.q1] = std::nullopt;
        else if (*w[in.gate.q0] && w[in.gate.q1])
          w[in.gate.q1] = !*w[in.gate.q1];
        break;
      default:  // Z, S, SDG fix the computational basis
        break;
    }
  }
  return tr;
}

// Folds scripted input tampering into the expected values so that
// garbage-in-garbage-out runs still verify.
void adjust_for_tampered_inputs(const ScenarioConfig& cfg,
                                std::vector<std::optional<bool>>& vals) {
  auto it = cfg.adversary.hooks.find("ie.input");
  if (it == cfg.adversary.hooks.end()) return;
  std::vector<size_t> offsets = cfg.circuit.input_offsets();
  for (const AdversaryAction& act : it->second) {
    for (size_t p : cfg.adversary.corrupted) {
      if (act.party && *act.party != p) continue;
      if (p >= cfg.n || cfg.circuit.input_sizes[p] == 0) continue;
      size_t base = offsets[p], li = cfg.circuit.input_sizes[p];
      if (act.kind == "substitute-input") {
        std::optional<bool> v;
        if (act.state == "zero") v = false;
        if (act.state == "one") v = true;
        for (size_t k = 0; k < li; ++k) vals[base + k] = v;
      } else if (act.kind == "pauli-attack") {
        if (act.pauli.n == 1) {
          if (act.reg < li && act.pauli.x.get(0) && vals[base + act.reg])
            vals[base + act.reg] = !*vals[base + act.reg];
        } else {
          for (size_t k = 0; k < li && k < act.pauli.n; ++k)
            if (act.pauli.x.get(k) && vals[base + k])
              vals[base + k] = !*vals[base + k];
        }
      } else if (act.kind == "dense-unitary") {
        for (size_t k = 0; k < li; ++k) vals[base + k] = std::nullopt;
      }
    }
  }
}

std::set<std::string> corr_names(const CmpcState& cmpc) {
  std::set<std::string> out;
  for (size_t id : cmpc.corr) out.insert(cmpc.name(id));
  return out;
}

void cross_check_observer(const CmpcState& cmpc) {
  ObserverVerdict ov = observer_verdict(cmpc.transcript);
  if (ov.aborted != cmpc.aborted || ov.named != corr_names(cmpc))
    throw std::logic_error("observer: replay disagrees with the live verdict");
}

TrialOut run_comp_trial(const ScenarioConfig& cfg, Rng& rng,
                        bool want_transcript) {
  TrialOut out;
  CssCode code = cfg.code;
  MpqcConfig mcfg;
  mcfg.n = cfg.n;
  mcfg.t = cfg.t;
  mcfg.thres = cfg.thres;
  mcfg.code = &code;
  QuantumState st(cfg.backend);
  CmpcState cmpc = cmpc_init(mcfg);
  RoundScheduler sched;
  AdversaryStrategy adv = cfg.adversary;
  adv.ledger = &sched;

  // Plaintext inputs with their classically tracked values.
  std::vector<std::vector<size_t>> inputs(cfg.n);
  std::vector<std::optional<bool>> vals;
  for (size_t i = 0; i < cfg.n; ++i) {
    size_t li = cfg.circuit.input_sizes[i];
    if (li == 0) continue;
    if (cfg.inputs[i] == "plus") {
      inputs[i] = st.alloc_plus(li);
    } else {
      inputs[i] = st.alloc_zeros(li);
      if (cfg.inputs[i] == "one")
        for (size_t r : inputs[i]) st.apply_gate({GateKind::X, r});
    }
    for (size_t k = 0; k < li; ++k)
      vals.push_back(expected_value(cfg.inputs[i]));
    sched.claim(i, inputs[i]);
  }
  adjust_for_tampered_inputs(cfg, vals);
  CircuitIR traced = cfg.circuit;
  if (cfg.protocol == "ie") traced.instrs.clear();  // pre-circuit snapshot
  ClassicalTrace tr = trace_circuit(traced, std::move(vals));

  auto claim_world = [&](const IePortals& portals) {
    for (size_t i = 0; i < portals.send.size(); ++i)
      if (!portals.send[i].empty()) sched.claim(i, portals.send[i]);
    for (size_t j = 0; j < cfg.n; ++j) sched.claim(j, cmpc.party[j].regs);
  };

  auto check_bits = [&](const BitVec& bits) {
    if (bits.size() != tr.bits.size()) return false;
    for (size_t k = 0; k < tr.bits.size(); ++k)
      if (tr.bits[k] && bits.get(k) != *tr.bits[k]) return false;
    return true;
  };

  bool ok = false;
  if (cfg.protocol == "ie") {
    IePortals portals = ie_setup(st, cfg.circuit, cmpc, rng);
    claim_world(portals);
    ie_run(st, cfg.circuit, portals, inputs, cmpc, adv, rng);
    ok = !cmpc.aborted;
    if (ok) {
      // Referee-side audit: strip keys, check traps, reconstruct, compare.
      size_t bs = 1 + cfg.t;
      for (size_t j = 0; j < cfg.n; ++j)
        st.apply_clifford(cmpc.party[j].regs,
                          clifford_inverse(cmpc.party[j].key));
      size_t l = cfg.circuit.logical_total();
      for (size_t g = 0; g < l && ok; ++g) {
        std::vector<size_t> block;
        for (size_t j = 0; j < cfg.n; ++j) {
          block.push_back(cmpc.party[j].regs[g * bs]);
          std::vector<size_t> traps(
              cmpc.party[j].regs.begin() + g * bs + 1,
              cmpc.party[j].regs.begin() + (g + 1) * bs);
          ok = st.measure_z(traps, rng).none() && ok;
        }
        ok = ok && qecc_erasure_decode(st, code, block, {}, rng);
        if (ok && tr.wire[g])
          ok = st.measure_z({block[0]}, rng).get(0) == *tr.wire[g];
      }
    }
  } else if (cfg.protocol == "rqc") {
    IePortals portals = ie_setup(st, cfg.circuit, cmpc, rng);
    claim_world(portals);
    ie_run(st, cfg.circuit, portals, inputs, cmpc, adv, rng);
    rqc_run(st, cfg.circuit, cmpc, adv, rng);
    ok = !cmpc.aborted && check_bits(cmpc.r_out);
  } else {  // mpqc | ideal-vs-real (real side)
    BobwSetup setup = bobw_setup(st, cfg.circuit, cmpc, rng);
    claim_world(setup.ie);
    for (size_t i = 0; i < setup.aqa_portals.size(); ++i)
      for (size_t j = 0; j < setup.aqa_portals[i].size(); ++j) {
        const AqaPortals& p = setup.aqa_portals[i][j];
        sched.claim(cmpc.members[j], p.s);
        sched.claim(cmpc.members[j], p.c);
        sched.claim(i, p.r);
      }
    BobwResult res = bobw0_run(st, cfg.circuit, setup, inputs, cmpc, adv, rng);
    ok = !res.aborted && check_bits(res.r_out);
    if (!res.aborted) {
      std::vector<size_t> surv = cfg.circuit.surviving();
      std::string hist = res.r_out.to_string() + "|";
      size_t off = 0;
      for (size_t i = 0; i < cfg.n; ++i) {
        size_t cnt = cfg.circuit.output_sizes[i];
        if (cnt == 0) continue;
        ok = ok && res.output_ok[i] && res.outputs[i].size() == cnt;
        if (res.outputs[i].size() != cnt) continue;
        for (size_t k = 0; k < cnt; ++k) {
          std::optional<bool> want = tr.wire[surv[off + k]];
          if (cfg.protocol == "ideal-vs-real" || want) {
            bool got = st.measure_z({res.outputs[i][k]}, rng).get(0);
            hist.push_back(got ? '1' : '0');
            if (want) ok = ok && got == *want;
          }
        }
        off += cnt;
      }
      out.hist_real = hist;
    }
  }

  cross_check_observer(cmpc);
  out.names = corr_names(cmpc);
  out.bucket = classify(out.names, corrupt_names(cfg), cmpc.aborted,
                        ok ? Bucket::output_correct : Bucket::accepted);

  // Ideal twin for the distribution comparison.
  if (cfg.protocol == "ideal-vs-real") {
    QuantumState ist(cfg.backend);
    std::vector<std::vector<size_t>> iinputs(cfg.n);
    for (size_t i = 0; i < cfg.n; ++i) {
      size_t li = cfg.circuit.input_sizes[i];
      if (li == 0) continue;
      if (cfg.inputs[i] == "plus") {
        iinputs[i] = ist.alloc_plus(li);
      } else {
        iinputs[i] = ist.alloc_zeros(li);
        if (cfg.inputs[i] == "one")
          for (size_t r : iinputs[i]) ist.apply_gate({GateKind::X, r});
      }
    }
    IdealMpqcResult ir =
        ideal_mpqc(ist, cfg.circuit, iinputs, std::nullopt, rng);
    std::string hist = ir.r_out.to_string() + "|";
    if (!ir.outputs.empty())
      for (size_t i = 0; i < cfg.n; ++i)
        for (size_t r : ir.outputs[i])
          hist.push_back(ist.measure_z({r}, rng).get(0) ? '1' : '0');
    out.hist_ideal = hist;
  }

  if (want_transcript) out.transcript = cmpc.transcript;
  return out;
}

TrialOut run_trial(const ScenarioConfig& cfg, Rng& rng, bool want_transcript) {
  if (aqa_family(cfg.protocol)) return run_aqa_trial(cfg, rng, want_transcript);
  return run_comp_trial(cfg, rng, want_transcript);
}

}  // namespace

// ---------------------------------------------------------------------------
// Driver

TrialStats run_scenario(const ScenarioConfig& cfg, const TranscriptSink& sink) {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<TrialOut> results(cfg.trials);
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  bool want_transcript = static_cast<bool>(sink);

  auto worker = [&]() {
    while (true) {
      size_t i = next.fetch_add(1);
      if (i >= cfg.trials) return;
      try {
        Rng rng = Rng::stream(cfg.seed, i);
        results[i] = run_trial(cfg, rng, want_transcript);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  size_t jobs = std::min(cfg.jobs, cfg.trials);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  TrialStats s;
  s.scenario = cfg.scenario;
  s.protocol = cfg.protocol;
  s.trials = cfg.trials;
  s.seed = cfg.seed;
  std::map<std::string, size_t> hist_real, hist_ideal;
  for (size_t i = 0; i < cfg.trials; ++i) {
    const TrialOut& r = results[i];
    switch (r.bucket) {
      case Bucket::accepted: ++s.accepted; break;
      case Bucket::identified_correct: ++s.identified_correct; break;
      case Bucket::identified_wrong: ++s.identified_wrong; break;
      case Bucket::abort: ++s.aborts; break;
      case Bucket::output_correct: ++s.output_correct; break;
    }
    if (r.payload_checked) {
      ++s.payload_checked;
      if (r.payload_intact) ++s.payload_intact;
    }
    if (r.oracle_checked) {
      ++s.oracle_checked;
      if (r.oracle_member) ++s.oracle_member;
    }
    for (const std::string& name : r.names) ++s.identified[name];
    if (!r.hist_real.empty()) ++hist_real[r.hist_real];
    if (!r.hist_ideal.empty()) ++hist_ideal[r.hist_ideal];
    if (sink) sink(i, r.transcript);
  }
  if (cfg.protocol == "ideal-vs-real") {
    std::set<std::string> keys;
    for (const auto& [k, v] : hist_real) keys.insert(k);
    for (const auto& [k, v] : hist_ideal) keys.insert(k);
    double tv = 0;
    for (const std::string& k : keys) {
      double p = hist_real.count(k) ? double(hist_real[k]) / cfg.trials : 0.0;
      double q =
          hist_ideal.count(k) ? double(hist_ideal[k]) / cfg.trials : 0.0;
      tv += std::abs(p - q);
    }
    s.tv = tv / 2;
  }
  s.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return s;
}

// ---------------------------------------------------------------------------
// Stats serialization

nlohmann::json stats_to_json(const TrialStats& s) {
  nlohmann::json j{
      {"scenario", s.scenario},
      {"protocol", s.protocol},
      {"trials", s.trials},
      {"seed", s.seed},
      {"accepted", s.accepted},
      {"identified_correct", s.identified_correct},
      {"identified_wrong", s.identified_wrong},
      {"aborts", s.aborts},
      {"output_correct", s.output_correct},
      {"payload", {{"checked", s.payload_checked}, {"intact", s.payload_intact}}},
      {"oracle", {{"checked", s.oracle_checked}, {"member", s.oracle_member}}},
      {"identified", s.identified},
      {"seconds", s.seconds}};
  if (s.tv) j["tv"] = *s.tv;
  return j;
}

std::string stats_fingerprint(const TrialStats& s) {
  nlohmann::json j = stats_to_json(s);
  j.erase("seconds");
  return j.dump();
}

std::string stats_csv_header() {
  return "scenario,trials,accepted,identified_correct,identified_wrong,"
         "aborts,output_correct,seconds";
}

std::string stats_csv_row(const TrialStats& s) {
  std::string name = s.scenario;
  std::replace(name.begin(), name.end(), ',', ';');
  char sec[32];
  std::snprintf(sec, sizeof(sec), "%.3f", s.seconds);
  return name + "," + std::to_string(s.trials) + "," +
         std::to_string(s.accepted) + "," +
         std::to_string(s.identified_correct) + "," +
         std::to_string(s.identified_wrong) + "," +
         std::to_string(s.aborts) + "," + std::to_string(s.output_correct) +
         "," + sec;
}

// ---------------------------------------------------------------------------
// Observer

ObserverVerdict observer_verdict(const std::vector<nlohmann::json>& lines) {
  ObserverVerdict v;
  std::optional<size_t> thres;
  bool undecodable = false;
  for (size_t i = 0; i < lines.size(); ++i) {
    auto fail = [&](const std::string& msg) -> void {
      throw std::runtime_error("transcript line " + std::to_string(i + 1) +
                               ": " + msg);
    };
    const nlohmann::json& line = lines[i];
    if (!line.is_object()) fail("not a JSON object");
    for (const char* key : {"round", "sender", "type", "payload"})
      if (!line.count(key)) fail(std::string("missing field \"") + key + "\"");
    std::string type;
    try {
      type = line.at("type").get<std::string>();
      const nlohmann::json& p = line.at("payload");
      if (type == "setup" && p.count("thres"))
        thres = p.at("thres").get<size_t>();
      if (type == "identified") {
        if (!p.count("party")) fail("identified line without a party");
        v.named.insert(p.at("party").get<std::string>());
      }
      if (type == "aqa-verdict" &&
          p.value("verdict", std::string()) == "identified") {
        // Inside a computation run the sender field carries the real name.
        v.named.insert(p.count("sender") ? p.at("sender").get<std::string>()
                                         : p.at("party").get<std::string>());
      }
      if (type == "measure-undecodable") undecodable = true;
      if (type == "abort") {
        if (v.completed) fail("abort after the public output");
        if (v.aborted) fail("second abort");
        v.aborted = true;
        if (p.count("corr"))
          for (const auto& name : p.at("corr"))
            v.named.insert(name.get<std::string>());
        if (thres && v.named.size() <= *thres && !undecodable)
          fail("abort without visible cause");
      }
      if (type == "r-out") {
        if (v.aborted) fail("public output after an abort");
        v.completed = true;
        v.r_out_hex = p.at("bits").get<std::string>();
        v.r_out_count = p.value("count", size_t{0});
      }
    } catch (const nlohmann::json::exception& e) {
      fail(e.what());
    }
  }
  return v;
}

ObserverVerdict observer_replay(const std::vector<std::string>& lines) {
  std::vector<nlohmann::json> parsed;
  parsed.reserve(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    try {
      parsed.push_back(nlohmann::json::parse(lines[i]));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("transcript line " + std::to_string(i + 1) +
                               ": " + e.what());
    }
  }
  return observer_verdict(parsed);
}

ObserverVerdict observer_replay_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("transcript: cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return observer_replay(lines);
}

}  // namespace aqsim
