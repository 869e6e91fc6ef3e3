#include "aqsim/mpqc.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace aqsim {

namespace {

void hermitize(PauliOp& p) { p.phase = p.x.dot(p.z) ? 1 : 0; }

BitVec append_bit(const BitVec& v, bool b) {
  BitVec one(1);
  one.set(0, b);
  return v.concat(one);
}

// Block k of an interleaved (share + t traps) frame starts here.
size_t block_wire(size_t k, size_t t) { return k * (1 + t); }

// Permutation sorting ℓ interleaved blocks into (all shares | all traps).
std::vector<size_t> sort_perm(size_t l, size_t t) {
  std::vector<size_t> perm(l * (1 + t));
  for (size_t k = 0; k < l; ++k) {
    perm[block_wire(k, t)] = k;
    for (size_t w = 0; w < t; ++w) perm[block_wire(k, t) + 1 + w] = l + k * t + w;
  }
  return perm;
}

// Party-local physical realization of a logical gate: the gate lands on the
// share wires of the addressed blocks; which single-qubit gate (if any)
// depends on the party's code position.
std::vector<Gate> party_gates(const CssCode& code, const Gate& logical,
                              size_t block0, size_t block1, size_t pos,
                              size_t t) {
  size_t w0 = block_wire(block0, t);
  switch (logical.kind) {
    case GateKind::CNOT:
      return {{GateKind::CNOT, w0, block_wire(block1, t)}};
    case GateKind::X:
      if (code.lx.get(pos)) return {{GateKind::X, w0}};
      return {};
    case GateKind::Z:
      if (code.lz.get(pos)) return {{GateKind::Z, w0}};
      return {};
    default: {
      auto it = code.transversal.find(logical.kind);
      if (it == code.transversal.end())
        throw std::invalid_argument(
            std::string("rqc: gate ") + gate_kind_name(logical.kind) +
            " is not transversal for " + code.name);
      return {{it->second, w0}};
    }
  }
}

CliffordOp gates_to_clifford(size_t n, const std::vector<Gate>& gates) {
  CliffordOp c = CliffordOp::identity(n);
  for (const Gate& g : gates) c = clifford_compose(CliffordOp::from_gate(n, g), c);
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Circuit description

size_t CircuitIR::logical_total() const {
  return std::accumulate(input_sizes.begin(), input_sizes.end(), l_anc);
}

size_t CircuitIR::measured_total() const {
  size_t k = 0;
  for (const auto& in : instrs)
    if (in.kind == CircuitInstr::Kind::measure) ++k;
  return k;
}

std::vector<size_t> CircuitIR::input_offsets() const {
  std::vector<size_t> off(input_sizes.size(), 0);
  for (size_t i = 1; i < input_sizes.size(); ++i)
    off[i] = off[i - 1] + input_sizes[i - 1];
  return off;
}

std::vector<size_t> CircuitIR::surviving() const {
  std::vector<bool> alive(logical_total(), true);
  for (const auto& in : instrs)
    if (in.kind == CircuitInstr::Kind::measure) alive[in.qubit] = false;
  std::vector<size_t> out;
  for (size_t g = 0; g < alive.size(); ++g)
    if (alive[g]) out.push_back(g);
  return out;
}

void CircuitIR::validate(const CssCode& code) const {
  if (input_sizes.empty())
    throw std::invalid_argument("circuit: needs at least one party");
  if (output_sizes.size() != input_sizes.size())
    throw std::invalid_argument(
        "circuit: output list must cover every party");
  size_t total = logical_total();
  if (total == 0) throw std::invalid_argument("circuit: no logical qubits");
  std::vector<bool> alive(total, true);
  for (const auto& in : instrs) {
    if (in.kind == CircuitInstr::Kind::measure) {
      if (in.qubit >= total)
        throw std::invalid_argument("circuit: measured qubit out of range");
      if (!alive[in.qubit])
        throw std::invalid_argument("circuit: qubit measured twice");
      alive[in.qubit] = false;
      continue;
    }
    const Gate& g = in.gate;
    size_t arity = g.kind == GateKind::CNOT ? 2 : 1;
    if (g.q0 >= total || (arity == 2 && g.q1 >= total))
      throw std::invalid_argument("circuit: gate qubit out of range");
    if (!alive[g.q0] || (arity == 2 && !alive[g.q1]))
      throw std::invalid_argument("circuit: gate on a measured qubit");
    if (arity == 2 && g.q0 == g.q1)
      throw std::invalid_argument("circuit: CNOT needs two distinct qubits");
    if ((g.kind == GateKind::H || g.kind == GateKind::S ||
         g.kind == GateKind::SDG) &&
        code.transversal.find(g.kind) == code.transversal.end())
      throw std::invalid_argument(std::string("circuit: gate ") +
                                  gate_kind_name(g.kind) +
                                  " is not transversal for " + code.name);
  }
  size_t survivors = 0;
  for (bool a : alive) survivors += a;
  size_t assigned =
      std::accumulate(output_sizes.begin(), output_sizes.end(), size_t{0});
  if (assigned != survivors)
    throw std::invalid_argument(
        "circuit: output sizes must cover exactly the unmeasured qubits");
}

CircuitIR circuit_from_json(const nlohmann::json& j) {
  CircuitIR c;
  try {
    c.input_sizes = j.at("inputs").get<std::vector<size_t>>();
    c.l_anc = j.value("ancilla", size_t{0});
    c.output_sizes = j.at("outputs").get<std::vector<size_t>>();
    for (const auto& row : j.at("instructions")) {
      if (!row.is_array() || row.empty() || !row[0].is_string())
        throw std::invalid_argument(
            "circuit: each instruction is [name, qubits...]");
      std::string op = row[0].get<std::string>();
      CircuitInstr in;
      if (op == "measure") {
        if (row.size() != 2)
          throw std::invalid_argument("circuit: measure takes one qubit");
        in.kind = CircuitInstr::Kind::measure;
        in.qubit = row[1].get<size_t>();
      } else {
        in.kind = CircuitInstr::Kind::gate;
        in.gate.kind = gate_kind_from_string(op);
        size_t arity = in.gate.kind == GateKind::CNOT ? 2 : 1;
        if (row.size() != 1 + arity)
          throw std::invalid_argument(std::string("circuit: ") + op +
                                      " takes " + std::to_string(arity) +
                                      " qubit(s)");
        in.gate.q0 = row[1].get<size_t>();
        if (arity == 2) in.gate.q1 = row[2].get<size_t>();
      }
      c.instrs.push_back(in);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("circuit: ") + e.what());
  }
  return c;
}

nlohmann::json circuit_to_json(const CircuitIR& c) {
  nlohmann::json instrs = nlohmann::json::array();
  for (const auto& in : c.instrs) {
    if (in.kind == CircuitInstr::Kind::measure) {
      instrs.push_back({"measure", in.qubit});
    } else if (in.gate.kind == GateKind::CNOT) {
      instrs.push_back({gate_kind_name(in.gate.kind), in.gate.q0, in.gate.q1});
    } else {
      instrs.push_back({gate_kind_name(in.gate.kind), in.gate.q0});
    }
  }
  return {{"inputs", c.input_sizes},
          {"ancilla", c.l_anc},
          {"outputs", c.output_sizes},
          {"instructions", instrs}};
}

// ---------------------------------------------------------------------------
// Adversary hooks

void Adversary::hook(const std::string&, HookCtx&) {}

Adversary& honest_adversary() {
  static Adversary a;
  return a;
}

// ---------------------------------------------------------------------------
// Referee state

std::string CmpcState::name(size_t global_id) const {
  return "P" + std::to_string(global_id + 1);
}

void CmpcState::publish(const std::string& sender, const std::string& type,
                        nlohmann::json payload) {
  transcript.push_back({{"round", round},
                        {"sender", sender},
                        {"type", type},
                        {"payload", std::move(payload)}});
}

void CmpcState::identify(size_t global_id) {
  if (corr.count(global_id)) return;
  corr.insert(global_id);
  publish("cMPC", "identified", {{"party", name(global_id)}});
  if (!aborted && corr.size() > cfg.thres) {
    aborted = true;
    nlohmann::json names = nlohmann::json::array();
    for (size_t id : corr) names.push_back(name(id));
    publish("cMPC", "abort", {{"corr", names}});
  }
}

CmpcState cmpc_init(const MpqcConfig& cfg, std::vector<size_t> members) {
  if (cfg.code == nullptr)
    throw std::invalid_argument("cmpc: missing share code");
  if (cfg.n != cfg.code->q)
    throw std::invalid_argument(
        "cmpc: share holders must match the code's share count");
  if (cfg.thres >= cfg.code->d)
    throw std::invalid_argument(
        "cmpc: threshold exceeds the code's erasure budget (need thres < d)");
  if (members.empty()) {
    members.resize(cfg.n);
    std::iota(members.begin(), members.end(), 0);
  }
  if (members.size() != cfg.n)
    throw std::invalid_argument("cmpc: member list must have n entries");
  std::set<size_t> uniq(members.begin(), members.end());
  if (uniq.size() != members.size())
    throw std::invalid_argument("cmpc: duplicate member");
  CmpcState cmpc;
  cmpc.cfg = cfg;
  cmpc.members = std::move(members);
  cmpc.party.resize(cfg.n);
  return cmpc;
}

// ---------------------------------------------------------------------------
// Input encoding

IePortals ie_setup(QuantumState& st, const CircuitIR& circuit,
                   CmpcState& cmpc, Rng& rng) {
  circuit.validate(*cmpc.cfg.code);
  size_t N = circuit.parties();
  for (size_t id : cmpc.members)
    if (id >= N)
      throw std::invalid_argument("ie: member id outside the circuit");
  const CssCode& code = *cmpc.cfg.code;
  size_t t = cmpc.cfg.t;
  size_t l = circuit.logical_total();
  std::set<size_t> member_set(cmpc.members.begin(), cmpc.members.end());

  IePortals portals;
  portals.send.resize(N);
  std::vector<size_t> plain;
  plain.reserve(l);
  for (size_t i = 0; i < N; ++i) {
    size_t li = circuit.input_sizes[i];
    if (li == 0) continue;
    if (member_set.count(i)) {
      auto [e_s, e_r] = st.alloc_epr(li);
      portals.send[i] = e_s;
      plain.insert(plain.end(), e_r.begin(), e_r.end());
    } else {
      // Default input slot: the referee prepares |0⟩^{ℓ_i} directly.
      auto zeros = st.alloc_zeros(li);
      plain.insert(plain.end(), zeros.begin(), zeros.end());
    }
  }
  auto anc = st.alloc_zeros(circuit.l_anc);
  plain.insert(plain.end(), anc.begin(), anc.end());

  // Share out every logical qubit; code position j belongs to local party j.
  std::vector<std::vector<size_t>> share_of(l);
  for (size_t g = 0; g < l; ++g) {
    auto rest = st.alloc_zeros(code.q - 1);
    qecc_encode(st, code, {plain[g]}, rest);
    share_of[g].push_back(plain[g]);
    share_of[g].insert(share_of[g].end(), rest.begin(), rest.end());
  }

  for (size_t j = 0; j < cmpc.cfg.n; ++j) {
    CmpcParty& pj = cmpc.party[j];
    pj.regs.clear();
    for (size_t g = 0; g < l; ++g) {
      pj.regs.push_back(share_of[g][j]);
      auto traps = st.alloc_zeros(t);
      pj.regs.insert(pj.regs.end(), traps.begin(), traps.end());
    }
    PauliOp pad = random_pauli(l * (1 + t), rng);
    CliffordOp e = random_clifford(l * (1 + t), rng);
    pj.key = clifford_compose(CliffordOp::from_pauli(pad), e);
    st.apply_clifford(pj.regs, pj.key);
  }

  cmpc.live.resize(l);
  std::iota(cmpc.live.begin(), cmpc.live.end(), 0);
  cmpc.publish("cMPC", "setup",
               {{"parties", cmpc.cfg.n},
                {"qubits", l},
                {"traps", t},
                {"thres", cmpc.cfg.thres}});
  return portals;
}

void ie_run(QuantumState& st, const CircuitIR& circuit, IePortals& portals,
            const std::vector<std::vector<size_t>>& inputs, CmpcState& cmpc,
            Adversary& adv, Rng& rng) {
  size_t N = circuit.parties();
  if (inputs.size() != N)
    throw std::invalid_argument("ie: input list must cover every party");
  const CssCode& code = *cmpc.cfg.code;
  size_t t = cmpc.cfg.t;
  size_t l = circuit.logical_total();
  std::set<size_t> member_set(cmpc.members.begin(), cmpc.members.end());
  auto offsets = circuit.input_offsets();
  cmpc.round++;

  std::vector<PauliOp> fix(cmpc.cfg.n, PauliOp(l * (1 + t)));
  for (size_t i = 0; i < N; ++i) {
    size_t li = circuit.input_sizes[i];
    if (li == 0 || !member_set.count(i)) continue;
    if (inputs[i].size() != li)
      throw std::invalid_argument("ie: input register count mismatch");

    HookCtx ctx;
    ctx.st = &st;
    ctx.rng = &rng;
    ctx.party = i;
    ctx.regs = inputs[i];
    adv.hook("ie.input", ctx);

    auto [z, x] = tp_send(st, inputs[i], portals.send[i], rng);
    cmpc.publish(cmpc.name(i), "teleport",
                 {{"z", z.to_hex()}, {"x", x.to_hex()}});
    for (size_t m = 0; m < li; ++m) {
      PauliOp p1(1);
      p1.x.set(0, x.get(m));
      p1.z.set(0, z.get(m));
      hermitize(p1);
      PauliOp phys = conjugate_through_encoder(code, p1);
      size_t w = block_wire(offsets[i] + m, t);
      for (size_t j = 0; j < cmpc.cfg.n; ++j) {
        fix[j].x.set(w, phys.x.get(j));
        fix[j].z.set(w, phys.z.get(j));
      }
    }
  }
  for (size_t j = 0; j < cmpc.cfg.n; ++j) {
    if (cmpc.corrupted(j)) continue;
    hermitize(fix[j]);
    PauliOp corr = clifford_conjugate(cmpc.party[j].key, fix[j]);
    st.apply_pauli(cmpc.party[j].regs, corr);
  }
}

// ---------------------------------------------------------------------------
// Redistributed computation

void rqc_clifford_step(CmpcState& cmpc, const Gate& gate) {
  size_t pos0 = 0, pos1 = 0;
  auto find_block = [&](size_t logical) {
    auto it = std::find(cmpc.live.begin(), cmpc.live.end(), logical);
    if (it == cmpc.live.end())
      throw std::invalid_argument("rqc: gate on a measured qubit");
    return size_t(it - cmpc.live.begin());
  };
  pos0 = find_block(gate.q0);
  if (gate.kind == GateKind::CNOT) pos1 = find_block(gate.q1);
  size_t t = cmpc.cfg.t;
  size_t n_w = cmpc.live.size() * (1 + t);
  cmpc.round++;
  for (size_t j = 0; j < cmpc.cfg.n; ++j) {
    if (cmpc.corrupted(j)) continue;
    auto gates = party_gates(*cmpc.cfg.code, gate, pos0, pos1, j, t);
    CliffordOp g = gates_to_clifford(n_w, gates);
    cmpc.party[j].key = clifford_compose(cmpc.party[j].key, clifford_inverse(g));
  }
  nlohmann::json qubits = nlohmann::json::array();
  qubits.push_back(gate.q0);
  if (gate.kind == GateKind::CNOT) qubits.push_back(gate.q1);
  cmpc.publish("cMPC", "gate",
               {{"gate", gate_kind_name(gate.kind)}, {"qubits", qubits}});
}

std::optional<bool> rqc_solve_announcement(const BitVec& v0,
                                           const BitVec& ct) {
  if (v0.size() != ct.size() + 1)
    throw std::invalid_argument(
        "rqc: announcement and trap key must be t+1 and t bits");
  if (v0.none()) return false;  // b = 0 leaves every wire at zero
  BitVec expect(v0.size());
  expect.set(0, true);
  for (size_t i = 0; i < ct.size(); ++i) expect.set(1 + i, ct.get(i));
  if (v0 == expect) return true;  // b = 1 shows up on the CNOT fan-out
  return std::nullopt;
}

std::optional<bool> rqc_measure_step(QuantumState& st, CmpcState& cmpc,
                                     size_t logical, Adversary& adv,
                                     Rng& rng) {
  auto it = std::find(cmpc.live.begin(), cmpc.live.end(), logical);
  if (it == cmpc.live.end())
    throw std::invalid_argument("rqc: qubit already measured");
  size_t pos = it - cmpc.live.begin();
  size_t t = cmpc.cfg.t;
  size_t l = cmpc.live.size();
  size_t rest = (l - 1) * (1 + t);
  cmpc.round++;

  // Content of block `pos` moves to the tail, later blocks shift down.
  std::vector<size_t> perm(l * (1 + t));
  for (size_t w = 0; w < perm.size(); ++w) {
    size_t b = w / (1 + t), off = w % (1 + t);
    size_t nb = b < pos ? b : (b == pos ? l - 1 : b - 1);
    perm[w] = nb * (1 + t) + off;
  }

  BitVec word(cmpc.cfg.n);
  std::vector<size_t> erasures;
  for (size_t j = 0; j < cmpc.cfg.n; ++j) {
    if (cmpc.aborted) return std::nullopt;
    if (cmpc.corrupted(j)) {
      erasures.push_back(j);
      continue;
    }
    BitVec cz = rng.bits(1 + t), cx = rng.bits(1 + t), ct = rng.bits(t);
    CliffordOp q = CliffordOp::identity(1 + t);
    for (size_t i = 0; i < t; ++i)
      if (ct.get(i))
        q = clifford_compose(
            CliffordOp::from_gate(1 + t, {GateKind::CNOT, 0, 1 + i}), q);
    PauliOp mask(1 + t);
    mask.x = cx;
    mask.z = cz;
    hermitize(mask);
    q = clifford_compose(CliffordOp::from_pauli(mask), q);

    CliffordOp eprime =
        rest > 0 ? random_clifford(rest, rng) : CliffordOp::identity(0);
    CliffordOp head = rest > 0 ? clifford_tensor(eprime, q) : q;
    CliffordOp v = clifford_compose(
        head, clifford_compose(CliffordOp::permutation(perm),
                               clifford_inverse(cmpc.party[j].key)));
    st.apply_clifford(cmpc.party[j].regs, v);
    cmpc.party[j].key = eprime;
    std::vector<size_t> tau(cmpc.party[j].regs.end() - (1 + t),
                            cmpc.party[j].regs.end());

    HookCtx pre;
    pre.st = &st;
    pre.rng = &rng;
    pre.party = cmpc.members[j];
    pre.regs = tau;
    adv.hook("rqc.measure.pre", pre);

    BitVec r = st.measure_z(tau, rng);
    HookCtx rep;
    rep.st = &st;
    rep.rng = &rng;
    rep.party = cmpc.members[j];
    rep.regs = tau;
    rep.bits = &r;
    adv.hook("rqc.measure.report", rep);

    cmpc.party[j].regs.resize(rest);
    if (rep.drop) {
      cmpc.publish(cmpc.name(cmpc.members[j]), "refuse",
                   {{"qubit", logical}});
      cmpc.identify(cmpc.members[j]);
      erasures.push_back(j);
      continue;
    }
    cmpc.publish(cmpc.name(cmpc.members[j]), "block-measure",
                 {{"qubit", logical}, {"bits", r.to_hex()}});

    auto bj = rqc_solve_announcement(r ^ cx, ct);
    if (bj) {
      word.set(j, *bj);
    } else {
      cmpc.identify(cmpc.members[j]);
      erasures.push_back(j);
    }
  }
  if (cmpc.aborted) return std::nullopt;
  cmpc.live.erase(cmpc.live.begin() + pos);

  auto b = classical_decode(*cmpc.cfg.code, word, erasures, 'z');
  if (!b) {
    cmpc.publish("cMPC", "measure-undecodable", {{"qubit", logical}});
    if (!cmpc.aborted) {
      cmpc.aborted = true;
      nlohmann::json names = nlohmann::json::array();
      for (size_t id : cmpc.corr) names.push_back(cmpc.name(id));
      cmpc.publish("cMPC", "abort", {{"corr", names}});
    }
    return std::nullopt;
  }
  cmpc.r_out = append_bit(cmpc.r_out, *b);
  cmpc.publish("cMPC", "measure", {{"qubit", logical}, {"bit", *b}});
  return b;
}

void rqc_run(QuantumState& st, const CircuitIR& circuit, CmpcState& cmpc,
             Adversary& adv, Rng& rng) {
  for (const auto& in : circuit.instrs) {
    if (cmpc.aborted) return;
    if (in.kind == CircuitInstr::Kind::gate)
      rqc_clifford_step(cmpc, in.gate);
    else
      rqc_measure_step(st, cmpc, in.qubit, adv, rng);
  }
}

// ---------------------------------------------------------------------------
// Best-of-both-worlds run

BobwSetup bobw_setup(QuantumState& st, const CircuitIR& circuit,
                     CmpcState& cmpc, Rng& rng) {
  BobwSetup setup;
  setup.ie = ie_setup(st, circuit, cmpc, rng);
  size_t N = circuit.parties();
  size_t t = cmpc.cfg.t;
  std::set<size_t> member_set(cmpc.members.begin(), cmpc.members.end());
  setup.aqa_portals.resize(N);
  setup.aqa_secrets.resize(N);
  for (size_t i = 0; i < N; ++i) {
    size_t li = circuit.output_sizes[i];
    if (li == 0 || !member_set.count(i)) continue;
    setup.aqa_portals[i].resize(cmpc.cfg.n);
    setup.aqa_secrets[i].resize(cmpc.cfg.n);
    for (size_t j = 0; j < cmpc.cfg.n; ++j) {
      CliffordKey key = clifford_key(li, li * t, rng);
      auto [portals, secret] = aqa_setup(st, li, li * t, key, rng);
      setup.aqa_portals[i][j] = std::move(portals);
      setup.aqa_secrets[i][j] = std::move(secret);
    }
  }
  return setup;
}

BobwResult bobw0_run(QuantumState& st, const CircuitIR& circuit,
                     BobwSetup& setup,
                     const std::vector<std::vector<size_t>>& inputs,
                     CmpcState& cmpc, Adversary& adv, Rng& rng) {
  size_t N = circuit.parties();
  size_t t = cmpc.cfg.t;
  const CssCode& code = *cmpc.cfg.code;
  std::set<size_t> member_set(cmpc.members.begin(), cmpc.members.end());
  BobwResult result;
  result.outputs.resize(N);
  result.output_ok.assign(N, false);

  ie_run(st, circuit, setup.ie, inputs, cmpc, adv, rng);
  rqc_run(st, circuit, cmpc, adv, rng);

  // Delivery plan: surviving blocks are assigned to parties in order.
  struct Chunk {
    size_t receiver;  // global id
    size_t offset;    // first block
    size_t count;
    bool delivered;   // member receiver: goes through authentication
  };
  std::vector<Chunk> chunks;
  {
    size_t off = 0;
    for (size_t i = 0; i < N; ++i) {
      size_t li = circuit.output_sizes[i];
      if (li == 0) continue;
      chunks.push_back({i, off, li, member_set.count(i) > 0});
      off += li;
    }
    if (!cmpc.aborted && off != cmpc.live.size())
      throw std::runtime_error("bobw: survivor bookkeeping out of sync");
  }

  std::vector<std::vector<std::vector<size_t>>> delivered(N);
  std::vector<std::vector<CliffordOp>> fresh_keys(N);
  for (const Chunk& c : chunks) {
    delivered[c.receiver].assign(cmpc.cfg.n, {});
    fresh_keys[c.receiver].assign(cmpc.cfg.n, CliffordOp{});
  }

  if (!cmpc.aborted) {
    cmpc.round++;
    // Re-key: every party's frame becomes the concatenation of per-receiver
    // authentication ciphertexts (undelivered chunks get a discarded key).
    for (size_t j = 0; j < cmpc.cfg.n; ++j) {
      if (cmpc.corrupted(j)) continue;
      CliffordOp diag = CliffordOp::identity(0);
      for (const Chunk& c : chunks) {
        size_t wires = c.count * (1 + t);
        CliffordOp piece;
        if (c.delivered) {
          piece = clifford_compose(
              setup.aqa_secrets[c.receiver][j].e,
              CliffordOp::permutation(sort_perm(c.count, t)));
        } else {
          piece = random_clifford(wires, rng);
        }
        diag = diag.n == 0 ? piece : clifford_tensor(diag, piece);
      }
      CliffordOp v =
          clifford_compose(diag, clifford_inverse(cmpc.party[j].key));
      st.apply_clifford(cmpc.party[j].regs, v);
    }

    for (const Chunk& c : chunks) {
      if (!c.delivered) continue;
      for (size_t j = 0; j < cmpc.cfg.n; ++j) {
        if (cmpc.aborted) break;
        if (cmpc.corrupted(j)) continue;
        auto& regs = cmpc.party[j].regs;
        std::vector<size_t> chunk_regs(
            regs.begin() + c.offset * (1 + t),
            regs.begin() + (c.offset + c.count) * (1 + t));

        HookCtx pre;
        pre.st = &st;
        pre.rng = &rng;
        pre.party = cmpc.members[j];
        pre.peer = c.receiver;
        pre.regs = chunk_regs;
        adv.hook("aqa.pre_send", pre);
        if (pre.drop) {
          cmpc.publish(cmpc.name(cmpc.members[j]), "refuse",
                       {{"receiver", cmpc.name(c.receiver)}});
          cmpc.identify(cmpc.members[j]);
          continue;
        }

        AqaReport report =
            aqa_send(st, setup.aqa_portals[c.receiver][j], chunk_regs, rng);
        HookCtx rep;
        rep.st = &st;
        rep.rng = &rng;
        rep.party = cmpc.members[j];
        rep.peer = c.receiver;
        rep.report = &report;
        adv.hook("aqa.report", rep);
        if (rep.drop) {
          cmpc.publish(cmpc.name(cmpc.members[j]), "refuse",
                       {{"receiver", cmpc.name(c.receiver)}});
          cmpc.identify(cmpc.members[j]);
          continue;
        }
        nlohmann::json line = report_to_json(report);
        line["receiver"] = cmpc.name(c.receiver);
        cmpc.publish(cmpc.name(cmpc.members[j]), "aqa-report", line);

        AqaVerdict verdict =
            aqa_check(setup.aqa_secrets[c.receiver][j], report);
        nlohmann::json vline = verdict_to_json(verdict);
        vline["sender"] = cmpc.name(cmpc.members[j]);
        vline["receiver"] = cmpc.name(c.receiver);
        cmpc.publish("cMPC", "aqa-verdict", vline);
        if (!verdict.accepted) {
          cmpc.identify(cmpc.members[j]);
          continue;
        }
        aqa_receive(st, setup.aqa_portals[c.receiver][j], verdict);
        delivered[c.receiver][j] = setup.aqa_portals[c.receiver][j].r;
        fresh_keys[c.receiver][j] = verdict.eprime;
      }
      if (cmpc.aborted) break;
    }
  }

  if (!cmpc.aborted) {
    cmpc.round++;
    cmpc.publish("cMPC", "r-out", {{"bits", cmpc.r_out.to_hex()},
                                   {"count", cmpc.r_out.size()}});
    result.r_out = cmpc.r_out;

    std::vector<size_t> erased;
    for (size_t j = 0; j < cmpc.cfg.n; ++j)
      if (cmpc.corrupted(j)) erased.push_back(j);

    for (const Chunk& c : chunks) {
      if (!c.delivered) continue;
      size_t i = c.receiver;
      // Strip the fresh keys; each chunk is then (shares | traps) in order.
      for (size_t j = 0; j < cmpc.cfg.n; ++j) {
        if (cmpc.corrupted(j)) continue;
        st.apply_clifford(delivered[i][j],
                          clifford_inverse(fresh_keys[i][j]));
      }
      bool ok = true;
      for (size_t k = 0; k < c.count; ++k) {
        std::vector<size_t> block(cmpc.cfg.n);
        for (size_t j = 0; j < cmpc.cfg.n; ++j)
          block[j] = cmpc.corrupted(j) ? st.alloc_zeros(1)[0]
                                       : delivered[i][j][k];
        ok = qecc_erasure_decode(st, code, block, erased, rng) && ok;
        result.outputs[i].push_back(block[0]);
      }
      result.output_ok[i] = ok;
    }
    for (size_t i = 0; i < N; ++i)
      if (circuit.output_sizes[i] == 0 && member_set.count(i))
        result.output_ok[i] = true;
  }

  result.aborted = cmpc.aborted;
  result.identified = cmpc.corr;
  if (result.aborted) {
    for (auto& o : result.outputs) o.clear();
    result.output_ok.assign(N, false);
    result.r_out = BitVec(0);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Hierarchical partition driver

HierarchyResult hierarchy_run(const CircuitIR& circuit, const InputPrep& prep,
                              const CodeProvider& code_for, size_t t,
                              size_t thres, Backend backend, SwiaOracle& swia,
                              Adversary& adv, const std::set<size_t>& honest,
                              Rng& rng) {
  size_t N = circuit.parties();
  HierarchyResult result;
  PartitionLeaf root;
  for (size_t i = 0; i < N; ++i) root.members.insert(i);
  result.tree.leaves.push_back(root);

  for (bool progress = true; progress;) {
    progress = false;
    for (size_t leaf = 0; leaf < result.tree.leaves.size(); ++leaf) {
      if (result.tree.leaves[leaf].finished) continue;
      progress = true;
      std::set<size_t> members = result.tree.leaves[leaf].members;
      result.oracle_calls++;
      auto split = swia.attempt(members);
      if (split) {
        const auto& [s0, s1] = *split;
        if (s0.empty() || s1.empty())
          throw std::runtime_error("swia: split halves must be nonempty");
        std::set<size_t> uni;
        uni.insert(s0.begin(), s0.end());
        uni.insert(s1.begin(), s1.end());
        if (uni != members || s0.size() + s1.size() != members.size())
          throw std::runtime_error("swia: split is not a partition");
        bool h0 = false, h1 = false;
        for (size_t h : honest) {
          if (s0.count(h)) h0 = true;
          if (s1.count(h)) h1 = true;
        }
        if (h0 && h1)
          throw std::runtime_error("swia: oracle separated honest parties");
        result.tree.leaves[leaf].members = s0;
        PartitionLeaf other;
        other.members = s1;
        result.tree.leaves.push_back(other);
        break;  // re-scan from the front
      }

      result.tree.leaves[leaf].finished = true;
      CssCode code = code_for(members.size());
      MpqcConfig cfg;
      cfg.n = members.size();
      cfg.t = t;
      cfg.thres = std::min(thres, code.d - 1);
      cfg.code = &code;
      CmpcState cmpc = cmpc_init(
          cfg, std::vector<size_t>(members.begin(), members.end()));
      auto st = std::make_shared<QuantumState>(backend);
      std::vector<std::vector<size_t>> inputs(N);
      for (size_t i : members) inputs[i] = prep(*st, i, rng);
      BobwSetup setup = bobw_setup(*st, circuit, cmpc, rng);
      BobwResult res = bobw0_run(*st, circuit, setup, inputs, cmpc, adv, rng);

      GroupOutcome outcome;
      outcome.members = members;
      outcome.result = std::move(res);
      outcome.st = st;
      outcome.transcript = cmpc.transcript;
      result.groups.push_back(std::move(outcome));
      break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Ideal functionalities

IdealAqaResult ideal_aqa(QuantumState& st, const CliffordOp& e,
                         const std::vector<size_t>& sigma, bool sender_abort,
                         Rng& rng) {
  IdealAqaResult result;
  if (sender_abort) {
    result.aborted = true;
    result.named = "sender";
    return result;
  }
  result.eprime = random_clifford(e.n, rng);
  st.apply_clifford(sigma,
                    clifford_compose(result.eprime, clifford_inverse(e)));
  return result;
}

namespace {

struct EvalOut {
  BitVec r_out{0};
  std::vector<size_t> wires;  // surviving plain wires, block order
};

// Trusted evaluation of the circuit directly on plain wires.
EvalOut eval_circuit(QuantumState& st, const CircuitIR& circuit,
                     const std::vector<std::vector<size_t>>& inputs,
                     Rng& rng) {
  size_t N = circuit.parties();
  if (inputs.size() != N)
    throw std::invalid_argument("ideal: input list must cover every party");
  std::vector<size_t> wire;
  for (size_t i = 0; i < N; ++i) {
    if (inputs[i].size() != circuit.input_sizes[i])
      throw std::invalid_argument("ideal: input register count mismatch");
    wire.insert(wire.end(), inputs[i].begin(), inputs[i].end());
  }
  auto anc = st.alloc_zeros(circuit.l_anc);
  wire.insert(wire.end(), anc.begin(), anc.end());

  std::vector<bool> alive(wire.size(), true);
  EvalOut out;
  for (const auto& in : circuit.instrs) {
    if (in.kind == CircuitInstr::Kind::measure) {
      bool bit = st.measure_z({wire[in.qubit]}, rng).get(0);
      out.r_out = append_bit(out.r_out, bit);
      alive[in.qubit] = false;
      continue;
    }
    Gate g = in.gate;
    g.q0 = wire[g.q0];
    if (g.kind == GateKind::CNOT) g.q1 = wire[in.gate.q1];
    st.apply_gate(g);
  }
  for (size_t g = 0; g < wire.size(); ++g)
    if (alive[g]) out.wires.push_back(wire[g]);
  return out;
}

}  // namespace

IdealRqcResult ideal_rqc(QuantumState& st, const CircuitIR& circuit,
                         const MpqcConfig& cfg,
                         const std::vector<std::vector<size_t>>& inputs,
                         const std::set<size_t>& abort_parties, Rng& rng) {
  circuit.validate(*cfg.code);
  if (circuit.parties() != cfg.n)
    throw std::invalid_argument("ideal: party count mismatch");
  IdealRqcResult result;
  result.corr = abort_parties;
  result.keys.resize(cfg.n);
  result.share_regs.resize(cfg.n);
  if (result.corr.size() > cfg.thres) {
    result.aborted = true;
    return result;
  }
  EvalOut out = eval_circuit(st, circuit, inputs, rng);
  result.r_out = out.r_out;

  std::vector<std::vector<size_t>> share_of(out.wires.size());
  for (size_t g = 0; g < out.wires.size(); ++g) {
    auto rest = st.alloc_zeros(cfg.code->q - 1);
    qecc_encode(st, *cfg.code, {out.wires[g]}, rest);
    share_of[g].push_back(out.wires[g]);
    share_of[g].insert(share_of[g].end(), rest.begin(), rest.end());
  }
  for (size_t j = 0; j < cfg.n; ++j) {
    if (result.corr.count(j)) continue;  // ⊥ key, no ciphertext handed out
    for (size_t g = 0; g < out.wires.size(); ++g) {
      result.share_regs[j].push_back(share_of[g][j]);
      auto traps = st.alloc_zeros(cfg.t);
      result.share_regs[j].insert(result.share_regs[j].end(), traps.begin(),
                                  traps.end());
    }
    PauliOp pad = random_pauli(out.wires.size() * (1 + cfg.t), rng);
    CliffordOp e = random_clifford(out.wires.size() * (1 + cfg.t), rng);
    result.keys[j] = clifford_compose(CliffordOp::from_pauli(pad), e);
    st.apply_clifford(result.share_regs[j], result.keys[j]);
  }
  return result;
}

IdealMpqcResult ideal_mpqc(QuantumState& st, const CircuitIR& circuit,
                           const std::vector<std::vector<size_t>>& inputs,
                           std::optional<size_t> abort_party, Rng& rng) {
  IdealMpqcResult result;
  EvalOut out = eval_circuit(st, circuit, inputs, rng);
  if (abort_party) {
    result.aborted = true;
    result.named = "P" + std::to_string(*abort_party + 1);
    return result;
  }
  result.r_out = out.r_out;
  result.outputs.resize(circuit.parties());
  size_t off = 0;
  for (size_t i = 0; i < circuit.parties(); ++i) {
    for (size_t k = 0; k < circuit.output_sizes[i]; ++k)
      result.outputs[i].push_back(out.wires[off + k]);
    off += circuit.output_sizes[i];
  }
  return result;
}

}  // namespace aqsim
