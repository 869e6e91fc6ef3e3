#include "aqsim/aqa.hpp"

#include <stdexcept>

namespace aqsim {

namespace {

// Both forms share the portal construction; only the frame split, the
// tolerance and the key structure differ.
std::pair<AqaPortals, AqaSecret> setup_with(QuantumState& st, size_t mu,
                                            size_t tau, size_t u_thres,
                                            const CliffordOp& e,
                                            const CliffordOp& eprime,
                                            Rng& rng) {
  size_t n = mu + tau;
  if (e.n != n || eprime.n != n)
    throw std::invalid_argument("aqa_setup: key size mismatch");

  AqaSecret sec;
  sec.mu = mu;
  sec.tau = tau;
  sec.u_thres = u_thres;
  sec.pm = random_pauli(n, rng);
  sec.ps = random_pauli(n, rng);
  sec.pr = random_pauli(n, rng);
  sec.pc = random_pauli(tau, rng);
  sec.e = e;
  sec.eprime = eprime;
  sec.etilde = clifford_compose(CliffordOp::from_pauli(sec.pm), e);
  sec.etilde_inv = clifford_inverse(sec.etilde);

  auto [e_s, e_r] = st.alloc_epr(n);
  // Receiver half in the Ẽ†-frame, split into the payload block μ and the
  // trap block τ.
  st.apply_clifford(e_r, sec.etilde_inv);
  std::vector<size_t> mu_regs(e_r.begin(), e_r.begin() + mu);
  std::vector<size_t> tau_regs(e_r.begin() + mu, e_r.end());

  AqaPortals portals;
  st.apply_pauli(e_s, sec.ps);  // sending portal P_S · e_S
  portals.s = e_s;
  st.apply_pauli(tau_regs, sec.pc);  // checking portal P_C · τ
  portals.c = tau_regs;
  // Receiving portal P_R E′ · (μ ⊗ 0^tau).
  auto fresh = st.alloc_zeros(tau);
  portals.r = mu_regs;
  portals.r.insert(portals.r.end(), fresh.begin(), fresh.end());
  st.apply_clifford(portals.r, sec.eprime);
  st.apply_pauli(portals.r, sec.pr);
  return {std::move(portals), std::move(sec)};
}

// Restrict a Pauli to the first mu wires (identity elsewhere), with the
// canonical Hermitian phase.
PauliOp head_block(const PauliOp& p, size_t mu) {
  PauliOp b(p.n);
  for (size_t i = 0; i < mu; ++i) {
    b.x.set(i, p.x.get(i));
    b.z.set(i, p.z.get(i));
  }
  b.phase = b.x.dot(b.z) ? 1 : 0;
  return b;
}

}  // namespace

std::pair<AqaPortals, AqaSecret> aqa_setup(QuantumState& st, size_t l,
                                           size_t t, const CliffordKey& key,
                                           Rng& rng) {
  if (key.l != l || key.t != t)
    throw std::invalid_argument("aqa_setup: key does not match (l, t)");
  CliffordOp eprime = random_clifford(l + t, rng);
  return setup_with(st, l, t, 1, key.e, eprime, rng);
}

std::pair<AqaPortals, AqaSecret> aqa_setup_trap(QuantumState& st,
                                                const CssCode& code,
                                                Rng& rng) {
  size_t q = code.q;
  CliffordOp e = trap_clifford(trap_key(code, rng));
  CliffordOp eprime = trap_clifford(trap_key(code, rng));
  return setup_with(st, q, 2 * q, code.d, e, eprime, rng);
}

AqaReport aqa_send(QuantumState& st, AqaPortals& portals,
                   const std::vector<size_t>& input, Rng& rng) {
  if (portals.consumed)
    throw std::logic_error("aqa_send: portals already consumed");
  if (input.size() != portals.s.size())
    throw std::invalid_argument("aqa_send: input register size mismatch");
  portals.consumed = true;
  AqaReport rep;
  std::tie(rep.r_z, rep.r_x) = tp_send(st, input, portals.s, rng);
  rep.r_c = st.measure_z(portals.c, rng);
  return rep;
}

AqaVerdict aqa_check(const AqaSecret& secret, const AqaReport& report) {
  size_t n = secret.n();
  if (report.r_z.size() != n || report.r_x.size() != n ||
      report.r_c.size() != secret.tau)
    throw std::invalid_argument("aqa_check: report size mismatch");

  // Classical pads (s_z, s_x) = x(TP (P_M ⊗ P_S) TP†) and s_c = x(P_C),
  // where TP is the teleport measurement circuit CNOT(i → n+i), H(i).
  PauliOp q = pauli_tensor(secret.pm, secret.ps);
  for (size_t i = 0; i < n; ++i)
    conjugate_by_gate(q, {GateKind::CNOT, i, n + i});
  for (size_t i = 0; i < n; ++i) conjugate_by_gate(q, {GateKind::H, i});
  BitVec s_z = q.x.slice(0, n);
  BitVec s_x = q.x.slice(n, 2 * n);

  BitVec rz = report.r_z ^ s_z;
  BitVec rx = report.r_x ^ s_x;
  BitVec rc = report.r_c ^ secret.pc.x;

  // The announced Pauli in the Ẽ†-frame; its trap-block x-part is what the
  // checking portal must have read.
  PauliOp err(n);
  err.x = rx;
  err.z = rz;
  err.phase = err.x.dot(err.z) ? 1 : 0;
  PauliOp net = clifford_conjugate(secret.etilde_inv, err);

  AqaVerdict v;
  v.u = (net.x.slice(secret.mu, n) ^ rc).popcount();
  if (v.u >= secret.u_thres) {
    v.accepted = false;
    v.party = "sender";
    return v;
  }
  v.accepted = true;
  v.correction = pauli_compose(
      secret.pr, clifford_conjugate(secret.eprime, head_block(net, secret.mu)));
  v.eprime = secret.eprime;
  return v;
}

void aqa_receive(QuantumState& st, const AqaPortals& portals,
                 const AqaVerdict& verdict) {
  if (!verdict.accepted)
    throw std::logic_error("aqa_receive: verdict identified the sender");
  if (verdict.correction.n != portals.r.size())
    throw std::invalid_argument("aqa_receive: correction size mismatch");
  st.apply_pauli(portals.r, verdict.correction.adjoint());
}

bool range_oracle(const CliffordOp& etilde, size_t mu, const BitVec& v) {
  size_t n = etilde.n;
  size_t tau = n - mu;
  if (v.size() != 2 * n + tau)
    throw std::invalid_argument("range_oracle: vector length mismatch");
  CliffordOp inv = clifford_inverse(etilde);
  // Basis images of the linear map δ ↦ x(Ẽ† X^α Z^β Ẽ)[mu:], δ = (β|α).
  GF2Mat m(tau, 2 * n);
  for (size_t k = 0; k < 2 * n; ++k) {
    PauliOp p(n);
    if (k < n)
      p.z.set(k, true);
    else
      p.x.set(k - n, true);
    PauliOp img = clifford_conjugate(inv, p);
    for (size_t r = 0; r < tau; ++r) m.rows[r].set(k, img.x.get(mu + r));
  }
  BitVec delta = v.slice(0, 2 * n);
  BitVec gamma = v.slice(2 * n, 2 * n + tau);
  return m.mul(delta) == gamma;
}

nlohmann::json report_to_json(const AqaReport& report) {
  return {{"r_z", report.r_z.to_hex()},
          {"r_x", report.r_x.to_hex()},
          {"r_c", report.r_c.to_hex()}};
}

AqaReport report_from_json(const nlohmann::json& j, size_t n, size_t tau) {
  AqaReport rep;
  rep.r_z = BitVec::from_hex(n, j.at("r_z").get<std::string>());
  rep.r_x = BitVec::from_hex(n, j.at("r_x").get<std::string>());
  rep.r_c = BitVec::from_hex(tau, j.at("r_c").get<std::string>());
  return rep;
}

nlohmann::json verdict_to_json(const AqaVerdict& verdict) {
  if (verdict.accepted) return {{"verdict", "accepted"}};
  return {{"verdict", "identified"}, {"party", verdict.party}};
}

}  // namespace aqsim
