#include "aqsim/authcode.hpp"

#include <stdexcept>

namespace aqsim {

namespace {

// Collapse the listed qubits to |0⟩ (measure, flip the ones): the ⊥ state
// of a rejected plaintext register.
void zero_out(QuantumState& st, const std::vector<size_t>& regs, Rng& rng) {
  BitVec b = st.measure_z(regs, rng);
  for (size_t i = 0; i < regs.size(); ++i)
    if (b.get(i)) st.apply_gate({GateKind::X, regs[i]});
}

}  // namespace

CliffordKey clifford_key(size_t l, size_t t, Rng& rng) {
  return {l, t, random_clifford(l + t, rng)};
}

TrapKey trap_key(const CssCode& code, Rng& rng) {
  TrapKey key;
  key.code = &code;
  key.perm = rng.permutation(3 * code.q);
  key.pad = random_pauli(3 * code.q, rng);
  return key;
}

CliffordOp trap_clifford(const TrapKey& key) {
  size_t t = key.t();
  CliffordOp h_layer = CliffordOp::identity(t);
  for (size_t i = 0; i < t; ++i)
    h_layer = clifford_compose(CliffordOp::from_gate(t, {GateKind::H, i}),
                               h_layer);
  CliffordOp base = clifford_tensor(
      clifford_tensor(key.code->enc, CliffordOp::identity(t)), h_layer);
  CliffordOp e = clifford_compose(CliffordOp::permutation(key.perm), base);
  return clifford_compose(CliffordOp::from_pauli(key.pad), e);
}

void c_enc(QuantumState& st, const CliffordKey& key,
           const std::vector<size_t>& msg, const std::vector<size_t>& traps) {
  if (msg.size() != key.l || traps.size() != key.t)
    throw std::invalid_argument("c_enc: register sizes do not match the key");
  std::vector<size_t> all = msg;
  all.insert(all.end(), traps.begin(), traps.end());
  st.apply_clifford(all, key.e);
}

AuthVerdict c_dec(QuantumState& st, const CliffordKey& key,
                  const std::vector<size_t>& regs, Rng& rng) {
  if (regs.size() != key.l + key.t)
    throw std::invalid_argument("c_dec: register size does not match the key");
  st.apply_clifford(regs, clifford_inverse(key.e));
  std::vector<size_t> msg(regs.begin(), regs.begin() + key.l);
  std::vector<size_t> traps(regs.begin() + key.l, regs.end());
  AuthVerdict v;
  v.accept = st.measure_z(traps, rng).none();
  if (v.accept) {
    v.plaintext = msg;
  } else {
    zero_out(st, msg, rng);
  }
  return v;
}

std::vector<size_t> t_enc(QuantumState& st, const TrapKey& key,
                          const std::vector<size_t>& msg,
                          const std::vector<size_t>& qecc_anc,
                          const std::vector<size_t>& zero_traps,
                          const std::vector<size_t>& plus_traps) {
  size_t t = key.t();
  if (msg.size() != 1 || qecc_anc.size() != t - 1 ||
      zero_traps.size() != t || plus_traps.size() != t)
    throw std::invalid_argument("t_enc: register sizes do not match the key");
  qecc_encode(st, *key.code, msg, qecc_anc);
  std::vector<size_t> plain = msg;
  plain.insert(plain.end(), qecc_anc.begin(), qecc_anc.end());
  plain.insert(plain.end(), zero_traps.begin(), zero_traps.end());
  plain.insert(plain.end(), plus_traps.begin(), plus_traps.end());
  std::vector<size_t> cipher(3 * t);
  for (size_t i = 0; i < 3 * t; ++i) cipher[key.perm[i]] = plain[i];
  st.apply_pauli(cipher, key.pad);
  return cipher;
}

AuthVerdict t_dec(QuantumState& st, const TrapKey& key,
                  const std::vector<size_t>& cipher, Rng& rng) {
  size_t t = key.t();
  if (cipher.size() != 3 * t)
    throw std::invalid_argument("t_dec: register size does not match the key");
  st.apply_pauli(cipher, key.pad.adjoint());
  std::vector<size_t> plain(3 * t);
  for (size_t i = 0; i < 3 * t; ++i) plain[i] = cipher[key.perm[i]];
  std::vector<size_t> block(plain.begin(), plain.begin() + t);
  std::vector<size_t> zero_traps(plain.begin() + t, plain.begin() + 2 * t);
  std::vector<size_t> plus_traps(plain.begin() + 2 * t, plain.end());

  bool clean = st.measure_z(zero_traps, rng).none();
  clean = st.measure_x(plus_traps, rng).none() && clean;
  std::vector<size_t> msg = {block[0]};
  std::vector<size_t> anc(block.begin() + 1, block.end());
  st.apply_clifford(block, clifford_inverse(key.code->enc));
  clean = st.measure_z(anc, rng).none() && clean;

  AuthVerdict v;
  v.accept = clean;
  if (v.accept) {
    v.plaintext = msg;
  } else {
    zero_out(st, msg, rng);
  }
  return v;
}

}  // namespace aqsim
