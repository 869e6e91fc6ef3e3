#include "aqsim/state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace aqsim {

namespace {

void mul_inplace(PauliOp& a, const PauliOp& b) {
  a.phase = static_cast<uint8_t>(
      (a.phase + b.phase + 2 * (a.z.dot(b.x) ? 1 : 0)) & 3);
  a.x ^= b.x;
  a.z ^= b.z;
}

bool anticommutes(const PauliOp& a, const PauliOp& b) {
  return a.x.dot(b.z) ^ a.z.dot(b.x);
}

}  // namespace

void RegisterMap::define(const std::string& name, std::vector<size_t> idx) {
  regs_[name] = std::move(idx);
}

const std::vector<size_t>& RegisterMap::at(const std::string& name) const {
  auto it = regs_.find(name);
  if (it == regs_.end())
    throw std::out_of_range("RegisterMap: no register named " + name);
  return it->second;
}

bool RegisterMap::contains(const std::string& name) const {
  return regs_.count(name) != 0;
}

void QuantumState::grow(size_t k) {
  if (kind_ == Backend::dense) {
    if (n_ + k > kDenseCap)
      throw std::length_error("dense backend capacity exceeded");
    if (amp_.empty()) amp_ = {1.0};
    std::vector<std::complex<double>> next(amp_.size() << k, 0.0);
    for (size_t i = 0; i < amp_.size(); ++i) next[i << k] = amp_[i];
    amp_ = std::move(next);
    n_ += k;
    return;
  }
  size_t n2 = n_ + k;
  for (auto& r : destab_) {
    r.x.resize(n2);
    r.z.resize(n2);
    r.n = n2;
  }
  for (auto& r : stab_) {
    r.x.resize(n2);
    r.z.resize(n2);
    r.n = n2;
  }
  for (size_t q = n_; q < n2; ++q) {
    destab_.push_back(PauliOp::single(n2, q, 'X'));
    stab_.push_back(PauliOp::single(n2, q, 'Z'));
  }
  n_ = n2;
}

std::vector<size_t> QuantumState::alloc_zeros(size_t k) {
  std::vector<size_t> idx(k);
  size_t first = n_;
  grow(k);
  for (size_t i = 0; i < k; ++i) idx[i] = first + i;
  return idx;
}

std::vector<size_t> QuantumState::alloc_plus(size_t k) {
  auto idx = alloc_zeros(k);
  for (size_t q : idx) apply_gate({GateKind::H, q});
  return idx;
}

std::pair<std::vector<size_t>, std::vector<size_t>> QuantumState::alloc_epr(
    size_t k) {
  auto a = alloc_zeros(k);
  auto b = alloc_zeros(k);
  for (size_t i = 0; i < k; ++i) {
    apply_gate({GateKind::H, a[i]});
    apply_gate({GateKind::CNOT, a[i], b[i]});
  }
  return {a, b};
}

void QuantumState::apply_gate(const Gate& g) {
  assert(g.q0 < n_ && (g.kind != GateKind::CNOT || (g.q1 < n_ && g.q1 != g.q0)));
  if (kind_ == Backend::stabilizer) {
    for (auto& r : destab_) conjugate_by_gate(r, g);
    for (auto& r : stab_) conjugate_by_gate(r, g);
    return;
  }
  const std::complex<double> im(0.0, 1.0);
  size_t b0 = size_t{1} << amp_bit(g.q0);
  switch (g.kind) {
    case GateKind::H: {
      const double is2 = 1.0 / std::sqrt(2.0);
      for (size_t i = 0; i < amp_.size(); ++i) {
        if (i & b0) continue;
        auto a0 = amp_[i], a1 = amp_[i | b0];
        amp_[i] = (a0 + a1) * is2;
        amp_[i | b0] = (a0 - a1) * is2;
      }
      break;
    }
    case GateKind::S:
      for (size_t i = 0; i < amp_.size(); ++i)
        if (i & b0) amp_[i] *= im;
      break;
    case GateKind::SDG:
      for (size_t i = 0; i < amp_.size(); ++i)
        if (i & b0) amp_[i] *= -im;
      break;
    case GateKind::X:
      for (size_t i = 0; i < amp_.size(); ++i)
        if (!(i & b0)) std::swap(amp_[i], amp_[i | b0]);
      break;
    case GateKind::Z:
      for (size_t i = 0; i < amp_.size(); ++i)
        if (i & b0) amp_[i] = -amp_[i];
      break;
    case GateKind::CNOT: {
      size_t b1 = size_t{1} << amp_bit(g.q1);
      for (size_t i = 0; i < amp_.size(); ++i)
        if ((i & b0) && !(i & b1)) std::swap(amp_[i], amp_[i | b1]);
      break;
    }
  }
}

void QuantumState::apply_clifford(const std::vector<size_t>& idx,
                                  const CliffordOp& c) {
  if (idx.size() != c.n)
    throw std::invalid_argument("apply_clifford: register/operator mismatch");
  for (size_t q : idx)
    if (q >= n_) throw std::out_of_range("apply_clifford: qubit out of range");
  if (kind_ == Backend::dense) {
    for (const Gate& g : clifford_to_circuit(c)) {
      Gate mapped = g;
      mapped.q0 = idx[g.q0];
      mapped.q1 = g.kind == GateKind::CNOT ? idx[g.q1] : 0;
      apply_gate(mapped);
    }
    return;
  }
  size_t m = c.n;
  auto rewrite = [&](PauliOp& row) {
    PauliOp sub(m);
    for (size_t k = 0; k < m; ++k) {
      sub.x.set(k, row.x.get(idx[k]));
      sub.z.set(k, row.z.get(idx[k]));
    }
    if (sub.x.none() && sub.z.none()) return;
    PauliOp img = clifford_conjugate(c, sub);
    for (size_t k = 0; k < m; ++k) {
      row.x.set(idx[k], img.x.get(k));
      row.z.set(idx[k], img.z.get(k));
    }
    row.phase = (row.phase + img.phase) & 3;
  };
  for (auto& r : destab_) rewrite(r);
  for (auto& r : stab_) rewrite(r);
}

void QuantumState::apply_pauli(const std::vector<size_t>& idx,
                               const PauliOp& p) {
  if (idx.size() != p.n)
    throw std::invalid_argument("apply_pauli: register/operator mismatch");
  if (kind_ == Backend::stabilizer) {
    // Conjugation by a Pauli only flips row signs.
    PauliOp emb(n_);
    for (size_t k = 0; k < p.n; ++k) {
      emb.x.set(idx[k], p.x.get(k));
      emb.z.set(idx[k], p.z.get(k));
    }
    for (auto& r : destab_)
      if (anticommutes(emb, r)) r.phase = (r.phase + 2) & 3;
    for (auto& r : stab_)
      if (anticommutes(emb, r)) r.phase = (r.phase + 2) & 3;
    return;
  }
  // Dense: X part permutes indices, Z part adds signs; global phase dropped.
  size_t xmask = 0;
  for (size_t k = 0; k < p.n; ++k)
    if (p.x.get(k)) xmask |= size_t{1} << amp_bit(idx[k]);
  std::vector<std::complex<double>> next(amp_.size());
  for (size_t i = 0; i < amp_.size(); ++i) {
    int zpar = 0;
    for (size_t k = 0; k < p.n; ++k)
      if (p.z.get(k) && (i & (size_t{1} << amp_bit(idx[k])))) zpar ^= 1;
    next[i ^ xmask] = zpar ? -amp_[i] : amp_[i];
  }
  amp_ = std::move(next);
}

void QuantumState::apply_unitary_dense(
    const std::vector<size_t>& idx,
    const std::vector<std::complex<double>>& u) {
  if (kind_ != Backend::dense)
    throw std::logic_error("apply_unitary_dense: dense backend required");
  size_t k = idx.size();
  size_t dim = size_t{1} << k;
  if (u.size() != dim * dim)
    throw std::invalid_argument("apply_unitary_dense: matrix size mismatch");
  // Unitarity check: exhaustive for small blocks, randomized norm test above.
  if (dim <= 128) {
    for (size_t r = 0; r < dim; ++r) {
      for (size_t c = 0; c < dim; ++c) {
        std::complex<double> dot = 0.0;
        for (size_t j = 0; j < dim; ++j)
          dot += std::conj(u[j * dim + r]) * u[j * dim + c];
        if (std::abs(dot - (r == c ? 1.0 : 0.0)) > 1e-10)
          throw std::invalid_argument("apply_unitary_dense: not unitary");
      }
    }
  } else {
    Rng probe(0x9d5ULL);
    for (int trial = 0; trial < 8; ++trial) {
      std::vector<std::complex<double>> v(dim), w(dim, 0.0);
      double nv = 0;
      for (auto& a : v) {
        a = {probe.unit() - 0.5, probe.unit() - 0.5};
        nv += std::norm(a);
      }
      double nw = 0;
      for (size_t r = 0; r < dim; ++r) {
        for (size_t c = 0; c < dim; ++c) w[r] += u[r * dim + c] * v[c];
        nw += std::norm(w[r]);
      }
      if (std::abs(nw - nv) > 1e-10 * nv)
        throw std::invalid_argument("apply_unitary_dense: not unitary");
    }
  }
  std::vector<size_t> bits(k);
  for (size_t j = 0; j < k; ++j) bits[j] = amp_bit(idx[j]);
  size_t submask = 0;
  for (size_t b : bits) submask |= size_t{1} << b;
  std::vector<std::complex<double>> buf(dim);
  for (size_t base = 0; base < amp_.size(); ++base) {
    if (base & submask) continue;
    for (size_t s = 0; s < dim; ++s) {
      size_t pos = base;
      // Sub-index bit order: s's MSB corresponds to idx[0] (leftmost factor).
      for (size_t j = 0; j < k; ++j)
        if (s & (size_t{1} << (k - 1 - j))) pos |= size_t{1} << bits[j];
      buf[s] = amp_[pos];
    }
    for (size_t r = 0; r < dim; ++r) {
      std::complex<double> acc = 0.0;
      for (size_t c = 0; c < dim; ++c) acc += u[r * dim + c] * buf[c];
      size_t pos = base;
      for (size_t j = 0; j < k; ++j)
        if (r & (size_t{1} << (k - 1 - j))) pos |= size_t{1} << bits[j];
      amp_[pos] = acc;
    }
  }
}

bool QuantumState::measure_pauli(const std::vector<size_t>& idx,
                                 const PauliOp& obs, Rng& rng) {
  if (idx.size() != obs.n)
    throw std::invalid_argument("measure_pauli: register/operator mismatch");
  if (!obs.is_hermitian())
    throw std::invalid_argument("measure_pauli: observable must be Hermitian");
  if (kind_ == Backend::dense) {
    // phi = P|psi>; p(+1) = (1 + <psi|phi>)/2; collapse to (psi ± phi)/norm.
    QuantumState tmp = *this;
    tmp.apply_pauli(idx, obs);  // drops global phase; re-add below
    std::complex<double> sign = 1.0;
    const std::complex<double> im(0.0, 1.0);
    for (int k = 0; k < (obs.phase & 3); ++k) sign *= im;
    // apply_pauli ignored both obs.phase and the (-1)^{x·z} from acting with
    // X^x Z^z on basis states in Z-then-X order; reconstruct exactly:
    // X^x Z^z |b> = (-1)^{z·b} |b ^ x>, which apply_pauli used, so only
    // obs.phase is missing.
    double inner = 0.0;
    for (size_t i = 0; i < amp_.size(); ++i)
      inner += (std::conj(amp_[i]) * sign * tmp.amp_[i]).real();
    double p_plus = std::clamp((1.0 + inner) / 2.0, 0.0, 1.0);
    bool b = rng.unit() >= p_plus;
    double norm = 0.0;
    for (size_t i = 0; i < amp_.size(); ++i) {
      amp_[i] = amp_[i] + (b ? -1.0 : 1.0) * sign * tmp.amp_[i];
      norm += std::norm(amp_[i]);
    }
    norm = std::sqrt(norm);
    if (norm < 1e-9)
      throw std::logic_error("measure_pauli: collapse onto zero branch");
    for (auto& a : amp_) a /= norm;
    return b;
  }
  PauliOp p(n_);
  for (size_t k = 0; k < obs.n; ++k) {
    p.x.set(idx[k], obs.x.get(k));
    p.z.set(idx[k], obs.z.get(k));
  }
  p.phase = obs.phase;
  size_t hit = stab_.size();
  for (size_t i = 0; i < stab_.size(); ++i) {
    if (anticommutes(stab_[i], p)) {
      hit = i;
      break;
    }
  }
  if (hit < stab_.size()) {
    // Random outcome: update every other anticommuting row by the hit row.
    PauliOp old = stab_[hit];
    for (size_t i = 0; i < destab_.size(); ++i)
      if (anticommutes(destab_[i], p)) mul_inplace(destab_[i], old);
    for (size_t i = 0; i < stab_.size(); ++i)
      if (i != hit && anticommutes(stab_[i], p)) mul_inplace(stab_[i], old);
    bool b = rng.bit();
    destab_[hit] = old;
    stab_[hit] = p;
    stab_[hit].phase = (p.phase + (b ? 2 : 0)) & 3;
    return b;
  }
  // Deterministic outcome: express ±P as a product of stabilizer rows; the
  // destabilizers tell us which rows participate.
  PauliOp acc(n_);
  for (size_t i = 0; i < destab_.size(); ++i)
    if (anticommutes(destab_[i], p)) mul_inplace(acc, stab_[i]);
  assert(acc.x == p.x && acc.z == p.z);
  uint8_t diff = (acc.phase - p.phase) & 3;
  assert((diff & 1) == 0);
  return diff == 2;
}

BitVec QuantumState::measure_z(const std::vector<size_t>& idx, Rng& rng) {
  BitVec out(idx.size());
  PauliOp zobs = PauliOp::single(1, 0, 'Z');
  for (size_t k = 0; k < idx.size(); ++k)
    out.set(k, measure_pauli({idx[k]}, zobs, rng));
  return out;
}

BitVec QuantumState::measure_x(const std::vector<size_t>& idx, Rng& rng) {
  BitVec out(idx.size());
  PauliOp xobs = PauliOp::single(1, 0, 'X');
  for (size_t k = 0; k < idx.size(); ++k)
    out.set(k, measure_pauli({idx[k]}, xobs, rng));
  return out;
}

std::string QuantumState::dump_tableau() const {
  if (kind_ != Backend::stabilizer)
    throw std::logic_error("dump_tableau: stabilizer backend required");
  std::ostringstream os;
  for (const auto& r : destab_) os << to_string(r) << "\n";
  os << "---\n";
  for (const auto& r : stab_) os << to_string(r) << "\n";
  return os.str();
}

std::pair<QuantumState, RegisterMap> prepare(
    Backend kind, const std::vector<PrepEntry>& spec) {
  QuantumState st(kind);
  RegisterMap regs;
  for (const auto& e : spec) {
    switch (e.kind) {
      case PrepEntry::zeros:
        regs.define(e.name, st.alloc_zeros(e.count));
        break;
      case PrepEntry::plus:
        regs.define(e.name, st.alloc_plus(e.count));
        break;
      case PrepEntry::epr: {
        auto [a, b] = st.alloc_epr(e.count);
        regs.define(e.name, a);
        regs.define(e.name2, b);
        break;
      }
    }
  }
  return {std::move(st), std::move(regs)};
}

std::pair<BitVec, BitVec> tp_send(QuantumState& st,
                                  const std::vector<size_t>& regM,
                                  const std::vector<size_t>& regS, Rng& rng) {
  if (regM.size() != regS.size())
    throw std::invalid_argument("tp_send: register length mismatch");
  for (size_t i = 0; i < regM.size(); ++i)
    st.apply_gate({GateKind::CNOT, regM[i], regS[i]});
  for (size_t q : regM) st.apply_gate({GateKind::H, q});
  BitVec z = st.measure_z(regM, rng);
  BitVec x = st.measure_z(regS, rng);
  return {z, x};
}

void tp_receive(QuantumState& st, const std::vector<size_t>& regR,
                const BitVec& z, const BitVec& x) {
  if (regR.size() != z.size() || regR.size() != x.size())
    throw std::invalid_argument("tp_receive: length mismatch");
  // (X^x Z^z)† equals X^x Z^z up to global phase.
  st.apply_pauli(regR, PauliOp::from_xz(x, z));
}

namespace {

// Unique generating set: full row reduction over columns (x0..x_{n-1},
// z0..z_{n-1}) with exact sign tracking.
std::vector<PauliOp> canonical_rows(std::vector<PauliOp> rows, size_t n) {
  size_t r = 0;
  for (size_t col = 0; col < 2 * n && r < rows.size(); ++col) {
    auto bit = [&](const PauliOp& p) {
      return col < n ? p.x.get(col) : p.z.get(col - n);
    };
    size_t pick = r;
    while (pick < rows.size() && !bit(rows[pick])) ++pick;
    if (pick == rows.size()) continue;
    std::swap(rows[pick], rows[r]);
    for (size_t i = 0; i < rows.size(); ++i)
      if (i != r && bit(rows[i])) mul_inplace(rows[i], rows[r]);
    ++r;
  }
  return rows;
}

}  // namespace

bool state_equal(const QuantumState& a, const QuantumState& b) {
  if (a.kind_ != b.kind_)
    throw std::invalid_argument("state_equal: mixed backends");
  if (a.n_ != b.n_) return false;
  if (a.kind_ == Backend::dense) {
    std::complex<double> inner = 0.0;
    for (size_t i = 0; i < a.amp_.size(); ++i)
      inner += std::conj(a.amp_[i]) * b.amp_[i];
    return std::abs(inner) >= 1.0 - 1e-10;
  }
  auto ca = canonical_rows(a.stab_, a.n_);
  auto cb = canonical_rows(b.stab_, b.n_);
  return ca == cb;
}

}  // namespace aqsim
