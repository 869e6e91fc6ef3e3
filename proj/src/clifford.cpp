#include "aqsim/clifford.hpp"

#include <sstream>
#include <stdexcept>

#include "aqsim/gf2.hpp"

namespace aqsim {

namespace {

// a <- a·b without allocating. Phase rule as in pauli_compose.
void mul_inplace(PauliOp& a, const PauliOp& b) {
  a.phase = static_cast<uint8_t>(
      (a.phase + b.phase + 2 * (a.z.dot(b.x) ? 1 : 0)) & 3);
  a.x ^= b.x;
  a.z ^= b.z;
}

void conj_gate_all(CliffordOp& c, const Gate& g) {
  for (auto& img : c.imgs) conjugate_by_gate(img, g);
}

Gate inverse_gate(const Gate& g) {
  Gate r = g;
  if (g.kind == GateKind::S) r.kind = GateKind::SDG;
  if (g.kind == GateKind::SDG) r.kind = GateKind::S;
  return r;
}

}  // namespace

// p <- g p g† for one elementary gate.
void conjugate_by_gate(PauliOp& p, const Gate& g) {
  size_t a = g.q0, b = g.q1;
  bool xa = p.x.get(a), za = p.z.get(a);
  switch (g.kind) {
    case GateKind::H:
      // X<->Z, Y -> -Y.
      if (xa && za) p.phase = (p.phase + 2) & 3;
      p.x.set(a, za);
      p.z.set(a, xa);
      break;
    case GateKind::S:
      // X -> Y, Z -> Z.
      if (xa) {
        p.phase = (p.phase + 1) & 3;
        p.z.flip(a);
      }
      break;
    case GateKind::SDG:
      if (xa) {
        p.phase = (p.phase + 3) & 3;
        p.z.flip(a);
      }
      break;
    case GateKind::X:
      if (za) p.phase = (p.phase + 2) & 3;
      break;
    case GateKind::Z:
      if (xa) p.phase = (p.phase + 2) & 3;
      break;
    case GateKind::CNOT: {
      // X_a -> X_a X_b, Z_b -> Z_a Z_b.  In the global-phase representation
      // i^p X^x Z^z the reordering into canonical form is phase-free.
      if (xa) p.x.flip(b);
      if (p.z.get(b)) p.z.flip(a);
      break;
    }
  }
}

const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::H: return "H";
    case GateKind::S: return "S";
    case GateKind::SDG: return "SDG";
    case GateKind::X: return "X";
    case GateKind::Z: return "Z";
    case GateKind::CNOT: return "CNOT";
  }
  return "?";
}

GateKind gate_kind_from_string(const std::string& s) {
  if (s == "H") return GateKind::H;
  if (s == "S") return GateKind::S;
  if (s == "SDG") return GateKind::SDG;
  if (s == "X") return GateKind::X;
  if (s == "Z") return GateKind::Z;
  if (s == "CNOT") return GateKind::CNOT;
  throw std::invalid_argument("unknown gate kind: " + s);
}

CliffordOp CliffordOp::identity(size_t n) {
  CliffordOp c;
  c.n = n;
  c.imgs.reserve(2 * n);
  for (size_t i = 0; i < n; ++i) c.imgs.push_back(PauliOp::single(n, i, 'X'));
  for (size_t i = 0; i < n; ++i) c.imgs.push_back(PauliOp::single(n, i, 'Z'));
  return c;
}

CliffordOp CliffordOp::from_pauli(const PauliOp& p) {
  // P X_i P† = -X_i iff z(P)_i = 1; P Z_i P† = -Z_i iff x(P)_i = 1.
  CliffordOp c = identity(p.n);
  for (size_t i = 0; i < p.n; ++i) {
    if (p.z.get(i)) c.imgs[i].phase = 2;
    if (p.x.get(i)) c.imgs[p.n + i].phase = 2;
  }
  return c;
}

CliffordOp CliffordOp::permutation(const std::vector<size_t>& perm) {
  size_t n = perm.size();
  CliffordOp c;
  c.n = n;
  c.imgs.assign(2 * n, PauliOp(n));
  for (size_t i = 0; i < n; ++i) {
    c.imgs[i].x.set(perm[i], true);
    c.imgs[n + i].z.set(perm[i], true);
  }
  return c;
}

CliffordOp CliffordOp::from_gate(size_t n, const Gate& g) {
  CliffordOp c = identity(n);
  conj_gate_all(c, g);
  return c;
}

bool CliffordOp::valid_symplectic() const {
  if (imgs.size() != 2 * n) return false;
  for (const auto& p : imgs)
    if (p.n != n || !p.is_hermitian()) return false;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      if (!img_x(i).commutes_with(img_x(j))) return false;
      if (!img_z(i).commutes_with(img_z(j))) return false;
      bool anti = !img_x(i).commutes_with(img_z(j));
      if (anti != (i == j)) return false;
    }
  }
  return true;
}

PauliOp clifford_conjugate(const CliffordOp& c, const PauliOp& p) {
  if (c.n != p.n)
    throw std::invalid_argument("clifford_conjugate: size mismatch");
  PauliOp acc(c.n);
  for (size_t i = 0; i < c.n; ++i)
    if (p.x.get(i)) mul_inplace(acc, c.img_x(i));
  for (size_t i = 0; i < c.n; ++i)
    if (p.z.get(i)) mul_inplace(acc, c.img_z(i));
  acc.phase = (acc.phase + p.phase) & 3;
  return acc;
}

CliffordOp clifford_compose(const CliffordOp& a, const CliffordOp& b) {
  if (a.n != b.n) throw std::invalid_argument("clifford_compose: size mismatch");
  CliffordOp c;
  c.n = a.n;
  c.imgs.reserve(2 * a.n);
  for (const auto& img : b.imgs) c.imgs.push_back(clifford_conjugate(a, img));
  return c;
}

CliffordOp clifford_inverse(const CliffordOp& c) {
  size_t n = c.n;
  // Symplectic matrix of c: row r, column k = component r of the vector
  // (x|z) of image k. Then v(c P c†) = M v(P).
  GF2Mat m(2 * n, 2 * n);
  for (size_t k = 0; k < 2 * n; ++k) {
    const PauliOp& img = c.imgs[k];
    for (size_t q = 0; q < n; ++q) {
      if (img.x.get(q)) m.rows[q].set(k, true);
      if (img.z.get(q)) m.rows[n + q].set(k, true);
    }
  }
  // Gauss-Jordan on [M | I] to invert.
  std::vector<BitVec> aug;
  aug.reserve(2 * n);
  for (size_t i = 0; i < 2 * n; ++i) {
    BitVec e(2 * n);
    e.set(i, true);
    aug.push_back(m.rows[i].concat(e));
  }
  for (size_t col = 0; col < 2 * n; ++col) {
    size_t p = col;
    while (p < 2 * n && !aug[p].get(col)) ++p;
    if (p == 2 * n)
      throw std::invalid_argument("clifford_inverse: singular tableau");
    std::swap(aug[p], aug[col]);
    for (size_t i = 0; i < 2 * n; ++i)
      if (i != col && aug[i].get(col)) aug[i] ^= aug[col];
  }
  CliffordOp inv;
  inv.n = n;
  inv.imgs.reserve(2 * n);
  for (size_t k = 0; k < 2 * n; ++k) {
    // Preimage of generator k: u with M u = e_k, i.e. column k of M^{-1}.
    PauliOp cand(n);
    for (size_t q = 0; q < n; ++q) {
      if (aug[q].get(2 * n + k)) cand.x.set(q, true);
      if (aug[n + q].get(2 * n + k)) cand.z.set(q, true);
    }
    // Make the candidate Hermitian (each Y needs one stored i), then fix
    // its sign so that c maps cand exactly onto +generator k.
    cand.phase = cand.x.dot(cand.z) ? 1 : 0;
    PauliOp back = clifford_conjugate(c, cand);
    assert(back.phase == 0 || back.phase == 2);
    cand.phase = static_cast<uint8_t>((cand.phase + back.phase) & 3);
    inv.imgs.push_back(cand);
  }
  return inv;
}

CliffordOp clifford_tensor(const CliffordOp& a, const CliffordOp& b) {
  size_t n = a.n + b.n;
  CliffordOp c;
  c.n = n;
  c.imgs.assign(2 * n, PauliOp(n));
  PauliOp id_a = PauliOp::identity(a.n), id_b = PauliOp::identity(b.n);
  for (size_t i = 0; i < a.n; ++i) {
    c.imgs[i] = pauli_tensor(a.img_x(i), id_b);
    c.imgs[n + i] = pauli_tensor(a.img_z(i), id_b);
  }
  for (size_t i = 0; i < b.n; ++i) {
    c.imgs[a.n + i] = pauli_tensor(id_a, b.img_x(i));
    c.imgs[n + a.n + i] = pauli_tensor(id_a, b.img_z(i));
  }
  return c;
}

CliffordOp random_clifford(size_t n, Rng& rng) {
  assert(n >= 1);
  // Draw a uniform symplectic basis hyperbolic pair by pair: v uniform
  // nonzero in the remaining subspace, w uniform among its anticommuting
  // partners there, then restrict to the symplectic complement of {v, w}.
  std::vector<PauliOp> basis;
  basis.reserve(2 * n);
  for (size_t i = 0; i < n; ++i) basis.push_back(PauliOp::single(n, i, 'X'));
  for (size_t i = 0; i < n; ++i) basis.push_back(PauliOp::single(n, i, 'Z'));

  auto combo = [n](const std::vector<PauliOp>& bs, const BitVec& coeff) {
    PauliOp acc(n);
    for (size_t i = 0; i < bs.size(); ++i) {
      if (coeff.get(i)) {
        acc.x ^= bs[i].x;
        acc.z ^= bs[i].z;
      }
    }
    return acc;
  };

  std::vector<PauliOp> vs, ws;
  while (!basis.empty()) {
    size_t m = basis.size();
    PauliOp v(n), w(n);
    do {
      v = combo(basis, rng.bits(m));
    } while (v.x.none() && v.z.none());
    do {
      w = combo(basis, rng.bits(m));
    } while (v.commutes_with(w));
    vs.push_back(v);
    ws.push_back(w);
    if (m == 2) break;
    // Project the old basis onto the complement and keep an independent set.
    std::vector<PauliOp> next;
    std::vector<BitVec> reduced;  // echelon copies, (x|z) concatenated
    for (const auto& u : basis) {
      PauliOp pr = u;
      if (!pr.commutes_with(w)) {
        pr.x ^= v.x;
        pr.z ^= v.z;
      }
      if (!pr.commutes_with(v)) {
        pr.x ^= w.x;
        pr.z ^= w.z;
      }
      BitVec row = pr.x.concat(pr.z);
      for (const BitVec& r : reduced) {
        // Reduce by each echelon row's leading bit.
        size_t lead = 0;
        while (!r.get(lead)) ++lead;
        if (row.get(lead)) row ^= r;
      }
      if (row.any()) {
        reduced.push_back(row);
        next.push_back(pr);
      }
    }
    assert(next.size() == m - 2);
    basis = std::move(next);
  }

  CliffordOp c;
  c.n = n;
  c.imgs.assign(2 * n, PauliOp(n));
  auto hermitian_sign = [&rng](PauliOp& p) {
    p.phase = static_cast<uint8_t>((p.x.dot(p.z) ? 1 : 0) + (rng.bit() ? 2 : 0));
  };
  for (size_t i = 0; i < n; ++i) {
    c.imgs[i] = vs[i];
    hermitian_sign(c.imgs[i]);
    c.imgs[n + i] = ws[i];
    hermitian_sign(c.imgs[n + i]);
  }
  assert(c.valid_symplectic());
  return c;
}

std::vector<Gate> clifford_to_circuit(const CliffordOp& c) {
  size_t n = c.n;
  CliffordOp t = c;
  std::vector<Gate> applied;
  auto emit = [&](GateKind k, size_t a, size_t b = 0) {
    Gate g{k, a, b};
    conj_gate_all(t, g);
    applied.push_back(g);
  };

  for (size_t i = 0; i < n; ++i) {
    // Bring the image of X_i to exactly +X_i.
    {
      PauliOp& p = t.imgs[i];
      if (!p.x.get(i)) {
        size_t j = i;
        while (j < n && !p.x.get(j)) ++j;
        if (j < n) {
          emit(GateKind::CNOT, j, i);
        } else {
          j = i;
          while (!p.z.get(j)) ++j;
          emit(GateKind::H, j);
          if (j != i) emit(GateKind::CNOT, j, i);
        }
      }
      for (size_t j = i + 1; j < n; ++j)
        if (p.x.get(j)) emit(GateKind::CNOT, i, j);
      for (size_t j = i + 1; j < n; ++j)
        if (p.z.get(j)) {
          emit(GateKind::H, j);
          emit(GateKind::CNOT, i, j);
        }
      if (p.z.get(i)) emit(GateKind::S, i);
      if (p.phase == 2) emit(GateKind::Z, i);
      assert(t.imgs[i] == PauliOp::single(n, i, 'X'));
    }
    // Bring the image of Z_i to exactly +Z_i while fixing X_i.
    {
      PauliOp& q = t.imgs[n + i];
      assert(q.z.get(i));
      for (size_t j = i + 1; j < n; ++j) {
        if (q.x.get(j) && q.z.get(j)) emit(GateKind::S, j);
        if (q.x.get(j)) emit(GateKind::H, j);
      }
      for (size_t j = i + 1; j < n; ++j)
        if (q.z.get(j)) emit(GateKind::CNOT, j, i);
      if (q.x.get(i)) {
        // S·H·S maps X -> X and Y -> ±Z on qubit i.
        emit(GateKind::S, i);
        emit(GateKind::H, i);
        emit(GateKind::S, i);
      }
      if (q.phase == 2) emit(GateKind::X, i);
      assert(t.imgs[n + i] == PauliOp::single(n, i, 'Z'));
      assert(t.imgs[i] == PauliOp::single(n, i, 'X'));
    }
  }
  // applied reduces c to the identity, so c = applied reversed and inverted.
  std::vector<Gate> circuit;
  circuit.reserve(applied.size());
  for (auto it = applied.rbegin(); it != applied.rend(); ++it)
    circuit.push_back(inverse_gate(*it));
  return circuit;
}

std::string to_string(const CliffordOp& c) {
  std::ostringstream os;
  for (size_t i = 0; i < c.n; ++i)
    os << "X" << i << " -> " << to_string(c.img_x(i)) << "\n";
  for (size_t i = 0; i < c.n; ++i)
    os << "Z" << i << " -> " << to_string(c.img_z(i)) << "\n";
  return os.str();
}

}  // namespace aqsim
