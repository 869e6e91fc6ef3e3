#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "aqsim/clifford.hpp"
#include "aqsim/pauli.hpp"
#include "oracle_dense.hpp"

using namespace aqsim;

namespace {

// Random Clifford built as an explicit gate circuit: the tableau goes through
// the library, the matrix goes through the independent oracle.
std::vector<Gate> random_circuit(size_t n, size_t len, Rng& rng) {
  std::vector<Gate> gs;
  for (size_t i = 0; i < len; ++i) {
    switch (rng.below(n > 1 ? 4 : 3)) {
      case 0: gs.push_back({GateKind::H, rng.below(n)}); break;
      case 1: gs.push_back({GateKind::S, rng.below(n)}); break;
      case 2: gs.push_back({GateKind::SDG, rng.below(n)}); break;
      default: {
        size_t a = rng.below(n), b = rng.below(n - 1);
        if (b >= a) ++b;
        gs.push_back({GateKind::CNOT, a, b});
      }
    }
  }
  return gs;
}

CliffordOp tableau_of(size_t n, const std::vector<Gate>& gs) {
  CliffordOp c = CliffordOp::identity(n);
  for (const auto& g : gs) c = clifford_compose(CliffordOp::from_gate(n, g), c);
  return c;
}

}  // namespace

TEST_CASE("pauli compose: single-qubit identities") {
  PauliOp X = PauliOp::single(1, 0, 'X');
  PauliOp Z = PauliOp::single(1, 0, 'Z');
  CHECK(pauli_compose(X, X).is_identity());
  PauliOp XZ = pauli_compose(X, Z);
  CHECK(XZ.x.get(0));
  CHECK(XZ.z.get(0));
  CHECK(XZ.phase == 0);          // X·Z is stored with zero i-exponent
  CHECK(to_string(XZ) == "-iY");  // and equals -iY
}

TEST_CASE("pauli compose matches the dense matrix product") {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    PauliOp a = random_pauli(8, rng), b = random_pauli(8, rng);
    a.phase = static_cast<uint8_t>(rng.below(4));
    b.phase = static_cast<uint8_t>(rng.below(4));
    PauliOp c = pauli_compose(a, b);
    CHECK(oracle::approx(oracle::pauli_matrix(c),
                         oracle::mul(oracle::pauli_matrix(a),
                                     oracle::pauli_matrix(b))));
    // P · P† = I with exact phase.
    CHECK(pauli_compose(a, a.adjoint()).is_identity());
  }
}

TEST_CASE("pauli compose is associative") {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    PauliOp a = random_pauli(5, rng), b = random_pauli(5, rng),
            c = random_pauli(5, rng);
    CHECK(pauli_compose(a, pauli_compose(b, c)) ==
          pauli_compose(pauli_compose(a, b), c));
  }
  PauliOp a = random_pauli(3, rng), b = random_pauli(4, rng);
  CHECK_THROWS(pauli_compose(a, b));
}

TEST_CASE("pauli text form round-trips") {
  Rng rng(13);
  CHECK(to_string(PauliOp::single(4, 2, 'Y')) == "+IIYI");
  CHECK(to_string(PauliOp::identity(2)) == "+II");
  for (int t = 0; t < 100; ++t) {
    PauliOp p = random_pauli(6, rng);
    p.phase = static_cast<uint8_t>(rng.below(4));
    CHECK(pauli_from_string(to_string(p)) == p);
  }
  CHECK(pauli_from_string("-iYZ").n == 2);
}

TEST_CASE("elementary conjugation table matches the oracle") {
  // Every 2-qubit Pauli through every elementary gate, exact phases.
  std::vector<Gate> gates = {{GateKind::H, 0},    {GateKind::S, 1},
                             {GateKind::SDG, 0},  {GateKind::X, 1},
                             {GateKind::Z, 0},    {GateKind::CNOT, 0, 1},
                             {GateKind::CNOT, 1, 0}};
  for (const Gate& g : gates) {
    oracle::CMat u = oracle::gate_matrix(2, g);
    for (int code = 0; code < 16; ++code) {
      for (int ph = 0; ph < 4; ++ph) {
        PauliOp p(2);
        p.x.set(0, code & 1);
        p.x.set(1, code & 2);
        p.z.set(0, code & 4);
        p.z.set(1, code & 8);
        p.phase = static_cast<uint8_t>(ph);
        PauliOp q = p;
        conjugate_by_gate(q, g);
        CHECK(oracle::approx(
            oracle::pauli_matrix(q),
            oracle::mul(oracle::mul(u, oracle::pauli_matrix(p)),
                        oracle::dagger(u))));
      }
    }
  }
}

TEST_CASE("clifford conjugation: textbook cases") {
  CliffordOp h = CliffordOp::from_gate(1, {GateKind::H, 0});
  CHECK(to_string(clifford_conjugate(h, PauliOp::single(1, 0, 'X'))) == "+Z");
  CHECK(to_string(clifford_conjugate(h, PauliOp::single(1, 0, 'Z'))) == "+X");
  CliffordOp id = CliffordOp::identity(3);
  Rng rng(14);
  for (int t = 0; t < 20; ++t) {
    PauliOp p = random_pauli(3, rng);
    CHECK(clifford_conjugate(id, p) == p);
  }
}

TEST_CASE("clifford conjugate/compose/inverse match the dense oracle") {
  Rng rng(15);
  for (int t = 0; t < 12; ++t) {
    size_t n = 1 + rng.below(5);  // up to 2^5 = 32-dim matrices, and one 6
    if (t == 0) n = 6;
    auto gs = random_circuit(n, 8 * n, rng);
    CliffordOp c = tableau_of(n, gs);
    CHECK(c.valid_symplectic());
    oracle::CMat u = oracle::circuit_matrix(n, gs);

    // Conjugation of a random phase-tracked Pauli.
    PauliOp p = random_pauli(n, rng);
    p.phase = static_cast<uint8_t>(2 * rng.below(2));
    PauliOp q = clifford_conjugate(c, p);
    CHECK(oracle::approx(
        oracle::pauli_matrix(q),
        oracle::mul(oracle::mul(u, oracle::pauli_matrix(p)),
                    oracle::dagger(u))));

    // Homomorphism: images multiply like the operators.
    PauliOp r = random_pauli(n, rng);
    CHECK(clifford_conjugate(c, pauli_compose(p, r)) ==
          pauli_compose(clifford_conjugate(c, p), clifford_conjugate(c, r)));

    // Inverse undoes conjugation with exact phases.
    CliffordOp inv = clifford_inverse(c);
    CHECK(inv.valid_symplectic());
    CHECK(clifford_conjugate(inv, q) == p);
    CHECK(clifford_compose(inv, c) == CliffordOp::identity(n));
    CHECK(clifford_compose(c, inv) == CliffordOp::identity(n));
  }
}

TEST_CASE("clifford compose agrees with the dense product") {
  Rng rng(16);
  for (int t = 0; t < 8; ++t) {
    size_t n = 1 + rng.below(5);
    auto g1 = random_circuit(n, 6 * n, rng), g2 = random_circuit(n, 6 * n, rng);
    CliffordOp a = tableau_of(n, g1), b = tableau_of(n, g2);
    CliffordOp ab = clifford_compose(a, b);
    CHECK(ab.valid_symplectic());
    // a∘b corresponds to applying g2 first, then g1.
    std::vector<Gate> seq = g2;
    seq.insert(seq.end(), g1.begin(), g1.end());
    CliffordOp direct = tableau_of(n, seq);
    CHECK(ab == direct);
  }
}

TEST_CASE("clifford tensor acts blockwise") {
  CliffordOp h = CliffordOp::from_gate(1, {GateKind::H, 0});
  CliffordOp id = CliffordOp::identity(1);
  CliffordOp hi = clifford_tensor(h, id);
  CHECK(hi.valid_symplectic());
  PauliOp xx = pauli_from_string("+XX");
  CHECK(to_string(clifford_conjugate(hi, xx)) == "+ZX");

  Rng rng(17);
  CliffordOp a = random_clifford(2, rng), b = random_clifford(3, rng);
  CliffordOp ab = clifford_tensor(a, b);
  CHECK(ab.valid_symplectic());
  PauliOp p = random_pauli(2, rng), q = random_pauli(3, rng);
  CHECK(clifford_conjugate(ab, pauli_tensor(p, q)) ==
        pauli_tensor(clifford_conjugate(a, p), clifford_conjugate(b, q)));
}

TEST_CASE("pauli-as-clifford and permutation tableaus") {
  Rng rng(18);
  PauliOp p = random_pauli(4, rng);
  CliffordOp cp = CliffordOp::from_pauli(p);
  CHECK(cp.valid_symplectic());
  PauliOp q = random_pauli(4, rng);
  PauliOp lhs = clifford_conjugate(cp, q);
  // P Q P† = ± Q with the sign given by (anti)commutation.
  PauliOp rhs = q;
  if (!p.commutes_with(q)) rhs.phase = (rhs.phase + 2) & 3;
  CHECK(lhs == rhs);

  std::vector<size_t> perm = {2, 0, 3, 1};
  CliffordOp cperm = CliffordOp::permutation(perm);
  CHECK(cperm.valid_symplectic());
  PauliOp r = random_pauli(4, rng);
  PauliOp img = clifford_conjugate(cperm, r);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(img.x.get(perm[i]) == r.x.get(i));
    CHECK(img.z.get(perm[i]) == r.z.get(i));
  }
}

TEST_CASE("circuit synthesis reproduces the tableau") {
  Rng rng(19);
  for (int t = 0; t < 30; ++t) {
    size_t n = 1 + rng.below(6);
    CliffordOp c = random_clifford(n, rng);
    auto circ = clifford_to_circuit(c);
    CHECK(tableau_of(n, circ) == c);
  }
  // And against the dense oracle on small sizes: U X_i U† == img_x(i).
  for (int t = 0; t < 6; ++t) {
    size_t n = 1 + rng.below(3);
    CliffordOp c = random_clifford(n, rng);
    oracle::CMat u = oracle::circuit_matrix(n, clifford_to_circuit(c));
    for (size_t i = 0; i < n; ++i) {
      CHECK(oracle::approx(
          oracle::mul(oracle::mul(u, oracle::pauli_matrix(
                                          PauliOp::single(n, i, 'X'))),
                      oracle::dagger(u)),
          oracle::pauli_matrix(c.img_x(i))));
      CHECK(oracle::approx(
          oracle::mul(oracle::mul(u, oracle::pauli_matrix(
                                          PauliOp::single(n, i, 'Z'))),
                      oracle::dagger(u)),
          oracle::pauli_matrix(c.img_z(i))));
    }
  }
}

TEST_CASE("random_clifford is uniform on the 24 single-qubit Cliffords") {
  // Enumeration oracle: all pairs (image of X, image of Z) of anticommuting
  // signed Paulis. 3 axis choices x 2 remaining axes x 4 signs = 24.
  std::set<std::string> group;
  const char axes[3] = {'X', 'Y', 'Z'};
  for (char ax : axes)
    for (char az : axes) {
      if (ax == az) continue;
      for (int sx = 0; sx < 2; ++sx)
        for (int sz = 0; sz < 2; ++sz) {
          PauliOp ix = PauliOp::single(1, 0, ax);
          PauliOp iz = PauliOp::single(1, 0, az);
          ix.phase = (ix.phase + 2 * sx) & 3;
          iz.phase = (iz.phase + 2 * sz) & 3;
          group.insert(to_string(ix) + "|" + to_string(iz));
        }
    }
  REQUIRE(group.size() == 24);

  Rng rng(20);
  std::map<std::string, int> counts;
  const int N = 100000;
  for (int t = 0; t < N; ++t) {
    CliffordOp c = random_clifford(1, rng);
    counts[to_string(c.img_x(0)) + "|" + to_string(c.img_z(0))]++;
  }
  CHECK(counts.size() == 24);
  double expect = N / 24.0;
  double sigma = std::sqrt(N * (1.0 / 24) * (23.0 / 24));
  for (auto& [key, cnt] : counts) {
    CHECK(group.count(key) == 1);
    CHECK(std::abs(cnt - expect) < 3.5 * sigma);
  }
  // Determinism: same seed, same tableau.
  Rng r1(77), r2(77);
  CHECK(random_clifford(3, r1) == random_clifford(3, r2));
}

TEST_CASE("random_clifford images of a fixed Pauli are uniform (n=2)") {
  // Every signed non-identity Hermitian 2-qubit Pauli is a valid image of
  // X⊗I; enumerate them as the support oracle.
  std::set<std::string> support;
  for (int code = 1; code < 16; ++code)
    for (int s = 0; s < 2; ++s) {
      PauliOp p(2);
      p.x.set(0, code & 1);
      p.x.set(1, code & 2);
      p.z.set(0, code & 4);
      p.z.set(1, code & 8);
      p.phase = static_cast<uint8_t>((p.x.dot(p.z) ? 1 : 0) + 2 * s);
      REQUIRE(p.is_hermitian());
      support.insert(to_string(p));
    }
  REQUIRE(support.size() == 30);

  Rng rng(21);
  std::map<std::string, int> counts;
  const int N = 60000;
  PauliOp xi = pauli_from_string("+XI");
  for (int t = 0; t < N; ++t)
    counts[to_string(clifford_conjugate(random_clifford(2, rng), xi))]++;
  CHECK(counts.size() == 30);
  double expect = N / 30.0;
  double sigma = std::sqrt(N * (1.0 / 30) * (29.0 / 30));
  for (auto& [key, cnt] : counts) {
    CHECK(support.count(key) == 1);
    CHECK(std::abs(cnt - expect) < 3.5 * sigma);
  }
}

TEST_CASE("random_pauli marginals") {
  Rng rng(22);
  int counts[4] = {0};
  const int N = 100000;
  for (int t = 0; t < N; ++t) {
    PauliOp p = random_pauli(1, rng);
    counts[(p.x.get(0) ? 1 : 0) + (p.z.get(0) ? 2 : 0)]++;
    CHECK(p.phase == 0);
  }
  double sigma = std::sqrt(N * 0.25 * 0.75);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(counts[k] - N / 4.0) < 3 * sigma);

  // Per-bit marginal of x(P) at n=8.
  int bitcount = 0;
  for (int t = 0; t < 10000; ++t) bitcount += random_pauli(8, rng).x.popcount();
  CHECK(std::abs(bitcount - 40000) < 3 * std::sqrt(80000 * 0.25));
}
