#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aqsim/aqa.hpp"

using namespace aqsim;

namespace {

bool bell_intact(QuantumState& st, size_t ref, size_t out, Rng& rng) {
  bool xx = st.measure_pauli({ref, out}, pauli_from_string("+XX"), rng);
  bool zz = st.measure_pauli({ref, out}, pauli_from_string("+ZZ"), rng);
  return !xx && !zz;
}

// One honest Clifford-form run: EPR-referenced plaintext of l qubits.
// Returns the verdict; on acceptance the receiver decodes and the Bell
// pairs are checked.
struct HonestRun {
  bool accepted = false;
  size_t u = 0;
  AqaReport report;
  bool plaintext_intact = false;
};

HonestRun honest_clifford_run(size_t l, size_t t, Rng& rng) {
  QuantumState st(Backend::stabilizer);
  CliffordKey key = clifford_key(l, t, rng);
  auto [portals, secret] = aqa_setup(st, l, t, key, rng);

  auto [ref, msg] = st.alloc_epr(l);
  auto traps = st.alloc_zeros(t);
  c_enc(st, key, msg, traps);
  std::vector<size_t> input = msg;
  input.insert(input.end(), traps.begin(), traps.end());

  AqaReport rep = aqa_send(st, portals, input, rng);
  AqaVerdict v = aqa_check(secret, rep);
  HonestRun run;
  run.accepted = v.accepted;
  run.u = v.u;
  run.report = rep;
  if (!v.accepted) return run;

  aqa_receive(st, portals, v);
  // Receiver holds E′·(ρ ⊗ 0^t): strip the fresh key and look.
  st.apply_clifford(portals.r, clifford_inverse(v.eprime));
  std::vector<size_t> out_traps(portals.r.begin() + l, portals.r.end());
  run.plaintext_intact = st.measure_z(out_traps, rng).none();
  for (size_t i = 0; i < l; ++i)
    run.plaintext_intact =
        bell_intact(st, ref[i], portals.r[i], rng) && run.plaintext_intact;
  return run;
}

// Cipher position a plain wire is routed to, read off the key's generator
// images (X image for Z-measured wires, its z-support for |+⟩ traps).
size_t routed_position(const CliffordOp& e, size_t plain_wire, bool plus_trap) {
  const PauliOp& img = e.imgs[plain_wire];
  const BitVec& supp = plus_trap ? img.z : img.x;
  size_t pos = 0, cnt = 0;
  for (size_t i = 0; i < e.n; ++i)
    if (supp.get(i)) {
      pos = i;
      ++cnt;
    }
  REQUIRE(cnt == 1);
  return pos;
}

// Trap-form run with w X-flips applied to the ciphertext at the routed
// positions of the given plain wires.
struct TrapRun {
  AqaVerdict verdict;
  bool plaintext_intact = false;
};

TrapRun trap_run(const CssCode& code, const std::vector<size_t>& flip_wires,
                 const BitVec* rc_offset, Rng& rng) {
  size_t q = code.q;
  QuantumState st(Backend::stabilizer);
  auto [portals, secret] = aqa_setup_trap(st, code, rng);

  auto [ref, msg] = st.alloc_epr(1);
  auto rest = st.alloc_zeros(3 * q - 1);
  std::vector<size_t> input = msg;
  input.insert(input.end(), rest.begin(), rest.end());
  st.apply_clifford(input, secret.e);

  for (size_t wire : flip_wires) {
    bool plus_trap = wire >= 2 * q;
    size_t pos = routed_position(secret.e, wire, plus_trap);
    st.apply_gate({GateKind::X, input[pos]});
  }

  AqaReport rep = aqa_send(st, portals, input, rng);
  if (rc_offset) rep.r_c ^= *rc_offset;
  TrapRun run;
  run.verdict = aqa_check(secret, rep);
  if (!run.verdict.accepted) return run;

  aqa_receive(st, portals, run.verdict);
  st.apply_clifford(portals.r, clifford_inverse(run.verdict.eprime));
  std::vector<size_t> out_rest(portals.r.begin() + 1, portals.r.end());
  run.plaintext_intact = st.measure_z(out_rest, rng).none() &&
                         bell_intact(st, ref[0], portals.r[0], rng);
  return run;
}

}  // namespace

TEST_CASE("honest run is always accepted with u = 0 and intact plaintext") {
  Rng rng(90);
  for (int i = 0; i < 40; ++i) {
    HonestRun run = honest_clifford_run(2, 4, rng);
    REQUIRE(run.accepted);
    CHECK(run.u == 0);
    CHECK(run.plaintext_intact);
  }
}

TEST_CASE("report and sender-portal marginals are uniform") {
  Rng rng(91);
  const size_t l = 1, t = 3, n = l + t;
  const int N = 800;
  std::vector<int> ones(2 * n + t, 0);
  std::vector<int> portal_ones(n, 0);
  for (int trial = 0; trial < N; ++trial) {
    HonestRun run = honest_clifford_run(l, t, rng);
    for (size_t i = 0; i < n; ++i) {
      ones[i] += run.report.r_z.get(i);
      ones[n + i] += run.report.r_x.get(i);
    }
    for (size_t i = 0; i < t; ++i) ones[2 * n + i] += run.report.r_c.get(i);

    // Separately: after setup alone, the sending portal reads uniform bits.
    QuantumState st(Backend::stabilizer);
    CliffordKey key = clifford_key(l, t, rng);
    auto [portals, secret] = aqa_setup(st, l, t, key, rng);
    BitVec b = st.measure_z(portals.s, rng);
    for (size_t i = 0; i < n; ++i) portal_ones[i] += b.get(i);
  }
  double tol = 5 * std::sqrt(0.25 / N);
  for (int c : ones) CHECK(std::abs(c / double(N) - 0.5) < tol);
  for (int c : portal_ones) CHECK(std::abs(c / double(N) - 0.5) < tol);
}

TEST_CASE("portals are consumed by the first send") {
  Rng rng(92);
  QuantumState st(Backend::stabilizer);
  CliffordKey key = clifford_key(1, 2, rng);
  auto [portals, secret] = aqa_setup(st, 1, 2, key, rng);
  auto input = st.alloc_zeros(3);
  c_enc(st, key, {input[0]}, {input[1], input[2]});
  aqa_send(st, portals, input, rng);
  CHECK_THROWS_AS(aqa_send(st, portals, input, rng), std::logic_error);
}

TEST_CASE("x-report offset: acceptance coincides with range membership") {
  Rng rng(93);
  const size_t l = 2, t = 6, n = l + t;
  const int N = 2000;
  int accepted = 0;
  for (int trial = 0; trial < N; ++trial) {
    QuantumState st(Backend::stabilizer);
    CliffordKey key = clifford_key(l, t, rng);
    auto [portals, secret] = aqa_setup(st, l, t, key, rng);
    auto msg = st.alloc_zeros(l);
    auto traps = st.alloc_zeros(t);
    c_enc(st, key, msg, traps);
    std::vector<size_t> input = msg;
    input.insert(input.end(), traps.begin(), traps.end());

    AqaReport rep = aqa_send(st, portals, input, rng);
    BitVec e = rng.nonzero_bits(n);
    rep.r_x ^= e;
    AqaVerdict v = aqa_check(secret, rep);
    if (v.accepted) ++accepted;

    BitVec probe(2 * n + t);
    for (size_t i = 0; i < n; ++i) probe.set(n + i, e.get(i));
    CHECK(v.accepted == range_oracle(secret.etilde, l, probe));
  }
  // Identification rate ≥ 1 − 2^{−t} − 3σ over keys.
  double p = std::pow(2.0, -double(t));
  double sigma = std::sqrt(p * (1 - p) / N);
  CHECK(accepted / double(N) <= p + 3 * sigma);
}

TEST_CASE("flipping the trap announcement is always caught") {
  Rng rng(94);
  for (int trial = 0; trial < 30; ++trial) {
    QuantumState st(Backend::stabilizer);
    CliffordKey key = clifford_key(1, 4, rng);
    auto [portals, secret] = aqa_setup(st, 1, 4, key, rng);
    auto input = st.alloc_zeros(5);
    c_enc(st, key, {input[0]},
          {input[1], input[2], input[3], input[4]});
    AqaReport rep = aqa_send(st, portals, input, rng);
    BitVec gamma = rng.nonzero_bits(4);
    rep.r_c ^= gamma;
    AqaVerdict v = aqa_check(secret, rep);
    REQUIRE_FALSE(v.accepted);
    CHECK(v.u == gamma.popcount());
    CHECK(v.party == "sender");
    // Identification releases no key material.
    CHECK(v.eprime.n == 0);
    CHECK(v.correction.n == 0);
    CHECK_THROWS_AS(aqa_receive(st, portals, v), std::logic_error);
  }
}

TEST_CASE("range oracle: zero, constructed members, and random rate") {
  Rng rng(95);
  const size_t l = 2, t = 6, n = l + t;
  int members = 0;
  const int N = 4000;
  for (int trial = 0; trial < 40; ++trial) {
    CliffordOp etilde = random_clifford(n, rng);
    CHECK(range_oracle(etilde, l, BitVec(2 * n + t)));

    // Constructed member: γ = image of a random δ.
    BitVec delta = rng.bits(2 * n);
    PauliOp p(n);
    p.z = delta.slice(0, n);
    p.x = delta.slice(n, 2 * n);
    p.phase = p.x.dot(p.z) ? 1 : 0;
    PauliOp img = clifford_conjugate(clifford_inverse(etilde), p);
    BitVec v = delta.concat(img.x.slice(l, n));
    CHECK(range_oracle(etilde, l, v));
  }
  Rng rate_rng(951);
  CliffordOp etilde = random_clifford(n, rate_rng);
  for (int trial = 0; trial < N; ++trial) {
    BitVec v = rate_rng.nonzero_bits(2 * n + t);
    if (range_oracle(etilde, l, v)) ++members;
  }
  double p = std::pow(2.0, -double(t));
  double sigma = std::sqrt(p * (1 - p) / N);
  CHECK(std::abs(members / double(N) - p) < 3 * sigma);
}

TEST_CASE("verdicts ignore phases and the checking pad's z-part") {
  Rng rng(96);
  for (int trial = 0; trial < 60; ++trial) {
    QuantumState st(Backend::stabilizer);
    CliffordKey key = clifford_key(1, 3, rng);
    auto [portals, secret] = aqa_setup(st, 1, 3, key, rng);
    auto input = st.alloc_zeros(4);
    c_enc(st, key, {input[0]}, {input[1], input[2], input[3]});
    AqaReport rep = aqa_send(st, portals, input, rng);
    if (rng.bit()) rep.r_x ^= rng.nonzero_bits(4);  // half the runs attacked

    AqaSecret tweaked = secret;
    tweaked.pc.z = rng.bits(3);
    tweaked.pc.phase = uint8_t(rng.below(4));
    tweaked.pm.phase ^= 2;
    tweaked.ps.phase ^= 2;
    tweaked.pr.phase ^= 2;

    AqaVerdict a = aqa_check(secret, rep);
    AqaVerdict b = aqa_check(tweaked, rep);
    CHECK(a.accepted == b.accepted);
    CHECK(a.u == b.u);
    if (a.accepted) {
      CHECK(a.correction.x == b.correction.x);
      CHECK(a.correction.z == b.correction.z);
    }
  }
}

TEST_CASE("after identification the receiver register stays mixed") {
  Rng rng(97);
  const size_t l = 1, t = 3, n = l + t;
  const int N = 600;
  std::vector<int> z_ones(n, 0), x_ones(n, 0);
  for (int trial = 0; trial < N; ++trial) {
    QuantumState st(Backend::stabilizer);
    CliffordKey key = clifford_key(l, t, rng);
    auto [portals, secret] = aqa_setup(st, l, t, key, rng);
    auto input = st.alloc_zeros(n);
    c_enc(st, key, {input[0]}, {input[1], input[2], input[3]});
    AqaReport rep = aqa_send(st, portals, input, rng);
    rep.r_c ^= rng.nonzero_bits(t);
    AqaVerdict v = aqa_check(secret, rep);
    REQUIRE_FALSE(v.accepted);
    BitVec bz = st.measure_z(portals.r, rng);
    BitVec bx = st.measure_x(portals.r, rng);
    for (size_t i = 0; i < n; ++i) {
      z_ones[i] += bz.get(i);
      x_ones[i] += bx.get(i);
    }
  }
  double tol = 5 * std::sqrt(0.25 / N);
  for (int c : z_ones) CHECK(std::abs(c / double(N) - 0.5) < tol);
  for (int c : x_ones) CHECK(std::abs(c / double(N) - 0.5) < tol);
}

TEST_CASE("chained sends stay decodable under the handed-over key") {
  Rng rng(98);
  const size_t l = 1, t = 3;
  for (int trial = 0; trial < 15; ++trial) {
    QuantumState st(Backend::stabilizer);
    CliffordKey key = clifford_key(l, t, rng);
    auto [p1, s1] = aqa_setup(st, l, t, key, rng);

    auto [ref, msg] = st.alloc_epr(l);
    auto traps = st.alloc_zeros(t);
    c_enc(st, key, msg, traps);
    std::vector<size_t> input = msg;
    input.insert(input.end(), traps.begin(), traps.end());

    AqaVerdict v1 = aqa_check(s1, aqa_send(st, p1, input, rng));
    REQUIRE(v1.accepted);
    aqa_receive(st, p1, v1);

    // The receiving portal now holds a ciphertext under E′ — feed it to a
    // second instance keyed by E′.
    CliffordKey key2{l, t, v1.eprime};
    auto [p2, s2] = aqa_setup(st, l, t, key2, rng);
    AqaVerdict v2 = aqa_check(s2, aqa_send(st, p2, p1.r, rng));
    REQUIRE(v2.accepted);
    aqa_receive(st, p2, v2);

    st.apply_clifford(p2.r, clifford_inverse(v2.eprime));
    std::vector<size_t> out_traps(p2.r.begin() + l, p2.r.end());
    CHECK(st.measure_z(out_traps, rng).none());
    CHECK(bell_intact(st, ref[0], p2.r[0], rng));
  }
}

TEST_CASE("trap form: honest run has u = 0 and decodes cleanly") {
  CssCode code = steane();
  Rng rng(99);
  for (int trial = 0; trial < 8; ++trial) {
    TrapRun run = trap_run(code, {}, nullptr, rng);
    REQUIRE(run.verdict.accepted);
    CHECK(run.verdict.u == 0);
    CHECK(run.plaintext_intact);
  }
}

TEST_CASE("trap form: sub-distance flips on traps are tolerated") {
  CssCode code = steane();
  Rng rng(100);
  size_t q = code.q;
  for (int trial = 0; trial < 6; ++trial) {
    // w = 1, 2 flips on |0⟩-trap wires: u counts them exactly, still passes.
    for (size_t w = 1; w < code.d; ++w) {
      std::vector<size_t> wires;
      for (size_t i = 0; i < w; ++i) wires.push_back(q + 2 * i);
      TrapRun run = trap_run(code, wires, nullptr, rng);
      REQUIRE(run.verdict.accepted);
      CHECK(run.verdict.u == w);
      CHECK(run.plaintext_intact);
    }
    // X on a |+⟩-trap wire is invisible.
    TrapRun plus = trap_run(code, {2 * q + 3}, nullptr, rng);
    REQUIRE(plus.verdict.accepted);
    CHECK(plus.verdict.u == 0);
    CHECK(plus.plaintext_intact);
    // d flips cross the threshold.
    TrapRun caught = trap_run(code, {q, q + 1, q + 2}, nullptr, rng);
    REQUIRE_FALSE(caught.verdict.accepted);
    CHECK(caught.verdict.u == code.d);
  }
}

TEST_CASE("trap form: trap-announcement offsets count exactly") {
  CssCode code = steane();
  Rng rng(101);
  size_t q = code.q;
  for (size_t w : {size_t(1), size_t(2), size_t(3), size_t(5)}) {
    BitVec gamma(2 * q);
    for (size_t i = 0; i < w; ++i) gamma.set(3 * i, true);
    TrapRun run = trap_run(code, {}, &gamma, rng);
    CHECK(run.verdict.u == w);
    CHECK(run.verdict.accepted == (w < code.d));
    if (run.verdict.accepted) CHECK(run.plaintext_intact);
  }
}

TEST_CASE("same seed reproduces reports and verdicts byte for byte") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    HonestRun r = honest_clifford_run(2, 4, rng);
    return report_to_json(r.report).dump();
  };
  CHECK(run(1234) == run(1234));
  CHECK(run(1234) != run(1235));  // and the seed actually matters
}

TEST_CASE("report and verdict serialization") {
  Rng rng(102);
  HonestRun run = honest_clifford_run(2, 3, rng);
  nlohmann::json j = report_to_json(run.report);
  AqaReport back = report_from_json(j, 5, 3);
  CHECK(back.r_z == run.report.r_z);
  CHECK(back.r_x == run.report.r_x);
  CHECK(back.r_c == run.report.r_c);

  AqaVerdict ok;
  ok.accepted = true;
  CHECK(verdict_to_json(ok) == nlohmann::json{{"verdict", "accepted"}});
  AqaVerdict bad;
  bad.accepted = false;
  bad.party = "sender";
  CHECK(verdict_to_json(bad) ==
        nlohmann::json({{"verdict", "identified"}, {"party", "sender"}}));
}
