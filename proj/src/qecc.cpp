#include "aqsim/qecc.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <stdexcept>

namespace aqsim {

namespace {

BitVec bits_from_string(const std::string& s, size_t want, const char* what) {
  if (s.size() != want)
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(want) + " bits, got " +
                                std::to_string(s.size()));
  BitVec v(want);
  for (size_t i = 0; i < want; ++i) {
    if (s[i] != '0' && s[i] != '1')
      throw std::invalid_argument(std::string(what) + ": bad character '" +
                                  s[i] + "'");
    v.set(i, s[i] == '1');
  }
  return v;
}

PauliOp x_type(size_t n, const BitVec& support) {
  PauliOp p(n);
  p.x = support;
  return p;
}

PauliOp z_type(size_t n, const BitVec& support) {
  PauliOp p(n);
  p.z = support;
  return p;
}

// (x|z) layout with the halves swapped, so that symp(v, u) = v · swapped(u).
BitVec swapped_halves(const PauliOp& p) { return p.z.concat(p.x); }

// Completes the pinned generator images (logicals at slot 0, stabilizer
// generators as the ancilla Z images) to a full symplectic tableau: each
// remaining X image is any solution of the linear anticommutation pattern.
void build_encoder(CssCode& code) {
  size_t q = code.q;
  std::vector<PauliOp> stab;
  for (const auto& row : code.hx.rows) stab.push_back(x_type(q, row));
  for (const auto& row : code.hz.rows) stab.push_back(z_type(q, row));
  assert(stab.size() == q - 1);

  CliffordOp enc;
  enc.n = q;
  enc.imgs.assign(2 * q, PauliOp(q));
  enc.imgs[0] = x_type(q, code.lx);
  enc.imgs[q] = z_type(q, code.lz);
  for (size_t i = 1; i < q; ++i) enc.imgs[q + i] = stab[i - 1];

  for (size_t i = 1; i < q; ++i) {
    GF2Mat sys(0, 2 * q);
    BitVec rhs(q + i);
    size_t r = 0;
    for (size_t j = 0; j < q; ++j, ++r) {
      sys.rows.push_back(swapped_halves(enc.imgs[q + j]));
      rhs.set(r, j == i);
    }
    for (size_t j = 0; j < i; ++j, ++r)
      sys.rows.push_back(swapped_halves(enc.imgs[j]));
    auto v = sys.solve(rhs);
    assert(v.has_value());
    PauliOp& img = enc.imgs[i];
    img.x = v->slice(0, q);
    img.z = v->slice(q, 2 * q);
    img.phase = img.x.dot(img.z) ? 1 : 0;
  }
  assert(enc.valid_symplectic());
  code.enc = std::move(enc);
}

void validate(const CssCode& code) {
  if (code.q < 2) throw std::invalid_argument("css: q must be at least 2");
  if (code.d < 1 || code.d > code.q)
    throw std::invalid_argument("css: distance out of range");
  if (code.hx.cols != code.q || code.hz.cols != code.q)
    throw std::invalid_argument("css: stabilizer row length must equal q");
  if (code.hx.row_count() + code.hz.row_count() != code.q - 1)
    throw std::invalid_argument(
        "css: need q-1 stabilizer generators for one logical qubit");
  if (code.lx.size() != code.q || code.lz.size() != code.q)
    throw std::invalid_argument("css: logical operator length must equal q");
  for (const auto& rx : code.hx.rows)
    for (const auto& rz : code.hz.rows)
      if (rx.dot(rz))
        throw std::invalid_argument("css: X and Z stabilizers must commute");
  for (const auto& rx : code.hx.rows)
    if (rx.dot(code.lz))
      throw std::invalid_argument(
          "css: logical Z must commute with the X stabilizers");
  for (const auto& rz : code.hz.rows)
    if (rz.dot(code.lx))
      throw std::invalid_argument(
          "css: logical X must commute with the Z stabilizers");
  if (!code.lx.dot(code.lz))
    throw std::invalid_argument("css: logical X and Z must anticommute");
  // Logical operators must be independent of the stabilizers.
  GF2Mat mx = code.hx;
  mx.rows.push_back(code.lx);
  if (mx.rank() != code.hx.row_count() + 1)
    throw std::invalid_argument(
        "css: logical X lies in the X-stabilizer span");
  GF2Mat mz = code.hz;
  mz.rows.push_back(code.lz);
  if (mz.rank() != code.hz.row_count() + 1)
    throw std::invalid_argument(
        "css: logical Z lies in the Z-stabilizer span");
  if (code.hx.rank() != code.hx.row_count() ||
      code.hz.rank() != code.hz.row_count())
    throw std::invalid_argument("css: dependent stabilizer generators");
  for (const auto& [k, v] : code.transversal) {
    if (k != GateKind::H && k != GateKind::S && k != GateKind::SDG)
      throw std::invalid_argument(
          "css: transversal map entries must be H, S or SDG");
    if (v != GateKind::H && v != GateKind::S && v != GateKind::SDG)
      throw std::invalid_argument(
          "css: transversal map must target single-qubit gates");
  }
}

}  // namespace

CssCode css_from_json(const nlohmann::json& j) {
  CssCode code;
  try {
    code.name = j.at("name").get<std::string>();
    code.q = j.at("q").get<size_t>();
    code.d = j.at("d").get<size_t>();
    auto rows = [&](const char* key) {
      GF2Mat m(0, code.q);
      for (const auto& s : j.at(key))
        m.rows.push_back(
            bits_from_string(s.get<std::string>(), code.q, key));
      return m;
    };
    code.hx = rows("hx");
    code.hz = rows("hz");
    code.lx = bits_from_string(j.at("lx").get<std::string>(), code.q, "lx");
    code.lz = bits_from_string(j.at("lz").get<std::string>(), code.q, "lz");
    if (j.contains("transversal"))
      for (const auto& [k, v] : j.at("transversal").items())
        code.transversal[gate_kind_from_string(k)] =
            gate_kind_from_string(v.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("css descriptor: ") + e.what());
  }
  validate(code);
  build_encoder(code);
  return code;
}

nlohmann::json css_to_json(const CssCode& code) {
  nlohmann::json j;
  j["name"] = code.name;
  j["q"] = code.q;
  j["d"] = code.d;
  auto rows = [&](const GF2Mat& m) {
    std::vector<std::string> out;
    for (const auto& r : m.rows) out.push_back(r.to_string());
    return out;
  };
  j["hx"] = rows(code.hx);
  j["hz"] = rows(code.hz);
  j["lx"] = code.lx.to_string();
  j["lz"] = code.lz.to_string();
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [k, v] : code.transversal)
    t[gate_kind_name(k)] = gate_kind_name(v);
  j["transversal"] = t;
  return j;
}

CssCode steane() {
  return css_from_json(nlohmann::json{
      {"name", "steane"},
      {"q", 7},
      {"d", 3},
      {"hx", {"1010101", "0110011", "0001111"}},
      {"hz", {"1010101", "0110011", "0001111"}},
      {"lx", "1111111"},
      {"lz", "1111111"},
      // The self-dual code flips the phase gate's handedness: the logical S
      // is realized by physical S† on every qubit (and vice versa).
      {"transversal", {{"H", "H"}, {"S", "SDG"}, {"SDG", "S"}}},
  });
}

CssCode repetition_code(size_t q) {
  if (q == 0) throw std::invalid_argument("repetition_code: q must be positive");
  if (q == 1) {
    // Trivial single-share code: everything logical is physical.
    CssCode code;
    code.name = "rep1";
    code.q = 1;
    code.d = 1;
    code.hx = GF2Mat(0, 1);
    code.hz = GF2Mat(0, 1);
    code.lx = BitVec::from_string("1");
    code.lz = BitVec::from_string("1");
    code.enc = CliffordOp::identity(1);
    code.transversal = {{GateKind::H, GateKind::H},
                        {GateKind::S, GateKind::S},
                        {GateKind::SDG, GateKind::SDG}};
    return code;
  }
  std::vector<std::string> hz;
  for (size_t i = 0; i + 1 < q; ++i) {
    std::string row(q, '0');
    row[i] = row[i + 1] = '1';
    hz.push_back(row);
  }
  return css_from_json(nlohmann::json{
      {"name", "rep" + std::to_string(q)},
      {"q", q},
      {"d", 1},
      {"hx", nlohmann::json::array()},
      {"hz", hz},
      {"lx", std::string(q, '1')},
      {"lz", "1" + std::string(q - 1, '0')},
  });
}

void qecc_encode(QuantumState& st, const CssCode& code,
                 const std::vector<size_t>& logical,
                 const std::vector<size_t>& ancilla) {
  if (logical.size() != 1 || ancilla.size() != code.q - 1)
    throw std::invalid_argument("qecc_encode: register sizes");
  std::vector<size_t> all = logical;
  all.insert(all.end(), ancilla.begin(), ancilla.end());
  st.apply_clifford(all, code.enc);
}

bool qecc_decode(QuantumState& st, const CssCode& code,
                 const std::vector<size_t>& logical,
                 const std::vector<size_t>& ancilla, Rng& rng) {
  if (logical.size() != 1 || ancilla.size() != code.q - 1)
    throw std::invalid_argument("qecc_decode: register sizes");
  std::vector<size_t> all = logical;
  all.insert(all.end(), ancilla.begin(), ancilla.end());
  CliffordOp inv = clifford_inverse(code.enc);
  st.apply_clifford(all, inv);
  BitVec syndrome = st.measure_z(ancilla, rng);
  if (syndrome.none()) return true;

  // Find a physical error of weight ≤ ⌊(d-1)/2⌋ whose decoded image shows
  // the same ancilla pattern, and undo that image.
  size_t budget = code.max_flips();
  PauliOp cand(code.q);
  auto matches = [&](const PauliOp& e) {
    PauliOp dec = clifford_conjugate(inv, e);
    for (size_t i = 0; i + 1 < code.q; ++i)
      if (dec.x.get(i + 1) != syndrome.get(i)) return false;
    st.apply_pauli(all, dec);
    return true;
  };
  // Enumerate supports of weight 1..budget, letters X/Y/Z on each.
  std::function<bool(size_t, size_t)> rec = [&](size_t from, size_t left) {
    for (size_t p = from; p < code.q; ++p) {
      for (char letter : {'X', 'Y', 'Z'}) {
        PauliOp single = PauliOp::single(code.q, p, letter);
        PauliOp saved = cand;
        cand = pauli_compose(single, cand);
        if (matches(cand)) return true;
        if (left > 1 && rec(p + 1, left - 1)) return true;
        cand = saved;
      }
    }
    return false;
  };
  return rec(0, budget);
}

bool qecc_erasure_decode(QuantumState& st, const CssCode& code,
                         const std::vector<size_t>& shares,
                         const std::vector<size_t>& erased, Rng& rng) {
  if (shares.size() != code.q)
    throw std::invalid_argument("qecc_erasure_decode: register size");
  if (erased.size() + 1 > code.d)
    throw std::invalid_argument("qecc_erasure_decode: too many erasures");
  for (size_t e : erased)
    if (e >= code.q)
      throw std::invalid_argument("qecc_erasure_decode: position out of range");

  // Whatever the lost shares were replaced with, collapse it to |0⟩ so the
  // damage becomes a Pauli supported on the erased positions.
  for (size_t e : erased) {
    BitVec b = st.measure_z({shares[e]}, rng);
    if (b.get(0)) st.apply_gate({GateKind::X, shares[e]});
  }

  CliffordOp inv = clifford_inverse(code.enc);
  st.apply_clifford(shares, inv);
  std::vector<size_t> ancilla(shares.begin() + 1, shares.end());
  BitVec pattern = st.measure_z(ancilla, rng);

  // Find any Pauli on the erased set whose decoded image shows the measured
  // ancilla pattern; candidates agreeing there differ by a stabilizer, so
  // the first match is as good as any.
  PauliOp cand(code.q);
  std::function<bool(size_t)> rec = [&](size_t i) {
    if (i == erased.size()) {
      PauliOp dec = clifford_conjugate(inv, cand);
      for (size_t k = 0; k + 1 < code.q; ++k)
        if (dec.x.get(k + 1) != pattern.get(k)) return false;
      st.apply_pauli(shares, dec);
      return true;
    }
    for (char letter : {'I', 'X', 'Y', 'Z'}) {
      PauliOp saved = cand;
      if (letter != 'I')
        cand = pauli_compose(PauliOp::single(code.q, erased[i], letter), cand);
      if (rec(i + 1)) return true;
      cand = saved;
    }
    return false;
  };
  return rec(0);
}

std::optional<bool> classical_decode(const CssCode& code, const BitVec& word,
                                     const std::vector<size_t>& erasures,
                                     char basis) {
  if (word.size() != code.q)
    throw std::invalid_argument("classical_decode: word length");
  if (basis != 'z' && basis != 'x')
    throw std::invalid_argument("classical_decode: basis must be 'z' or 'x'");
  const GF2Mat& checks = basis == 'z' ? code.hz : code.hx;
  const BitVec& logical = basis == 'z' ? code.lz : code.lx;
  std::vector<bool> erased(code.q, false);
  for (size_t e : erasures) {
    if (e >= code.q)
      throw std::invalid_argument("classical_decode: erasure out of range");
    erased[e] = true;
  }
  std::vector<size_t> free_pos;
  for (size_t i = 0; i < code.q; ++i)
    if (!erased[i]) free_pos.push_back(i);

  // Among all explanations (any values on erased positions, k flips on the
  // others) take the smallest k with a consistent codeword; the logical bit
  // must then be unique.
  for (size_t k = 0; k <= code.max_flips(); ++k) {
    bool seen[2] = {false, false};
    std::vector<size_t> flip;
    std::function<void(size_t, size_t, BitVec&)> flips =
        [&](size_t from, size_t left, BitVec& w) {
          if (left == 0) {
            for (size_t fill = 0; fill < (size_t(1) << erasures.size());
                 ++fill) {
              BitVec w2 = w;
              for (size_t i = 0; i < erasures.size(); ++i)
                w2.set(erasures[i], (fill >> i) & 1);
              if (checks.mul(w2).none()) seen[logical.dot(w2) ? 1 : 0] = true;
            }
            return;
          }
          for (size_t p = from; p + left <= free_pos.size(); ++p) {
            w.flip(free_pos[p]);
            flips(p + 1, left - 1, w);
            w.flip(free_pos[p]);
          }
        };
    BitVec w = word;
    flips(0, k, w);
    if (seen[0] || seen[1]) {
      if (seen[0] && seen[1]) return std::nullopt;
      return seen[1];
    }
  }
  return std::nullopt;
}

std::vector<Gate> transversal_physical(const CssCode& code,
                                       const Gate& logical, size_t blocks) {
  auto base = [&](size_t block) {
    if (block >= blocks)
      throw std::invalid_argument("transversal_physical: block out of range");
    return block * code.q;
  };
  std::vector<Gate> out;
  switch (logical.kind) {
    case GateKind::CNOT: {
      size_t c = base(logical.q0), t = base(logical.q1);
      if (logical.q0 == logical.q1)
        throw std::invalid_argument("transversal_physical: CNOT on one block");
      for (size_t i = 0; i < code.q; ++i)
        out.push_back({GateKind::CNOT, c + i, t + i});
      return out;
    }
    case GateKind::X:
    case GateKind::Z: {
      const BitVec& sup = logical.kind == GateKind::X ? code.lx : code.lz;
      size_t b = base(logical.q0);
      for (size_t i = 0; i < code.q; ++i)
        if (sup.get(i)) out.push_back({logical.kind, b + i});
      return out;
    }
    default: {
      auto it = code.transversal.find(logical.kind);
      if (it == code.transversal.end())
        throw std::invalid_argument(
            std::string("transversal_physical: gate ") +
            gate_kind_name(logical.kind) + " not in the transversal set");
      size_t b = base(logical.q0);
      for (size_t i = 0; i < code.q; ++i) out.push_back({it->second, b + i});
      return out;
    }
  }
}

PauliOp conjugate_through_encoder(const CssCode& code, const PauliOp& p) {
  if (p.n != 1)
    throw std::invalid_argument(
        "conjugate_through_encoder: expected a single-qubit Pauli");
  return clifford_conjugate(code.enc,
                            pauli_tensor(p, PauliOp::identity(code.q - 1)));
}

}  // namespace aqsim
