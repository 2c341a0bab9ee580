#include <map>
#include <set>

#include "doctest.h"
#include "qlease/evasive_circuits.hpp"
#include "qlease/rng.hpp"

using namespace qlease;
using namespace qlease::circuits;
using field::Matrix;
using field::Residue;

namespace {

// Direct-definition oracles, written without the library's encoders.
std::vector<Residue> oracle_digits(const BitString& x, unsigned q, std::size_t w) {
  std::vector<Residue> out;
  for (std::size_t i = 0; i < x.size(); i += w) {
    unsigned v = 0;
    for (std::size_t b = 0; b < w; ++b) v = v * 2 + (x.to_bits()[i + b] == '1');
    out.push_back(v % q);
  }
  return out;
}

bool oracle_affine_accepts(const Matrix& m, const std::vector<Residue>& target, const BitString& x) {
  const auto w = x.size() / m.cols();
  const auto d = oracle_digits(x, m.q(), w);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    unsigned acc = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += m.at(r, c) * d[c];
    if (acc % m.q() != target[r]) return false;
  }
  return true;
}

bool oracle_wildcard_accepts(const std::set<std::size_t>& s, const std::string& lock, const std::string& x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const char y = s.count(i) ? x[i] : '0';
    if (y != lock[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("point circuit examples") {
  const auto c = CncCircuit::point(BitString::from_bits("0101"));
  CHECK(c.eval(BitString::from_bits("0101")).to_bits() == "1");
  CHECK(c.eval(BitString::from_bits("0000")).to_bits() == "0");
  CHECK_THROWS_AS(c.eval(BitString::from_bits("010")), std::invalid_argument);
  CHECK(CncCircuit::point(BitString::from_bits("1100")).search().to_bits() == "1100");
}

TEST_CASE("multi-bit message output") {
  const auto c = CncCircuit::point(BitString::from_bits("011")).with_message(BitString::from_bits("10110"));
  CHECK(c.output_bits() == 5);
  CHECK(c.eval(BitString::from_bits("011")).to_bits() == "10110");
  CHECK(c.eval(BitString::from_bits("111")).to_bits() == "00000");
  CHECK(c.accepts(c.search()));
  const auto zero_msg = CncCircuit::point(BitString::from_bits("011")).with_message(BitString(3));
  CHECK_THROWS_AS(zero_msg.search(), Unsatisfiable);
}

TEST_CASE("wildcard search example and unsatisfiable lock") {
  const auto c = CncCircuit::wildcard(4, {0, 2}, BitString::from_bits("1010"));
  const auto x = c.search();
  CHECK(x.get(0));
  CHECK(x.get(2));
  CHECK(c.accepts(x));
  // Flipping bits off the support must not matter.
  auto y = x;
  y.set(1, true);
  y.set(3, true);
  CHECK(c.accepts(y));

  const auto bad = CncCircuit::wildcard(4, {0, 2}, BitString::from_bits("1110"));
  CHECK_THROWS_AS(bad.search(), Unsatisfiable);
}

TEST_CASE("affine tester agrees with direct matrix arithmetic") {
  Rng rng(31);
  const auto c = random_affine(3, 3, 5, rng);
  const auto& m = std::get<AffineBody>(c.inner().body()).matrix;
  const auto target = decode_digits(c.lock(), 3);
  for (int k = 0; k < 100; ++k) {
    const auto x = BitString::random(c.input_bits(), rng);
    CHECK(c.accepts(x) == oracle_affine_accepts(m, target, x));
  }
  const auto x = c.search();
  CHECK(oracle_affine_accepts(m, target, x));
}

TEST_CASE("affine search reports inconsistent systems") {
  const Matrix dup(3, {{1, 0, 1}, {1, 0, 1}}, 3);
  const std::vector<Residue> target = {0, 1};
  CHECK_THROWS_AS(CncCircuit::affine(dup, target).search(), Unsatisfiable);
  // A lock carrying a non-residue digit (3 in Z_3) can never be produced.
  const Matrix id = Matrix::identity(3, 1);
  const CncCircuit noncanonical(BooleanCircuit::affine(id), BitString::from_bits("11"), std::nullopt,
                                {SearchKind::affine, std::nullopt});
  CHECK_THROWS_AS(noncanonical.search(), Unsatisfiable);
}

TEST_CASE("plaintext equality checker") {
  const std::uint64_t key = 77;
  const auto alpha = BitString::from_bits("101101");
  const auto c = CncCircuit::plaintext_equality(6, key, alpha);
  const auto perm = toy_cipher_table(6, key);
  std::set<std::uint32_t> image(perm.begin(), perm.end());
  CHECK(image.size() == 64);
  const auto ct = c.search();
  CHECK(ct == toy_encrypt(6, key, alpha));
  CHECK(c.accepts(ct));
  int accepted = 0;
  for (std::uint64_t v = 0; v < 64; ++v) accepted += c.accepts(BitString::from_uint(v, 6));
  CHECK(accepted == 1);
}

TEST_CASE("exhaustive agreement with direct definitions for n <= 10") {
  Rng rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 10;
    const auto point = random_point(n, rng);
    const auto wild = random_wildcard(n, rng);
    const auto& support = std::get<ProjectionBody>(wild.inner().body()).support;
    const std::set<std::size_t> s(support.begin(), support.end());
    const auto affine = random_affine(2, 4, 10, rng);
    const auto& m = std::get<AffineBody>(affine.inner().body()).matrix;
    const auto target = decode_digits(affine.lock(), 2);
    for (std::uint64_t v = 0; v < 1024; ++v) {
      const auto x = BitString::from_uint(v, n);
      CHECK(point.accepts(x) == (x == point.lock()));
      CHECK(wild.accepts(x) == oracle_wildcard_accepts(s, wild.lock().to_bits(), x.to_bits()));
      CHECK(affine.accepts(x) == oracle_affine_accepts(m, target, x));
    }
  }
}

TEST_CASE("search never returns a rejected input") {
  Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CncCircuit> cs = {random_point(8, rng), random_wildcard(8, rng),
                                  random_affine(static_cast<unsigned>(std::vector<int>{2, 3, 5, 7}[trial % 4]), 3, 4, rng),
                                  CncCircuit::plaintext_equality(8, rng.next_u64(), BitString::random(8, rng))};
    // Arbitrary wildcard locks may be unsatisfiable; the answer is then an explicit error.
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < 8; ++i) {
      if (rng.next_u32() & 1u) support.push_back(i);
    }
    cs.push_back(CncCircuit::wildcard(8, support, BitString::random(8, rng)));
    // Arbitrary affine targets may be inconsistent.
    const auto m = Matrix::random(3, 4, 3, rng);
    std::vector<Residue> t(4);
    for (auto& r : t) r = static_cast<Residue>(rng.uniform_below(3));
    cs.push_back(CncCircuit::affine(m, t));
    for (const auto& c : cs) {
      std::optional<BitString> found;
      try {
        found = c.search();
      } catch (const Unsatisfiable&) {
      }
      if (found) {
        CHECK(c.accepts(*found));
      } else {
        int accepted = 0;
        for (std::uint64_t v = 0; v < (1u << c.input_bits()); ++v) {
          accepted += c.accepts(BitString::from_uint(v, c.input_bits()));
        }
        CHECK(accepted == 0);
      }
    }
  }
}

TEST_CASE("custom circuits have no search") {
  Rng rng(34);
  const auto s = sample_unpredictable(4, 3, rng);
  CHECK(s.circuit.kind() == "custom");
  CHECK_THROWS_AS(s.circuit.search(), UnsupportedSearch);
}

TEST_CASE("sampled locks are uniform (chi-square, m = 8)") {
  Rng rng(35);
  constexpr int kSamples = 100000;
  std::vector<int> counts(256, 0);
  for (int i = 0; i < kSamples; ++i) ++counts[sample_unpredictable(8, 8, rng).circuit.lock().to_uint()];
  const double expected = kSamples / 256.0;
  double chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 99th percentile of chi-square with 255 degrees of freedom.
  CHECK(chi2 < 310.46);

  Rng one(36);
  int ones = 0;
  for (int i = 0; i < 10000; ++i) ones += sample_unpredictable(1, 1, one).circuit.lock().get(0);
  CHECK(std::abs(ones - 5000) < 3 * 50);
}

TEST_CASE("evasiveness: acceptance at a fixed input is about 2^-m") {
  Rng rng(37);
  constexpr int kSamples = 200000;
  for (std::size_t m : {2u, 4u, 6u}) {
    const auto x0 = BitString::random(6, rng);
    int hits = 0;
    for (int i = 0; i < kSamples; ++i) {
      hits += sample_unpredictable(6, m, rng, InnerKind::random_table).circuit.accepts(x0);
    }
    const double p = std::ldexp(1.0, -static_cast<int>(m));
    const double sigma = std::sqrt(p * (1 - p) / kSamples);
    CHECK(std::abs(hits / double(kSamples) - p) < 3 * sigma);
  }
}

TEST_CASE("pseudo-entropic sampler differs only in its annotation") {
  Rng a(38), b(38);
  const auto u = sample_unpredictable(5, 5, a);
  const auto p = sample_pseudo_entropic(5, 5, b);
  CHECK(u.distribution == "unpredictable");
  CHECK(p.distribution == "pseudo-entropic");
  CHECK(u.circuit.lock() == p.circuit.lock());
  CHECK(u.aux == p.aux);
  CHECK(p.entropy_bits == 5.0);
}

TEST_CASE("functional equality") {
  Rng rng(39);
  const auto c = random_point(8, rng);
  CHECK(is_functionally_equal(c, c));
  auto other = c.lock();
  other.set(0, !other.get(0));
  CHECK_FALSE(is_functionally_equal(c, CncCircuit::point(other)));
  // Same function, different descriptions: full-support wildcard vs point.
  std::vector<std::size_t> all(8);
  for (std::size_t i = 0; i < 8; ++i) all[i] = i;
  CHECK(is_functionally_equal(c, CncCircuit::wildcard(8, all, c.lock())));
  const Evaluator id = [](const BitString& x) { return x; };
  CHECK_THROWS_AS(is_functionally_equal(id, id, 21), std::invalid_argument);
}

TEST_CASE("fhe decryption circuit") {
  SymmetricKey key{};
  key[3] = 5;
  const auto c = BooleanCircuit::fhe_decrypt(key, 12);
  const auto pt = BitString::from_bits("101100111010");
  Salt nonce{};
  nonce[0] = 1;
  const auto ct = seal(key, nonce, pt.bytes());
  const auto x = BitString::from_bytes(ct, c.n());
  CHECK(c.eval(x) == BitString::from_bits("1").concat(pt));
  auto tampered = x;
  tampered.set(200, !tampered.get(200));
  CHECK(c.eval(tampered).is_zero());
}

TEST_CASE("json round trip through the codec") {
  Rng rng(40);
  const auto codec = ProgramCodec::with_circuit_kinds();
  std::vector<CncCircuit> cs = {random_point(7, rng), random_wildcard(7, rng), random_affine(5, 2, 3, rng),
                                CncCircuit::plaintext_equality(5, 9, BitString::from_bits("10011")),
                                sample_unpredictable(4, 6, rng).circuit,
                                random_point(6, rng).with_message(BitString::from_bits("1011001"))};
  for (const auto& c : cs) {
    const auto parsed = codec.parse(nlohmann::json::parse(c.to_json().dump()));
    CHECK(parsed->kind() == c.kind());
    CHECK(parsed->to_json() == c.to_json());
    CHECK(is_functionally_equal(*parsed, c));
  }
  CHECK_THROWS_AS(codec.parse(nlohmann::json{{"kind", "mystery"}}), std::invalid_argument);
}
