#include <cmath>

#include "doctest.h"
#include "qlease/dequantumizer.hpp"

using namespace qlease;
using namespace qlease::dequant;

namespace {

Salt seed_of(Rng& rng) { return rng.bytes16(); }

BitString complement(const BitString& x) {
  BitString y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y.set(i, !x.get(i));
  return y;
}

// Independent reading of the branch-1 layout: ciphertext, then 16 token bytes, then 32 pk bytes.
struct ZeroBranch {
  Bytes ct;
  std::string token;
  Bytes pk;
};

ZeroBranch split_zero_branch(const BitString& y, std::size_t lambda_bits) {
  const auto& raw = y.bytes();
  const std::size_t ct = 16 + (lambda_bits + 7) / 8 + 16;
  REQUIRE(raw.size() == ct + 16 + 32);
  return {Bytes(raw.begin(), raw.begin() + ct), to_hex(Bytes(raw.begin() + ct, raw.begin() + ct + 16)),
          Bytes(raw.begin() + ct + 16, raw.end())};
}

bool within(double count, double trials, double p) {
  return std::abs(count / trials - p) <= 3 * std::sqrt(p * (1 - p) / trials);
}

}  // namespace

TEST_CASE("toy FHE round trip and tag checks") {
  Rng rng(1);
  ToyFhe fhe;
  const auto keys = fhe.keygen(rng);
  for (int i = 0; i < 10000; ++i) {
    const auto msg = BitString::random(1 + rng.uniform_below(64), rng);
    const auto ct = fhe.encrypt(keys.pk, msg, seed_of(rng));
    REQUIRE(fhe_decrypt(keys.sk, ct) == msg);
  }
  const auto msg = BitString::random(20, rng);
  const auto seed = seed_of(rng);
  const auto ct = fhe.encrypt(keys.pk, msg, seed);
  CHECK(ct == fhe_encrypt(keys, msg, seed));
  CHECK(ct.bytes().size() == ciphertext_bytes(20));
  CHECK(ct.nonce().size() == 16);
  CHECK(ct.tag().size() == 16);
  CHECK(ct.payload().size() == 3);

  const auto other = fhe_keygen(rng);
  CHECK_THROWS_AS(fhe_decrypt(other.sk, ct), FheError);
  auto tampered = ct.bytes();
  tampered[20] ^= 1;
  CHECK_THROWS_AS(fhe_decrypt(keys.sk, ToyCiphertext(tampered, 20)), FheError);
  CHECK_THROWS_AS(fhe.encrypt(other.pk, msg, seed), FheError);
  CHECK_THROWS_AS(ToyCiphertext(Bytes(10), 20), FheError);
  CHECK_FALSE(ct.redacted_json().dump().find(to_hex(ct.payload())) != std::string::npos);
}

TEST_CASE("fhe eval decrypts to the evaluator's output") {
  Rng rng(2);
  ToyFhe fhe;
  const auto keys = fhe.keygen(rng);
  for (int i = 0; i < 200; ++i) {
    const auto x = BitString::random(12, rng);
    const auto ct = fhe.encrypt(keys.pk, x, seed_of(rng));
    CHECK(fhe_decrypt(keys.sk, fhe.eval(keys.pk, [](const BitString& v) { return v; }, ct)) == x);
    CHECK(fhe_decrypt(keys.sk, fhe.eval(keys.pk, complement, ct)) == complement(x));
  }
  // Classical plaintexts stay classical: the result is an ordinary ciphertext of the declared length.
  const auto ct = fhe.encrypt(keys.pk, BitString::random(12, rng), seed_of(rng));
  const auto wide = fhe.eval(keys.pk, [](const BitString& v) { return v.resized(40); }, ct);
  CHECK(wide.plaintext_bits() == 40);
  auto tampered = ct.bytes();
  tampered.back() ^= 1;
  CHECK_THROWS_AS(fhe.eval(keys.pk, complement, ToyCiphertext(tampered, 12)), FheError);
}

TEST_CASE("family circuit follows the three-branch definition") {
  FamilyServices services;
  Rng rng(3);
  const auto c = sample_family(services, 6, rng);
  CHECK(c->input_bits() == 6);
  CHECK(c->output_bits() == 8 * (16 + 1 + 16 + 16 + 32));
  CHECK_FALSE(c->a().is_zero());

  const auto z = split_zero_branch(c->eval(BitString::zeros(6)), 6);
  CHECK(z.ct == c->ct1().bytes());
  CHECK(z.token == c->lo().token());
  CHECK(z.pk == Bytes(c->pk().begin(), c->pk().end()));
  CHECK(c->eval(c->a()) == c->b().resized(c->output_bits()));

  int nonzero = 0;
  for (std::uint64_t v = 1; v < 64; ++v) {
    const auto x = BitString::from_uint(v, 6);
    if (x != c->a()) nonzero += !c->eval(x).is_zero();
  }
  CHECK(nonzero == 0);
  CHECK(c->accepts(c->search()));
  CHECK_THROWS_AS(c->eval(BitString::zeros(5)), std::invalid_argument);

  const auto wide = sample_family(services, 32, rng);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto x = BitString::random(32, rng);
    if (x.is_zero() || x == wide->a()) continue;
    hits += !wide->eval(x).is_zero();
  }
  CHECK(hits == 0);
}

TEST_CASE("fhe eval of the family on Enc(a) yields b") {
  FamilyServices services;
  Rng rng(4);
  const auto keys = services.fhe->keygen(rng);
  for (int i = 0; i < 20; ++i) {
    const auto c = sample_family(services, 8, rng);
    const auto ct = services.fhe->encrypt(keys.pk, c->a(), seed_of(rng));
    const auto out = services.fhe->eval(keys.pk, [&](const BitString& x) { return c->eval(x); }, ct);
    CHECK(fhe_decrypt(keys.sk, out).slice(0, 8) == c->b());
  }
}

TEST_CASE("family JSON round trip through the codec") {
  FamilyServices services;
  Rng rng(5);
  auto codec = circuits::ProgramCodec::with_circuit_kinds();
  register_family(codec, services);
  const auto c = sample_family(services, 10, rng);
  const auto parsed = std::dynamic_pointer_cast<const DequantumizableCircuit>(codec.parse(c->to_json()));
  REQUIRE(parsed);
  CHECK(*parsed == *c);
  CHECK(parsed->ct1() == c->ct1());
  auto bad = c->to_json();
  bad["lo"] = std::string(32, '0');
  CHECK_THROWS(codec.parse(bad));
}

TEST_CASE("extraction from an honest implementation is exact") {
  FamilyServices services;
  Rng rng(6);
  int successes = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = sample_family(services, 6, rng);
    auto impl = QuantumImplementation::plain(c, 0.0, rng.next_u64());
    const auto result = attack_extract(impl, services);
    const auto& rec = *result.reconstructed;
    const bool exact = rec.a() == c->a() && rec.b() == c->b() && rec.r() == c->r() && rec.pk() == c->pk() &&
                       rec.lo().token() == c->lo().token();
    CHECK(exact);
    CHECK(rec == *c);
    CHECK(result.recovered_state_ok);
    successes += exact && circuits::is_functionally_equal(rec, *c);

    // Only 0...0 is ever queried in the clear.
    const auto log = impl.access_log();
    REQUIRE(log.size() == 2);
    CHECK(log[0].channel == "clear");
    CHECK(log[0].input == BitString::zeros(6).to_hex());
    CHECK(log[1].channel == "homomorphic");
  }
  CHECK(successes == 100);
}

TEST_CASE("noise on the point a causes lock misses at the injected rate") {
  FamilyServices services;
  Rng rng(7);
  constexpr int kTrials = 1000;
  int failures = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const auto c = sample_family(services, 6, rng);
    auto impl = QuantumImplementation::plain(c, 0.3, rng.next_u64(), c->a());
    try {
      const auto r = attack_extract(impl, services);
      CHECK(*r.reconstructed == *c);
    } catch (const ExtractionFailure& e) {
      ++failures;
      CHECK(std::string(e.what()).find("lock miss") != std::string::npos);
    }
  }
  CHECK(within(failures, kTrials, 0.3));
}

TEST_CASE("SSL-breaking pirate on a leased family circuit") {
  FamilyServices services;
  auto codec = circuits::ProgramCodec::with_circuit_kinds();
  register_family(codec, services);
  const auto crs = ssl::Crs::setup(field::FieldParams(2, 6), oracles::OracleMode::ideal, 9, codec);
  Rng rng(8);
  const auto c = sample_family(services, 6, rng);
  const auto sk = ssl::gen(*crs, rng);
  const auto lease = ssl::lessor(*crs, sk, c, rng);
  const auto result = ssl_breaking_pirate(crs, lease, services, rng);

  CHECK(*result.extraction.reconstructed == *c);
  CHECK(ssl::trace_distance(lease.quantum, result.original.quantum) <= 1e-9);
  CHECK(ssl::check_accept_probability(sk, result.original.quantum) == doctest::Approx(1.0).epsilon(1e-9));
  auto returned = result.original;
  CHECK(ssl::check(sk, returned, rng));

  CHECK(result.own_key.a != sk.a);
  CHECK(ssl::check_accept_probability(result.own_key, result.fresh.quantum) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ssl::run_accept_probability(*crs, result.fresh) == doctest::Approx(1.0).epsilon(1e-9));
  auto copy = result.fresh;
  for (std::uint64_t v = 0; v < 64; ++v) {
    const auto x = BitString::from_uint(v, 6);
    const auto r = ssl::run(*crs, copy, x, rng);
    REQUIRE(r.output);
    CHECK(*r.output == c->eval(x));
    copy = r.post_lease;
  }
  CHECK(result.extraction.trace.at("queries").size() == 2);
}

TEST_CASE("pirate against a plain point circuit fails extraction") {
  FamilyServices services;
  const auto crs = ssl::Crs::setup(field::FieldParams(2, 6), oracles::OracleMode::ideal, 10);
  Rng rng(9);
  const auto sk = ssl::gen(*crs, rng);
  const auto lease =
      ssl::lessor(*crs, sk, std::make_shared<circuits::CncCircuit>(circuits::random_point(6, rng)), rng);
  CHECK_THROWS_AS(ssl_breaking_pirate(crs, lease, services, rng), ExtractionFailure);
}

TEST_CASE("black-box learner baseline") {
  FamilyServices services;
  Rng rng(10);
  int wide = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = sample_family(services, 32, rng);
    const auto r = oracle_learner_baseline([&](const BitString& x) { return c->eval(x); }, 32, 1024, rng);
    CHECK(r.queries == 1024);
    wide += r.success;
  }
  CHECK(wide == 0);

  const auto c = sample_family(services, 6, rng);
  const circuits::Evaluator oracle = [&](const BitString& x) { return c->eval(x); };
  const auto planted = oracle_learner_baseline(oracle, 6, 4, rng, {c->a()});
  CHECK(planted.success);
  CHECK(*planted.found_a == c->a());
  CHECK(circuits::is_functionally_equal(planted.attempt, oracle, 6));

  const auto partial = oracle_learner_baseline(oracle, 6, 1, rng);
  CHECK(partial.queries == 1);
  CHECK_FALSE(partial.success);
  CHECK_FALSE(circuits::is_functionally_equal(partial.attempt, oracle, 6));

  const auto full = oracle_learner_baseline(oracle, 6, 1000, rng);
  CHECK(full.queries == 64);
  CHECK(full.success);
}
