#include <set>

#include "doctest.h"
#include "qlease/crypto_oracles.hpp"
#include "qlease/rng.hpp"

using namespace qlease;
using namespace qlease::oracles;
using namespace qlease::circuits;
using field::FieldParams;
using field::FieldVector;

namespace {

ProgramPtr share(CncCircuit c) { return std::make_shared<CncCircuit>(std::move(c)); }

nlohmann::json without(nlohmann::json j, std::initializer_list<const char*> keys) {
  for (const auto* k : keys) j.erase(k);
  return j;
}

}  // namespace

TEST_CASE("sho example and freshness") {
  const OracleSuite suite(OracleMode::ideal, 1);
  Rng rng(50);
  const FieldParams p(2, 2);
  const auto a = field::Subspace::span(p, {FieldVector(p, {1, 0})});
  const auto h1 = sho_obf(suite, a, rng);
  const auto h2 = sho_obf(suite, a, rng);
  CHECK(h1.eval(FieldVector(p, {1, 0})));
  CHECK_FALSE(h1.eval(FieldVector(p, {0, 1})));
  CHECK(h1.token() != h2.token());
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto x = FieldVector::from_index(p, i);
    CHECK(h1.eval(x) == h2.eval(x));
  }
  CHECK_THROWS_AS(sho_obf(suite, field::Subspace::zero(p), rng), std::invalid_argument);
}

TEST_CASE("sho membership agrees with contains exhaustively, q = 2, lambda <= 8") {
  const OracleSuite suite(OracleMode::ideal, 2);
  Rng rng(51);
  for (unsigned lambda : {2u, 4u, 6u, 8u}) {
    const FieldParams p(2, lambda);
    std::vector<std::size_t> dims = {lambda / 2};
    if (lambda % 4 == 0) dims.push_back(3 * lambda / 4);
    for (auto d : dims) {
      const auto a = field::random_subspace(p, d, rng);
      const auto h = sho_obf(suite, a, rng);
      for (std::uint64_t i = 0; i < (1u << lambda); ++i) {
        const auto x = FieldVector::from_index(p, i);
        CHECK(h.eval(x) == a.contains(x));
      }
    }
  }
}

TEST_CASE("sho handles are deterministic in their coins and survive serialization") {
  const OracleSuite suite(OracleMode::ideal, 3);
  Rng rng(52);
  const auto a = field::random_subspace(FieldParams(3, 4), 2, rng);
  const Coins coins = rng.bytes16();
  const auto h = sho_obf(suite, a, coins);
  CHECK(sho_obf(suite, a, coins) == h);
  const auto back = SubspaceObfHandle::from_json(nlohmann::json::parse(h.to_json().dump()), suite);
  CHECK(back == h);
  CHECK(back.sealed_subspace() == a);
  // The basis is not readable from the serialized handle.
  CHECK(h.to_json().dump().find("basis") == std::string::npos);
  const OracleSuite other(OracleMode::ideal, 4);
  CHECK_THROWS_AS(SubspaceObfHandle::from_json(h.to_json(), other), HandleError);
}

TEST_CASE("sho game interface returns the challenge bit") {
  const OracleSuite suite(OracleMode::ideal, 5);
  Rng rng(53);
  const auto a = field::random_subspace(FieldParams(2, 8), 4, rng);
  // Harness-side cheat that reads the sealed dimension: always wins.
  const ShoDistinguisher peek = [](const SubspaceObfHandle& h, Rng&) { return h.sealed_subspace().dim() == 6 ? 1 : 0; };
  std::set<int> bits;
  for (int i = 0; i < 20; ++i) {
    const auto r = sho_game(suite, a, peek, rng);
    CHECK(r.won());
    bits.insert(r.challenge_bit);
  }
  CHECK(bits.size() == 2);
}

TEST_CASE("qiho agrees with eval exhaustively for n <= 12") {
  const OracleSuite suite(OracleMode::toy, 6);
  Rng rng(54);
  std::vector<CncCircuit> cs = {random_point(12, rng), random_wildcard(10, rng), random_affine(3, 2, 5, rng),
                                CncCircuit::plaintext_equality(8, 11, BitString::random(8, rng)),
                                sample_unpredictable(9, 4, rng).circuit,
                                random_point(6, rng).with_message(BitString::from_bits("110101001"))};
  for (const auto& c : cs) {
    const auto h = qiho_obf(suite, share(c), rng);
    CHECK(h.form() == "cnc");
    for (std::uint64_t v = 0; v < (1u << c.input_bits()); ++v) {
      const auto x = BitString::from_uint(v, c.input_bits());
      CHECK(h.eval(x) == c.eval(x));
    }
  }
}

TEST_CASE("qiho point handle accepts exactly once over 8 bits") {
  const OracleSuite suite(OracleMode::ideal, 7);
  Rng rng(55);
  const auto h = qiho_obf(suite, share(random_point(8, rng)), rng);
  int accepted = 0;
  for (std::uint64_t v = 0; v < 256; ++v) accepted += h.accepts(BitString::from_uint(v, 8));
  CHECK(accepted == 1);
}

TEST_CASE("qiho lock guessing with 2^10 guesses against m = 32 never succeeds") {
  const OracleSuite suite(OracleMode::toy, 8);
  Rng rng(56);
  int successes = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = random_point(32, rng);
    const auto h = qiho_obf(suite, share(c), rng);
    for (int g = 0; g < 1024; ++g) {
      const auto guess = BitString::random(32, rng);
      if (lock_digest(h.salt(), guess) == h.digest()) {
        ++successes;
        break;
      }
    }
  }
  CHECK(successes == 0);
}

TEST_CASE("qiho and lo handles reveal the lock only through salt and digest") {
  const OracleSuite suite(OracleMode::toy, 9);
  Rng rng(57);
  const Coins coins = rng.bytes16();
  const auto c1 = CncCircuit::point(BitString::random(16, rng));
  const auto c2 = CncCircuit::point(BitString::random(16, rng));
  REQUIRE(c1.lock() != c2.lock());
  const auto j1 = qiho_obf(suite, share(c1), coins).to_json();
  const auto j2 = qiho_obf(suite, share(c2), coins).to_json();
  CHECK(j1 != j2);
  CHECK(without(j1, {"salt", "digest"}).dump() == without(j2, {"salt", "digest"}).dump());
  CHECK(j1.dump().find(c1.lock().to_hex()) == std::string::npos);

  const auto beta = BitString::random(40, rng);
  const auto id = BooleanCircuit::identity(16);
  const auto l1 = lo_obf(id, c1.lock(), beta, coins).to_json();
  const auto l2 = lo_obf(id, c2.lock(), beta, coins).to_json();
  CHECK(without(l1, {"salt", "digest", "payload"}).dump() == without(l2, {"salt", "digest", "payload"}).dump());
  CHECK(from_base64(l1.at("payload").get<std::string>()).size() == from_base64(l2.at("payload").get<std::string>()).size());
}

TEST_CASE("qiho sealed form for programs outside the circuit family") {
  struct Parity final : Program {
    std::string kind() const override { return "parity"; }
    std::size_t input_bits() const override { return 5; }
    std::size_t output_bits() const override { return 1; }
    BitString eval(const BitString& x) const override {
      bool p = false;
      for (std::size_t i = 0; i < 5; ++i) p ^= x.get(i);
      return BitString::from_bits(p ? "1" : "0");
    }
    BitString search() const override { return BitString::from_bits("10000"); }
    nlohmann::json to_json() const override { return {{"kind", "parity"}}; }
  };
  const OracleSuite suite(OracleMode::ideal, 10);
  Rng rng(58);
  const auto prog = std::make_shared<Parity>();
  const auto h = qiho_obf(suite, prog, rng);
  CHECK(h.form() == "sealed");
  auto codec = ProgramCodec::with_circuit_kinds();
  codec.add("parity", [](const nlohmann::json&) -> ProgramPtr { return std::make_shared<Parity>(); });
  const auto back = InputHidingObfHandle::from_json(h.to_json(), suite, codec);
  CHECK(is_functionally_equal([&](const BitString& x) { return back.eval(x); },
                              [&](const BitString& x) { return prog->eval(x); }, 5));
  CHECK_THROWS_AS(InputHidingObfHandle::from_json(h.to_json(), OracleSuite(OracleMode::ideal, 11), codec), HandleError);
}

TEST_CASE("lockable obfuscation example and wrong inputs") {
  Rng rng(59);
  const auto id = BooleanCircuit::identity(8);
  const auto alpha = BitString::from_hex("a5", 8);
  const auto beta = BitString::random(77, rng);
  const auto h = lo_obf(id, alpha, beta, rng);
  CHECK(h.eval(alpha) == beta);
  CHECK_FALSE(h.eval(BitString::from_hex("00", 8)).has_value());
  const auto back = LockableObfHandle::from_json(nlohmann::json::parse(h.to_json().dump()));
  CHECK(back.eval(alpha) == beta);

  const auto wide = lo_obf(BooleanCircuit::identity(32), BitString::random(32, rng), beta, rng);
  int wrong_payloads = 0;
  int opened = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto r = wide.open_payload(BitString::random(32, rng));
    if (r) {
      ++opened;
      wrong_payloads += *r != beta;
    }
  }
  CHECK(opened == 0);
  CHECK(wrong_payloads == 0);
}

TEST_CASE("nizk prove, verify, extract, simulate") {
  const OracleSuite suite(OracleMode::ideal, 12);
  NizkOracle nizk(suite);
  // Statement y, witness x with x * x = y mod 101.
  nizk.register_relation("square", [](const nlohmann::json& s, const nlohmann::json& w) {
    const auto x = w.get<int>();
    return (x * x) % 101 == s.get<int>();
  });
  CHECK_THROWS_AS(nizk.crsgen("cube"), UnknownRelation);

  const auto crs = nizk.crsgen("square");
  const auto proof = nizk.prove(crs, 16, 4);
  CHECK(nizk.verify(crs, 16, proof));
  CHECK_FALSE(nizk.verify(crs, 25, proof));
  CHECK_THROWS_AS(nizk.prove(crs, 16, 5), WitnessRejected);

  const auto [fcrs, td] = nizk.fkgen("square");
  CHECK(fcrs == crs);
  const auto fresh = nizk.prove(fcrs, 9, 98);
  CHECK(nizk.extract(td, 9, fresh).get<int>() == 98);

  // A forged proof for a new statement without calling prove.
  auto forged = proof;
  forged.statement_digest = statement_digest(25);
  CHECK_FALSE(nizk.verify(crs, 25, forged));
  CHECK_THROWS_AS(nizk.extract(td, 25, forged), ExtractionError);

  const auto sim = nizk.simulate(td, 50);
  CHECK(sim.simulated);
  CHECK(nizk.verify(crs, 50, sim));
  CHECK_THROWS_AS(nizk.extract(td, 50, sim), ExtractionError);
  CHECK(nizk.issued_count() == 3);

  // A second oracle over the same suite accepts the same proofs.
  NizkOracle twin(suite);
  twin.register_relation("square", [](const nlohmann::json&, const nlohmann::json&) { return true; });
  CHECK(twin.verify(twin.crsgen("square"), 16, NizkProof::from_json(proof.to_json())));
  NizkOracle stranger(OracleSuite(OracleMode::ideal, 13));
  stranger.register_relation("square", [](const nlohmann::json&, const nlohmann::json&) { return true; });
  CHECK_FALSE(stranger.verify(stranger.crsgen("square"), 16, proof));
}

TEST_CASE("mode names") {
  CHECK(oracle_mode_from_string(to_string(OracleMode::toy)) == OracleMode::toy);
  CHECK(oracle_mode_from_string("ideal") == OracleMode::ideal);
  CHECK_THROWS(oracle_mode_from_string("real"));
}
