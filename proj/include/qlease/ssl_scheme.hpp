#ifndef QLEASE_SSL_SCHEME_HPP
#define QLEASE_SSL_SCHEME_HPP

// Setup / Gen / Lessor / Run / Check over the simulated primitives.

#include <cstdint>
#include <memory>
#include <optional>
#include <variant>

#include "json.hpp"
#include "qlease/bits.hpp"
#include "qlease/crypto_oracles.hpp"
#include "qlease/evasive_circuits.hpp"
#include "qlease/field_linalg.hpp"
#include "qlease/subspace_sim.hpp"

namespace qlease {
class Rng;
}

namespace qlease::ssl {

inline constexpr const char* kLeaseRelation = "lease-relation";

class Crs {
 public:
  // Requires lambda even and q^lambda within the single-register cap.
  static std::shared_ptr<const Crs> setup(field::FieldParams params, oracles::OracleMode mode, std::uint64_t seed,
                                          circuits::ProgramCodec codec = circuits::ProgramCodec::with_circuit_kinds());

  const field::FieldParams& params() const { return params_; }
  oracles::OracleMode mode() const { return suite_.mode(); }
  std::uint64_t seed() const { return suite_.seed(); }
  const oracles::OracleSuite& suite() const { return suite_; }
  oracles::NizkOracle& nizk() const { return *nizk_; }
  const oracles::NizkCrs& nizk_crs() const { return nizk_crs_; }
  // Parsers for leased programs; extend before leasing new program kinds.
  circuits::ProgramCodec& codec() const { return *codec_; }

  nlohmann::json to_json() const;

  Crs(field::FieldParams params, oracles::OracleSuite suite, std::shared_ptr<circuits::ProgramCodec> codec);

 private:
  field::FieldParams params_;
  oracles::OracleSuite suite_;
  std::shared_ptr<circuits::ProgramCodec> codec_;
  std::shared_ptr<oracles::NizkOracle> nizk_;
  oracles::NizkCrs nizk_crs_;
};

using CrsPtr = std::shared_ptr<const Crs>;

struct SecretKey {
  field::Subspace a;
};

SecretKey gen(const Crs& crs, Rng& rng);

struct ClassicalPart {
  oracles::SubspaceObfHandle g;
  oracles::SubspaceObfHandle g_perp;
  oracles::InputHidingObfHandle c_obf;
  oracles::NizkProof proof;

  nlohmann::json statement() const;
  nlohmann::json to_json() const;
  static ClassicalPart from_json(const nlohmann::json& j, const Crs& crs);
};

using QuantumPart = std::variant<quantum::PureState, quantum::DensityOperator>;

quantum::DensityOperator to_density(const QuantumPart& q);
double trace_distance(const QuantumPart& x, const QuantumPart& y);

struct LeasedState {
  QuantumPart quantum;
  ClassicalPart classical;
};

// Witness fields: A, the coins of the three obfuscation calls, C and an accepting x.
struct LeaseWitness {
  field::Subspace a;
  oracles::Coins r_o;
  oracles::Coins r_a;
  oracles::Coins r_a_perp;
  circuits::ProgramPtr program;
  BitString x;

  nlohmann::json to_json() const;
};

struct RelationCheck {
  bool g_matches;
  bool g_perp_matches;
  bool c_obf_matches;
  bool x_accepts;
  bool all() const { return g_matches && g_perp_matches && c_obf_matches && x_accepts; }
};

// The four conjuncts of the lease relation, re-derived from the witness.
RelationCheck check_lease_relation(const Crs& crs, const nlohmann::json& statement, const nlohmann::json& witness);

// Throws circuits::Unsatisfiable / UnsupportedSearch from the program's search.
LeasedState lessor(const Crs& crs, const SecretKey& sk, const circuits::ProgramPtr& program, Rng& rng,
                   LeaseWitness* witness_out = nullptr);

struct RunResult {
  std::optional<BitString> output;  // nullopt is the reject symbol
  LeasedState post_lease;
  bool proof_ok;
  bool in_a;       // first projection outcome
  bool in_a_perp;  // second projection outcome
  std::optional<double> disturbance;  // set by run_reusable
};

RunResult run(const Crs& crs, const LeasedState& lease, const BitString& x, Rng& rng);

// Same as run, and additionally measures the trace distance between pre- and
// post-run quantum parts; throws GentleBoundViolated when an accepted run
// disturbs the state by more than sqrt(1 - p_accept) (1e-9 when p_accept = 1).
RunResult run_reusable(const Crs& crs, const LeasedState& lease, const BitString& x, Rng& rng);

// Pr[both projections accept], exact; zero when the proof does not verify.
double run_accept_probability(const Crs& crs, const LeasedState& lease);

// Measures {|A><A|, I - |A><A|}; the post-measurement state replaces the quantum part.
bool check(const SecretKey& sk, LeasedState& lease, Rng& rng);
double check_accept_probability(const SecretKey& sk, const QuantumPart& q);

}  // namespace qlease::ssl

#endif  // QLEASE_SSL_SCHEME_HPP
