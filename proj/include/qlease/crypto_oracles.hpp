#ifndef QLEASE_CRYPTO_ORACLES_HPP
#define QLEASE_CRYPTO_ORACLES_HPP

// Idealized and toy stand-ins for the obfuscators and the NIZK the leasing
// scheme consumes. None of these are cryptographically secure.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qlease/bits.hpp"
#include "qlease/digest.hpp"
#include "qlease/evasive_circuits.hpp"
#include "qlease/field_linalg.hpp"

namespace qlease {
class Rng;
}

namespace qlease::oracles {

// ideal: functionality enforced by the harness. toy: hash/keystream
// realizations whose public fields a budget-limited adversary may attack.
enum class OracleMode { ideal, toy };
std::string to_string(OracleMode mode);
OracleMode oracle_mode_from_string(const std::string& s);

// Randomness consumed by one obfuscation call; obfuscation is deterministic given it.
using Coins = std::array<std::uint8_t, 16>;

// Owns the master secret that seals handle internals. Two suites built from
// the same (mode, seed) open each other's handles, which is what lets a
// lease written by one process be run by another.
class OracleSuite {
 public:
  OracleSuite(OracleMode mode, std::uint64_t seed);

  OracleMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  SymmetricKey key(std::string_view label) const { return derive_key(master_, label); }

 private:
  OracleMode mode_;
  std::uint64_t seed_;
  SymmetricKey master_;
};

class HandleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- subspace hiding

class SubspaceObfHandle {
 public:
  const std::string& token() const { return token_; }
  const field::FieldParams& params() const { return params_; }
  bool eval(const field::FieldVector& x) const;

  nlohmann::json to_json() const;
  static SubspaceObfHandle from_json(const nlohmann::json& j, const OracleSuite& suite);

  // Harness bookkeeping only; never part of the adversary's view.
  const field::Subspace& sealed_subspace() const { return *subspace_; }

  friend bool operator==(const SubspaceObfHandle& a, const SubspaceObfHandle& b) {
    return a.token_ == b.token_ && a.sealed_ == b.sealed_;
  }

 private:
  friend SubspaceObfHandle sho_obf(const OracleSuite&, const field::Subspace&, const Coins&);
  SubspaceObfHandle() = default;

  std::string token_;
  field::FieldParams params_;
  Bytes sealed_;
  std::shared_ptr<const field::Subspace> subspace_;
};

// Requires dim(A) in {lambda/2, 3*lambda/4}.
SubspaceObfHandle sho_obf(const OracleSuite& suite, const field::Subspace& a, const Coins& coins);
SubspaceObfHandle sho_obf(const OracleSuite& suite, const field::Subspace& a, Rng& rng);

struct ShoGameResult {
  int challenge_bit;
  int guess;
  bool won() const { return challenge_bit == guess; }
};
using ShoDistinguisher = std::function<int(const SubspaceObfHandle&, Rng&)>;
// Challenger obfuscates A (bit 0) or a uniform 3*lambda/4-dimensional S containing A (bit 1).
ShoGameResult sho_game(const OracleSuite& suite, const field::Subspace& a, const ShoDistinguisher& adversary,
                       Rng& rng);

// ---------------------------------------------------------------- q-input hiding

// cnc form: inner circuit in the clear plus a salted digest of the lock, the
// payload (if any) sealed under a key derived from the lock. sealed form:
// the whole program sealed under the suite, for programs outside the family.
class InputHidingObfHandle {
 public:
  const std::string& token() const { return token_; }
  const std::string& form() const { return form_; }
  std::size_t input_bits() const { return n_; }
  std::size_t output_bits() const { return m_; }
  BitString eval(const BitString& x) const;
  bool accepts(const BitString& x) const { return !eval(x).is_zero(); }

  // Public description fields of the cnc form (absent for the sealed form).
  const std::optional<circuits::BooleanCircuit>& inner() const { return inner_; }
  const Salt& salt() const { return salt_; }
  const Digest& digest() const { return digest_; }

  nlohmann::json to_json() const;
  static InputHidingObfHandle from_json(const nlohmann::json& j, const OracleSuite& suite,
                                        const circuits::ProgramCodec& codec);

  // Harness bookkeeping: the program this handle was built from. Null for a
  // cnc-form handle restored from JSON, since only the lock digest survives.
  const circuits::ProgramPtr& sealed_program() const { return program_; }

 private:
  friend InputHidingObfHandle qiho_obf(const OracleSuite&, const circuits::ProgramPtr&, const Coins&);
  InputHidingObfHandle() = default;

  std::string token_;
  std::string form_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::optional<circuits::BooleanCircuit> inner_;
  Salt salt_{};
  Digest digest_{};
  Bytes sealed_;  // msg (cnc form) or program (sealed form)
  circuits::ProgramPtr program_;
};

Digest lock_digest(const Salt& salt, const BitString& value);

InputHidingObfHandle qiho_obf(const OracleSuite& suite, const circuits::ProgramPtr& program, const Coins& coins);
InputHidingObfHandle qiho_obf(const OracleSuite& suite, const circuits::ProgramPtr& program, Rng& rng);

// ---------------------------------------------------------------- lockable obfuscation

class LockableObfHandle {
 public:
  const std::string& token() const { return token_; }
  const circuits::BooleanCircuit& inner() const { return inner_; }
  const Salt& salt() const { return salt_; }
  const Digest& digest() const { return digest_; }
  std::size_t payload_bits() const { return beta_bits_; }

  // beta when inner(x) equals the lock, nullopt otherwise.
  std::optional<BitString> eval(const BitString& x) const;
  // Opens the payload with a guessed lock; the integrity tag rejects wrong guesses.
  std::optional<BitString> open_payload(const BitString& candidate_lock) const;

  nlohmann::json to_json() const;
  static LockableObfHandle from_json(const nlohmann::json& j);

 private:
  friend LockableObfHandle lo_obf(const circuits::BooleanCircuit&, const BitString&, const BitString&, const Coins&);
  explicit LockableObfHandle(circuits::BooleanCircuit inner) : inner_(std::move(inner)) {}

  std::string token_;
  circuits::BooleanCircuit inner_;
  Salt salt_{};
  Digest digest_{};
  std::size_t beta_bits_ = 0;
  Bytes sealed_payload_;
};

LockableObfHandle lo_obf(const circuits::BooleanCircuit& c, const BitString& alpha, const BitString& beta,
                         const Coins& coins);
LockableObfHandle lo_obf(const circuits::BooleanCircuit& c, const BitString& alpha, const BitString& beta, Rng& rng);

// ---------------------------------------------------------------- NIZK

using Relation = std::function<bool(const nlohmann::json& statement, const nlohmann::json& witness)>;

struct NizkCrs {
  std::string relation_id;
  std::string token;
  nlohmann::json to_json() const;
  static NizkCrs from_json(const nlohmann::json& j);
  friend bool operator==(const NizkCrs&, const NizkCrs&) = default;
};

struct NizkTrapdoor {
  std::string relation_id;
  SymmetricKey extraction_key;
};

struct NizkProof {
  Digest statement_digest{};
  Bytes sealed_witness;
  bool simulated = false;
  Digest tag{};
  nlohmann::json to_json() const;
  static NizkProof from_json(const nlohmann::json& j);
  friend bool operator==(const NizkProof&, const NizkProof&) = default;
};

class UnknownRelation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class WitnessRejected : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Digest statement_digest(const nlohmann::json& statement);

// Ideal NIZK functionality. Proofs are MAC-authenticated records, so verify
// accepts exactly the proofs this oracle (or one built from the same suite)
// issued. The relation table and issuance log are shared and mutex-guarded.
class NizkOracle {
 public:
  explicit NizkOracle(const OracleSuite& suite);
  NizkOracle(const NizkOracle&) = delete;
  NizkOracle& operator=(const NizkOracle&) = delete;

  void register_relation(const std::string& id, Relation relation);
  bool knows(const std::string& id) const;
  bool check_relation(const std::string& id, const nlohmann::json& statement, const nlohmann::json& witness) const;

  NizkCrs crsgen(const std::string& relation_id) const;
  std::pair<NizkCrs, NizkTrapdoor> fkgen(const std::string& relation_id) const;

  NizkProof prove(const NizkCrs& crs, const nlohmann::json& statement, const nlohmann::json& witness);
  bool verify(const NizkCrs& crs, const nlohmann::json& statement, const NizkProof& proof) const;
  nlohmann::json extract(const NizkTrapdoor& td, const nlohmann::json& statement, const NizkProof& proof) const;
  // Proof without a witness; verifies, but extraction refuses it.
  NizkProof simulate(const NizkTrapdoor& td, const nlohmann::json& statement);

  std::size_t issued_count() const;

 private:
  Relation relation(const std::string& id) const;
  SymmetricKey extraction_key(const std::string& relation_id) const;
  Digest mac(const NizkCrs& crs, const NizkProof& proof) const;
  NizkProof issue(const NizkCrs& crs, const nlohmann::json& statement, const nlohmann::json* witness);

  SymmetricKey mac_key_;
  SymmetricKey crs_key_;
  SymmetricKey extraction_master_;
  mutable std::mutex mutex_;
  std::map<std::string, Relation> relations_;
  std::vector<Digest> issued_;
  std::uint64_t counter_ = 0;
};

}  // namespace qlease::oracles

#endif  // QLEASE_CRYPTO_ORACLES_HPP
