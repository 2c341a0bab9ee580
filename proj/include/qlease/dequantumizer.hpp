#ifndef QLEASE_DEQUANTUMIZER_HPP
#define QLEASE_DEQUANTUMIZER_HPP

// A circuit family that any working implementation gives away: a toy FHE
// ideal functionality, the family itself, the extraction attack, the
// resulting SSL-breaking pirate, and a black-box learner baseline.

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
#include "qlease/crypto_oracles.hpp"
#include "qlease/digest.hpp"
#include "qlease/evasive_circuits.hpp"
#include "qlease/rng.hpp"
#include "qlease/ssl_scheme.hpp"

namespace qlease::dequant {

class FheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExtractionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- toy FHE

using PublicKey = Digest;

struct ToyFheKeypair {
  PublicKey pk{};
  SymmetricKey sk{};
};

PublicKey public_key_of(const SymmetricKey& sk);

// nonce(16) | plaintext XOR keystream(sk, nonce) | tag(16); `bits` is the public plaintext length.
class ToyCiphertext {
 public:
  ToyCiphertext(Bytes sealed, std::size_t bits);

  std::size_t plaintext_bits() const { return bits_; }
  const Bytes& bytes() const { return sealed_; }
  Bytes nonce() const;
  Bytes payload() const;
  Bytes tag() const;
  BitString to_bits() const;
  static ToyCiphertext from_bits(const BitString& bits, std::size_t plaintext_bits);

  // Payload bytes replaced by their digest.
  nlohmann::json redacted_json() const;

  friend bool operator==(const ToyCiphertext&, const ToyCiphertext&) = default;

 private:
  Bytes sealed_;
  std::size_t bits_;
};

std::size_t ciphertext_bytes(std::size_t plaintext_bits);
ToyFheKeypair fhe_keygen(Rng& rng);
ToyCiphertext fhe_encrypt(const ToyFheKeypair& keys, const BitString& msg, const Salt& seed);
BitString fhe_decrypt(const SymmetricKey& sk, const ToyCiphertext& ct);

struct FheAccess {
  std::string op;  // keygen, encrypt, eval
  std::string pk;  // hex prefix
  std::string ciphertext;  // hex prefix of the input ciphertext digest, if any
};

// Ideal functionality: holds sk for every registered pk, so encryption and
// homomorphic evaluation (decrypt, run, re-encrypt) happen behind one lock.
class ToyFhe {
 public:
  using Evaluator = std::function<BitString(const BitString&)>;

  ToyFheKeypair keygen(Rng& rng);
  ToyCiphertext encrypt(const PublicKey& pk, const BitString& msg, const Salt& seed);
  ToyCiphertext eval(const PublicKey& pk, const Evaluator& evaluator, const ToyCiphertext& ct);

  std::vector<FheAccess> access_log() const;

 private:
  SymmetricKey secret_for(const PublicKey& pk) const;
  void log(std::string op, const PublicKey& pk, const ToyCiphertext* ct);

  mutable std::mutex mutex_;
  std::map<PublicKey, SymmetricKey> keys_;
  std::vector<FheAccess> log_;
};

// Lockable-obfuscation handles published by reference token.
class LoDirectory {
 public:
  std::shared_ptr<const oracles::LockableObfHandle> publish(oracles::LockableObfHandle handle);
  std::shared_ptr<const oracles::LockableObfHandle> resolve(const std::string& token) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const oracles::LockableObfHandle>> handles_;
};

struct FamilyServices {
  std::shared_ptr<ToyFhe> fhe = std::make_shared<ToyFhe>();
  std::shared_ptr<LoDirectory> directory = std::make_shared<LoDirectory>();
};

// ---------------------------------------------------------------- the family

inline constexpr const char* kFamilyKind = "dequantizable";
inline constexpr std::size_t kTokenBytes = 16;
inline constexpr std::size_t kPayloadBits = 8 * (32 + 16);  // sk | r

// x = 0...0 -> ct1 | lo token | pk, x = a -> b, otherwise 0...0, all padded to m bits.
// Inputs are lambda_bits wide; m fits the branch-1 output.
class DequantumizableCircuit final : public circuits::Program {
 public:
  DequantumizableCircuit(const FamilyServices& services, BitString a, BitString b, Salt r, PublicKey pk,
                         std::shared_ptr<const oracles::LockableObfHandle> lo);

  std::string kind() const override { return kFamilyKind; }
  std::size_t input_bits() const override { return a_.size(); }
  std::size_t output_bits() const override { return m_; }
  BitString eval(const BitString& x) const override;
  BitString search() const override { return BitString::zeros(a_.size()); }
  nlohmann::json to_json() const override;

  const BitString& a() const { return a_; }
  const BitString& b() const { return b_; }
  const Salt& r() const { return r_; }
  const PublicKey& pk() const { return pk_; }
  const oracles::LockableObfHandle& lo() const { return *lo_; }
  const ToyCiphertext& ct1() const { return ct1_; }

  // Componentwise (a, b, r, pk, lo token, n, m).
  friend bool operator==(const DequantumizableCircuit& x, const DequantumizableCircuit& y);

 private:
  BitString a_;
  BitString b_;
  Salt r_;
  PublicKey pk_;
  std::shared_ptr<const oracles::LockableObfHandle> lo_;
  std::size_t m_;
  ToyCiphertext ct1_;
  BitString zero_branch_;
};

std::size_t family_output_bits(std::size_t lambda_bits);

// Uniform a != 0, b != 0, r; fresh keypair; lo over Dec(sk, .) locked to 1|b with payload sk|r.
std::shared_ptr<const DequantumizableCircuit> sample_family(const FamilyServices& services, std::size_t lambda_bits,
                                                            Rng& rng);

// Registers the family kind so that leases of family circuits parse.
void register_family(circuits::ProgramCodec& codec, const FamilyServices& services);

// ---------------------------------------------------------------- implementations

struct ImplementationAccess {
  std::string channel;  // "clear" or "homomorphic"
  std::string input;    // clear input (hex), or the ciphertext digest prefix
};

// Classical stand-in for a quantum program computing a circuit: either a plain
// evaluator with injected errors, or the Run algorithm of a lease.
class QuantumImplementation {
 public:
  // With probability eps the output's first bit is flipped; only on `noisy_point` if given.
  static QuantumImplementation plain(circuits::ProgramPtr program, double eps, std::uint64_t seed,
                                     std::optional<BitString> noisy_point = std::nullopt);
  static QuantumImplementation lease_backed(ssl::CrsPtr crs, ssl::LeasedState lease, std::uint64_t seed);

  std::size_t input_bits() const;
  // Clear query; nullopt is the Run algorithm's rejection.
  std::optional<BitString> query(const BitString& x);
  // Runs the implementation under the FHE functionality.
  ToyCiphertext homomorphic_eval(ToyFhe& fhe, const PublicKey& pk, const ToyCiphertext& ct);

  std::vector<ImplementationAccess> access_log() const { return log_; }
  // Lease-backed: the held state is within 1e-9 trace distance of the initial one.
  bool state_intact() const;
  const std::optional<ssl::LeasedState>& lease() const { return lease_; }

 private:
  QuantumImplementation() : rng_(0) {}
  std::optional<BitString> evaluate(const BitString& x);

  circuits::ProgramPtr program_;
  double eps_ = 0.0;
  std::optional<BitString> noisy_point_;
  ssl::CrsPtr crs_;
  std::optional<ssl::LeasedState> lease_;
  std::optional<ssl::QuantumPart> initial_state_;
  Rng rng_;
  std::vector<ImplementationAccess> log_;
};

struct ExtractionResult {
  std::shared_ptr<const DequantumizableCircuit> reconstructed;
  bool recovered_state_ok = false;
  nlohmann::json trace;
};

// Query at 0...0, evaluate homomorphically on ct1, open the lock with ct2,
// decrypt both ciphertexts with the recovered sk, rebuild. Throws ExtractionFailure.
ExtractionResult attack_extract(QuantumImplementation& impl, const FamilyServices& services);

struct PirateResult {
  ssl::LeasedState original;
  ssl::LeasedState fresh;
  ssl::SecretKey own_key;
  ExtractionResult extraction;
};

PirateResult ssl_breaking_pirate(const ssl::CrsPtr& crs, const ssl::LeasedState& lease,
                                 const FamilyServices& services, Rng& rng);

struct LearnerResult {
  bool success = false;
  std::uint64_t queries = 0;
  std::optional<BitString> found_a;
  // Answers seen, zeros elsewhere.
  circuits::Evaluator attempt;
};

// Black-box learner: queries 0...0 and then distinct random inputs (planted ones first).
LearnerResult oracle_learner_baseline(const circuits::Evaluator& oracle, std::size_t n, std::uint64_t budget, Rng& rng,
                                      const std::vector<BitString>& planted = {});

}  // namespace qlease::dequant

#endif  // QLEASE_DEQUANTUMIZER_HPP
