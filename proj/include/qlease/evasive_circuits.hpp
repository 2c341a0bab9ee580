#ifndef QLEASE_EVASIVE_CIRCUITS_HPP
#define QLEASE_EVASIVE_CIRCUITS_HPP

// Compute-and-compare circuits C[C, alpha] and their searchable subclasses.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qlease/bits.hpp"
#include "qlease/digest.hpp"
#include "qlease/field_linalg.hpp"

namespace qlease {
class Rng;
}

namespace qlease::circuits {

class Unsatisfiable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedSearch : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr std::size_t kTruthTableMaxInputs = 16;
inline constexpr std::size_t kExhaustiveMaxInputs = 20;

// Bits used per Z_q digit in affine encodings.
std::size_t digit_width(unsigned q);
BitString encode_digits(std::span<const field::Residue> digits, unsigned q);
// Digits are reduced mod q.
std::vector<field::Residue> decode_digits(const BitString& bits, unsigned q);
// True when every digit is already < q.
bool is_canonical_encoding(const BitString& bits, unsigned q);

struct IdentityBody {
  std::size_t n;
};
// y_i = x_i for i in support, 0 elsewhere.
struct ProjectionBody {
  std::size_t n;
  std::vector<std::size_t> support;
};
// x in Z_q^cols (digit encoded) -> M x in Z_q^rows.
struct AffineBody {
  field::Matrix matrix;
};
struct TruthTableBody {
  std::size_t n;
  std::size_t m;
  std::shared_ptr<const std::vector<BitString>> table;
};
// Toy FHE decryption: input is a sealed ciphertext of plaintext_bits bits;
// output is a validity bit followed by the plaintext (zeros on failure).
struct FheDecryptBody {
  SymmetricKey key;
  std::size_t plaintext_bits;
};

class BooleanCircuit {
 public:
  using Body = std::variant<IdentityBody, ProjectionBody, AffineBody, TruthTableBody, FheDecryptBody>;

  static BooleanCircuit identity(std::size_t n);
  static BooleanCircuit projection(std::size_t n, std::vector<std::size_t> support);
  static BooleanCircuit affine(field::Matrix matrix);
  static BooleanCircuit truth_table(std::size_t n, std::size_t m, std::vector<BitString> table);
  static BooleanCircuit fhe_decrypt(const SymmetricKey& key, std::size_t plaintext_bits);

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  const Body& body() const { return body_; }
  BitString eval(const BitString& x) const;

  nlohmann::json to_json() const;
  static BooleanCircuit from_json(const nlohmann::json& j);

 private:
  BooleanCircuit(Body body, std::size_t n, std::size_t m) : body_(std::move(body)), n_(n), m_(m) {}

  Body body_;
  std::size_t n_;
  std::size_t m_;
};

// Anything the lessor can lease: a deterministic program with an efficiently
// findable accepting input (one with a nonzero output).
class Program {
 public:
  virtual ~Program() = default;
  virtual std::string kind() const = 0;
  virtual std::size_t input_bits() const = 0;
  virtual std::size_t output_bits() const = 0;
  virtual BitString eval(const BitString& x) const = 0;
  virtual BitString search() const = 0;
  virtual nlohmann::json to_json() const = 0;

  bool accepts(const BitString& x) const { return !eval(x).is_zero(); }
};

using ProgramPtr = std::shared_ptr<const Program>;

enum class SearchKind { point, wildcard, affine, plaintext_eq, custom };
std::string to_string(SearchKind kind);
SearchKind search_kind_from_string(const std::string& s);

struct SearchTag {
  SearchKind kind = SearchKind::custom;
  std::optional<std::uint64_t> cipher_key;  // plaintext_eq only
};

// C[C, alpha] (msg absent: outputs the single bit 1 on a match) or
// C[C, alpha, msg] (outputs msg on a match, zeros otherwise).
class CncCircuit final : public Program {
 public:
  CncCircuit(BooleanCircuit inner, BitString lock, std::optional<BitString> msg, SearchTag tag);

  static CncCircuit point(const BitString& lock);
  static CncCircuit wildcard(std::size_t n, std::vector<std::size_t> support, const BitString& lock);
  static CncCircuit affine(const field::Matrix& matrix, std::span<const field::Residue> target);
  static CncCircuit plaintext_equality(std::size_t n, std::uint64_t key, const BitString& plaintext);
  CncCircuit with_message(BitString msg) const;

  const BooleanCircuit& inner() const { return inner_; }
  const BitString& lock() const { return lock_; }
  const std::optional<BitString>& msg() const { return msg_; }
  const SearchTag& tag() const { return tag_; }

  std::string kind() const override { return to_string(tag_.kind); }
  std::size_t input_bits() const override { return inner_.n(); }
  std::size_t output_bits() const override { return msg_ ? msg_->size() : 1; }
  BitString eval(const BitString& x) const override;
  // Throws Unsatisfiable or UnsupportedSearch; never returns a rejected input.
  BitString search() const override;
  nlohmann::json to_json() const override;
  static CncCircuit from_json(const nlohmann::json& j);

 private:
  BooleanCircuit inner_;
  BitString lock_;
  std::optional<BitString> msg_;
  SearchTag tag_;
};

// Toy keyed permutation on {0,1}^n (seeded shuffle), n <= 16.
std::vector<std::uint32_t> toy_cipher_table(std::size_t n, std::uint64_t key);
BitString toy_encrypt(std::size_t n, std::uint64_t key, const BitString& plaintext);

// ---------------------------------------------------------------- sampling

struct CircuitSample {
  CncCircuit circuit;
  Bytes aux;
  double entropy_bits;
  std::string distribution;  // "unpredictable" or "pseudo-entropic"
};

enum class InnerKind { identity, random_table };

// Lock uniform and independent of the inner circuit and of aux.
CircuitSample sample_unpredictable(std::size_t n, std::size_t m, Rng& rng,
                                   std::optional<InnerKind> inner = std::nullopt);
// Same sampler; only the annotation differs at this scale.
CircuitSample sample_pseudo_entropic(std::size_t n, std::size_t m, Rng& rng,
                                     std::optional<InnerKind> inner = std::nullopt);

CncCircuit random_point(std::size_t n, Rng& rng);
CncCircuit random_wildcard(std::size_t n, Rng& rng);
// Consistent system over Z_q with `rows` equations in `cols` unknowns.
CncCircuit random_affine(unsigned q, std::size_t rows, std::size_t cols, Rng& rng);

using CircuitSampler = std::function<CncCircuit(Rng&)>;

// ---------------------------------------------------------------- equality, codecs

using Evaluator = std::function<BitString(const BitString&)>;

// Exhaustive comparison over {0,1}^n, n <= 20.
bool is_functionally_equal(const Evaluator& a, const Evaluator& b, std::size_t n);
bool is_functionally_equal(const Program& a, const Program& b);

// Maps the "kind" field of a program description to its parser.
class ProgramCodec {
 public:
  using Parser = std::function<ProgramPtr(const nlohmann::json&)>;

  static ProgramCodec with_circuit_kinds();
  void add(const std::string& kind, Parser parser);
  ProgramPtr parse(const nlohmann::json& j) const;
  bool knows(const std::string& kind) const { return parsers_.count(kind) != 0; }

 private:
  std::map<std::string, Parser> parsers_;
};

}  // namespace qlease::circuits

#endif  // QLEASE_EVASIVE_CIRCUITS_HPP
