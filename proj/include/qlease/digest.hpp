#ifndef QLEASE_DIGEST_HPP
#define QLEASE_DIGEST_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "qlease/bits.hpp"

namespace qlease {

inline constexpr const char* kDigestAlgorithm = "sha256";

using Digest = std::array<std::uint8_t, 32>;
using Salt = std::array<std::uint8_t, 16>;
using SymmetricKey = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);

// Incremental SHA-256 over length-prefixed fields, so that distinct field
// sequences never collide by concatenation.
class Hasher {
 public:
  explicit Hasher(std::string_view domain);
  ~Hasher();
  Hasher(const Hasher&) = delete;
  Hasher& operator=(const Hasher&) = delete;

  Hasher& add(std::span<const std::uint8_t> field);
  Hasher& add(std::string_view field);
  Hasher& add_u64(std::uint64_t value);
  Digest finish();

 private:
  void* ctx_;
};

// SHA-256 in counter mode; the keystream is a function of (key, nonce).
Bytes keystream(const SymmetricKey& key, std::span<const std::uint8_t> nonce, std::size_t length);

// Authenticated symmetric sealing: nonce(16) | ciphertext | tag(16).
Bytes seal(const SymmetricKey& key, const Salt& nonce, std::span<const std::uint8_t> plaintext);
std::optional<Bytes> unseal(const SymmetricKey& key, std::span<const std::uint8_t> sealed);

SymmetricKey derive_key(const SymmetricKey& master, std::string_view label);
Salt derive_salt(std::span<const std::uint8_t> seed, std::string_view label);

}  // namespace qlease

#endif  // QLEASE_DIGEST_HPP
