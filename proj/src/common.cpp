#include <openssl/evp.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "qlease/bits.hpp"
#include "qlease/digest.hpp"
#include "qlease/rng.hpp"

namespace qlease {

// ---------------------------------------------------------------- Rng

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Block Rng::philox4x32_10(Block ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

void Rng::refill() {
  const Block ctr = {static_cast<std::uint32_t>(block_counter_),
                     static_cast<std::uint32_t>(block_counter_ >> 32),
                     static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  buffer_ = philox4x32_10(ctr, {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
  ++block_counter_;
  used_ = 0;
}

std::uint32_t Rng::next_u32() {
  if (used_ >= 4) refill();
  return buffer_[used_++];
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t hi = next_u32();
  const std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

std::uint64_t Rng::uniform_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  // Lemire's multiply-and-reject.
  std::uint64_t x = next_u64();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<unsigned __int128>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::array<std::uint8_t, 16> Rng::bytes16() {
  std::array<std::uint8_t, 16> out{};
  for (std::size_t i = 0; i < 16; i += 4) {
    const std::uint32_t w = next_u32();
    out[i] = static_cast<std::uint8_t>(w >> 24);
    out[i + 1] = static_cast<std::uint8_t>(w >> 16);
    out[i + 2] = static_cast<std::uint8_t>(w >> 8);
    out[i + 3] = static_cast<std::uint8_t>(w);
  }
  return out;
}

Rng Rng::substream(std::uint64_t id) const {
  return Rng(seed_, splitmix64(stream_ ^ splitmix64(id + 0x5EEDull)));
}

// ---------------------------------------------------------------- BitString

BitString::BitString(std::size_t length) : length_(length), bytes_((length + 7) / 8, 0) {}

BitString BitString::from_bits(std::string_view bits) {
  BitString out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw std::invalid_argument("from_bits: expected only '0'/'1'");
    out.set(i, bits[i] == '1');
  }
  return out;
}

BitString BitString::from_hex(std::string_view hex, std::size_t length) {
  if (hex.size() != (length + 3) / 4) {
    throw std::invalid_argument("from_hex: expected " + std::to_string((length + 3) / 4) + " hex digits for " +
                                std::to_string(length) + " bits");
  }
  BitString out(length);
  for (std::size_t d = 0; d < hex.size(); ++d) {
    const char c = hex[d];
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw std::invalid_argument("from_hex: invalid digit");
    for (int b = 0; b < 4; ++b) {
      const std::size_t i = d * 4 + b;
      const bool bit = (v >> (3 - b)) & 1;
      if (i < length) out.set(i, bit);
      else if (bit) throw std::invalid_argument("from_hex: nonzero padding bits");
    }
  }
  return out;
}

BitString BitString::from_uint(std::uint64_t value, std::size_t length) {
  if (length > 64) throw std::invalid_argument("from_uint: length > 64");
  BitString out(length);
  for (std::size_t i = 0; i < length; ++i) out.set(i, (value >> (length - 1 - i)) & 1u);
  return out;
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes, std::size_t length) {
  if (bytes.size() * 8 < length) throw std::invalid_argument("from_bytes: not enough bytes");
  BitString out(length);
  std::copy_n(bytes.begin(), out.bytes_.size(), out.bytes_.begin());
  if (length % 8 != 0 && !out.bytes_.empty()) out.bytes_.back() &= static_cast<std::uint8_t>(0xFF << (8 - length % 8));
  return out;
}

BitString BitString::random(std::size_t length, Rng& rng) {
  BitString out(length);
  for (std::size_t i = 0; i < length; ++i) out.set(i, rng.next_u32() & 1u);
  return out;
}

bool BitString::get(std::size_t i) const {
  if (i >= length_) throw std::out_of_range("BitString::get");
  return (bytes_[i / 8] >> (7 - i % 8)) & 1u;
}

void BitString::set(std::size_t i, bool value) {
  if (i >= length_) throw std::out_of_range("BitString::set");
  const auto mask = static_cast<std::uint8_t>(1u << (7 - i % 8));
  if (value) bytes_[i / 8] |= mask;
  else bytes_[i / 8] &= static_cast<std::uint8_t>(~mask);
}

bool BitString::is_zero() const {
  return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t b) { return b == 0; });
}

std::uint64_t BitString::to_uint() const {
  if (length_ > 64) throw std::domain_error("BitString::to_uint: longer than 64 bits");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < length_; ++i) v = (v << 1) | (get(i) ? 1u : 0u);
  return v;
}

std::string BitString::to_bits() const {
  std::string s(length_, '0');
  for (std::size_t i = 0; i < length_; ++i) s[i] = get(i) ? '1' : '0';
  return s;
}

std::string BitString::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s((length_ + 3) / 4, '0');
  for (std::size_t d = 0; d < s.size(); ++d) {
    const std::uint8_t byte = bytes_[d / 2];
    s[d] = kDigits[(d % 2 == 0) ? (byte >> 4) : (byte & 0xF)];
  }
  return s;
}

BitString BitString::slice(std::size_t offset, std::size_t count) const {
  if (offset + count > length_) throw std::out_of_range("BitString::slice");
  BitString out(count);
  for (std::size_t i = 0; i < count; ++i) out.set(i, get(offset + i));
  return out;
}

BitString BitString::resized(std::size_t length) const {
  BitString out(length);
  for (std::size_t i = 0; i < std::min(length, length_); ++i) out.set(i, get(i));
  return out;
}

BitString BitString::concat(const BitString& other) const {
  BitString out(length_ + other.length_);
  for (std::size_t i = 0; i < length_; ++i) out.set(i, get(i));
  for (std::size_t i = 0; i < other.length_; ++i) out.set(length_ + i, other.get(i));
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xF]);
  }
  return s;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("from_hex: odd length");
  const BitString bits = BitString::from_hex(hex, hex.size() * 4);
  return bits.bytes();
}

std::string to_base64(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                      static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

Bytes from_base64(std::string_view text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("from_base64: length not a multiple of 4");
  Bytes out(3 * text.size() / 4);
  const int written = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                      static_cast<int>(text.size()));
  if (written < 0) throw std::invalid_argument("from_base64: malformed input");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(written) - padding);
  return out;
}

// ---------------------------------------------------------------- digests

Digest sha256(std::span<const std::uint8_t> data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
    throw std::runtime_error("sha256: EVP_Digest failed");
  }
  return out;
}

Hasher::Hasher(std::string_view domain) : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("Hasher: digest init failed");
  }
  add(domain);
}

Hasher::~Hasher() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

Hasher& Hasher::add(std::span<const std::uint8_t> field) {
  std::uint8_t len[8];
  const std::uint64_t n = field.size();
  for (int i = 0; i < 8; ++i) len[i] = static_cast<std::uint8_t>(n >> (56 - 8 * i));
  auto* ctx = static_cast<EVP_MD_CTX*>(ctx_);
  EVP_DigestUpdate(ctx, len, sizeof len);
  EVP_DigestUpdate(ctx, field.data(), field.size());
  return *this;
}

Hasher& Hasher::add(std::string_view field) {
  return add(std::span(reinterpret_cast<const std::uint8_t*>(field.data()), field.size()));
}

Hasher& Hasher::add_u64(std::uint64_t value) {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(value >> (56 - 8 * i));
  return add(std::span<const std::uint8_t>(buf, 8));
}

Digest Hasher::finish() {
  Digest out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len);
  return out;
}

Bytes keystream(const SymmetricKey& key, std::span<const std::uint8_t> nonce, std::size_t length) {
  Bytes out;
  out.reserve(length + 32);
  for (std::uint64_t block = 0; out.size() < length; ++block) {
    const Digest d = Hasher("qlease/keystream").add(key).add(nonce).add_u64(block).finish();
    out.insert(out.end(), d.begin(), d.end());
  }
  out.resize(length);
  return out;
}

namespace {

std::array<std::uint8_t, 16> seal_tag(const SymmetricKey& key, std::span<const std::uint8_t> nonce,
                                      std::span<const std::uint8_t> ciphertext) {
  const Digest d = Hasher("qlease/seal-tag").add(key).add(nonce).add(ciphertext).finish();
  std::array<std::uint8_t, 16> tag{};
  std::copy_n(d.begin(), 16, tag.begin());
  return tag;
}

}  // namespace

Bytes seal(const SymmetricKey& key, const Salt& nonce, std::span<const std::uint8_t> plaintext) {
  Bytes out(nonce.begin(), nonce.end());
  const Bytes ks = keystream(key, nonce, plaintext.size());
  for (std::size_t i = 0; i < plaintext.size(); ++i) out.push_back(plaintext[i] ^ ks[i]);
  const auto tag = seal_tag(key, nonce, std::span(out).subspan(16));
  out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

std::optional<Bytes> unseal(const SymmetricKey& key, std::span<const std::uint8_t> sealed) {
  if (sealed.size() < 32) return std::nullopt;
  const auto nonce = sealed.first(16);
  const auto body = sealed.subspan(16, sealed.size() - 32);
  const auto tag = sealed.last(16);
  const auto expected = seal_tag(key, nonce, body);
  if (!std::equal(tag.begin(), tag.end(), expected.begin())) return std::nullopt;
  const Bytes ks = keystream(key, nonce, body.size());
  Bytes out(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) out[i] = body[i] ^ ks[i];
  return out;
}

SymmetricKey derive_key(const SymmetricKey& master, std::string_view label) {
  return Hasher("qlease/derive-key").add(master).add(label).finish();
}

Salt derive_salt(std::span<const std::uint8_t> seed, std::string_view label) {
  const Digest d = Hasher("qlease/derive-salt").add(seed).add(label).finish();
  Salt out{};
  std::copy_n(d.begin(), out.size(), out.begin());
  return out;
}

}  // namespace qlease
