#ifndef QLEASE_BITS_HPP
#define QLEASE_BITS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qlease {

class Rng;

using Bytes = std::vector<std::uint8_t>;

// Fixed-length bit string. Bit 0 is the most significant bit of byte 0;
// hex renderings follow the same order and pad the final nibble with zeros.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t length);

  static BitString zeros(std::size_t length) { return BitString(length); }
  // "0101" -> bits 0,1,0,1
  static BitString from_bits(std::string_view bits);
  static BitString from_hex(std::string_view hex, std::size_t length);
  // Big-endian: bit 0 carries the highest of the `length` low bits of value.
  static BitString from_uint(std::uint64_t value, std::size_t length);
  static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t length);
  static BitString random(std::size_t length, Rng& rng);

  std::size_t size() const { return length_; }
  bool get(std::size_t i) const;
  void set(std::size_t i, bool value);
  bool is_zero() const;

  // Requires size() <= 64.
  std::uint64_t to_uint() const;
  std::string to_bits() const;
  std::string to_hex() const;
  const Bytes& bytes() const { return bytes_; }

  // Bits [offset, offset + count) as a new string.
  BitString slice(std::size_t offset, std::size_t count) const;
  // Zero-extends (or truncates) to the given length.
  BitString resized(std::size_t length) const;
  BitString concat(const BitString& other) const;

  friend bool operator==(const BitString&, const BitString&) = default;
  friend bool operator<(const BitString& a, const BitString& b) {
    return a.length_ != b.length_ ? a.length_ < b.length_ : a.bytes_ < b.bytes_;
  }

 private:
  std::size_t length_ = 0;
  Bytes bytes_;
};

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);
std::string to_base64(std::span<const std::uint8_t> bytes);
Bytes from_base64(std::string_view text);

}  // namespace qlease

#endif  // QLEASE_BITS_HPP
