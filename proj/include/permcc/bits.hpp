#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace permcc {

//! One input string, one byte per coordinate (0 or 1).
using Bits = std::vector<std::uint8_t>;

int weight(const Bits& x);
int hamming(const Bits& x, const Bits& y);
int intersection(const Bits& x, const Bits& y);
Bits complement(const Bits& x);
std::vector<int> support(const Bits& x);
Bits bits_from_string(const std::string& s);
std::string bits_to_string(const Bits& x);

//! Number of bits needed to write any value in [0, count), i.e. ceil(log2(count)).
int ceil_log2(std::uint64_t count);

//! A message on the channel, packed most significant bit first into 64-bit
//! words. The engine only ever looks at size().
class BitString {
 public:
  BitString() = default;

  void push_bit(bool b) { push_uint(b ? 1u : 0u, 1); }
  void push_uint(std::uint64_t value, int width);
  void append(const BitString& other);

  bool bit(std::size_t i) const { return (words_[i >> 6] >> (63 - (i & 63))) & 1u; }
  std::uint64_t read_uint(std::size_t pos, int width) const;
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::string to_string() const;

  bool operator==(const BitString&) const = default;

 private:
  std::vector<std::uint64_t> words_;  // bits past size_ are zero
  std::size_t size_ = 0;
};

//! Sequential reader over a BitString; throws ValidationError on overrun.
class BitReader {
 public:
  explicit BitReader(const BitString& s) : s_(&s) {}
  bool read_bit();
  std::uint64_t read_uint(int width);
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return s_->size() - pos_; }

 private:
  const BitString* s_;
  std::size_t pos_ = 0;
};

}  // namespace permcc
