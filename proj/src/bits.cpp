#include "permcc/bits.hpp"

#include <bit>

#include "permcc/errors.hpp"

namespace permcc {

int weight(const Bits& x) {
  int w = 0;
  for (auto v : x) w += v;
  return w;
}

int hamming(const Bits& x, const Bits& y) {
  if (x.size() != y.size()) throw ValidationError("hamming: length mismatch");
  int d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] != y[i]);
  return d;
}

int intersection(const Bits& x, const Bits& y) {
  if (x.size() != y.size()) throw ValidationError("intersection: length mismatch");
  int s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] & y[i]);
  return s;
}

Bits complement(const Bits& x) {
  Bits out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] ? 0 : 1;
  return out;
}

std::vector<int> support(const Bits& x) {
  std::vector<int> s;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i]) s.push_back(static_cast<int>(i));
  return s;
}

Bits bits_from_string(const std::string& s) {
  Bits out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '0' || c == '1')
      out.push_back(static_cast<std::uint8_t>(c - '0'));
    else
      throw ValidationError("bit string contains '" + std::string(1, c) + "'");
  }
  return out;
}

std::string bits_to_string(const Bits& x) {
  std::string s;
  s.reserve(x.size());
  for (auto v : x) s.push_back(v ? '1' : '0');
  return s;
}

int ceil_log2(std::uint64_t count) { return count <= 1 ? 0 : static_cast<int>(std::bit_width(count - 1)); }

void BitString::push_uint(std::uint64_t value, int width) {
  if (width < 0 || width > 64) throw ValidationError("push_uint: bad width");
  if (width < 64 && (value >> width) != 0) throw ValidationError("push_uint: value does not fit");
  if (width == 0) return;
  const int used = static_cast<int>(size_ & 63);
  if (used == 0) words_.push_back(0);
  const int free = 64 - used;
  if (width <= free) {
    words_.back() |= value << (free - width);
  } else {
    words_.back() |= value >> (width - free);
    words_.push_back(value << (64 - (width - free)));
  }
  size_ += static_cast<std::size_t>(width);
}

void BitString::append(const BitString& other) {
  std::size_t pos = 0;
  for (; pos + 64 <= other.size_; pos += 64) push_uint(other.read_uint(pos, 64), 64);
  const int rest = static_cast<int>(other.size_ - pos);
  if (rest > 0) push_uint(other.read_uint(pos, rest), rest);
}

std::uint64_t BitString::read_uint(std::size_t pos, int width) const {
  if (width < 0 || width > 64) throw ValidationError("read_uint: bad width");
  if (pos + static_cast<std::size_t>(width) > size_) throw ValidationError("read_uint: out of range");
  if (width == 0) return 0;
  const std::size_t w = pos >> 6;
  const int off = static_cast<int>(pos & 63);
  std::uint64_t v = words_[w] << off;
  if (off + width > 64) v |= words_[w + 1] >> (64 - off);
  return v >> (64 - width);
}

std::string BitString::to_string() const {
  std::string s;
  s.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) s.push_back(bit(i) ? '1' : '0');
  return s;
}

bool BitReader::read_bit() {
  if (pos_ >= s_->size()) throw ValidationError("message too short");
  return s_->bit(pos_++);
}

std::uint64_t BitReader::read_uint(int width) {
  auto v = s_->read_uint(pos_, width);
  pos_ += static_cast<std::size_t>(width);
  return v;
}

}  // namespace permcc
