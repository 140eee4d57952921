#include "permcc/randomness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "permcc/errors.hpp"

namespace permcc {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

enum Lane : std::uint64_t { kShared = 0, kNoise = 1, kAlicePrivate = 2, kBobPrivate = 3 };

std::uint64_t lane_key(std::uint64_t seed, std::uint64_t stream, std::uint64_t lane) {
  std::uint64_t k = mix64(seed + kGamma);
  k = mix64(k ^ stream);
  return mix64(k ^ ((lane + 1) * kGamma));
}

}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t keyed_word(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return mix64(lane_key(seed, stream, kShared) + index * kGamma);
}

std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p + kGamma));
  return h;
}

BernoulliMask::BernoulliMask(double p) : p_(p) {
  if (!(p >= 0.0 && p <= 0.5)) throw ValidationError("BernoulliMask: p must lie in [0, 1/2]");
  double pmf = std::pow(1.0 - p, 64);
  double acc = 0.0;
  for (int j = 0; j < 64; ++j) {
    acc += pmf;
    cdf_[j] = acc;
    if (p > 0.0) pmf = pmf * (64.0 - j) / (j + 1.0) * (p / (1.0 - p));
  }
  cdf_[64] = 1.0;
}

std::uint64_t BernoulliMask::draw(std::uint64_t state) const {
  std::uint64_t s = state;
  auto next = [&s] {
    s += kGamma;
    return mix64(s);
  };
  const double u = to_unit(next());
  int m = 0;
  while (m < 64 && u >= cdf_[m]) ++m;
  const bool invert = m > 32;
  int need = invert ? 64 - m : m;
  std::uint64_t mask = 0;
  std::uint64_t pool = 0;
  int avail = 0;
  while (need > 0) {
    if (avail == 0) {
      pool = next();
      avail = 10;
    }
    const std::uint64_t bit = std::uint64_t{1} << (pool & 63);
    pool >>= 6;
    --avail;
    if (!(mask & bit)) {
      mask |= bit;
      --need;
    }
  }
  return invert ? ~mask : mask;
}

RandomnessMode::RandomnessMode(RandomnessKind kind, double rho, std::uint64_t seed)
    : kind_(kind), rho_(rho), seed_(seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("rho must lie in [0, 1]");
  const double p = noise_probability();
  if (p > 0.0 && p < 0.5) noise_ = std::make_shared<const BernoulliMask>(p);
}

RandomnessMode RandomnessMode::perfect(std::uint64_t seed) { return {RandomnessKind::Perfect, 1.0, seed}; }

RandomnessMode RandomnessMode::correlated(double rho, std::uint64_t seed) {
  return {RandomnessKind::Correlated, rho, seed};
}

RandomnessMode RandomnessMode::private_coins(std::uint64_t seed) { return {RandomnessKind::Private, 0.0, seed}; }

RandomnessMode RandomnessMode::with_seed(std::uint64_t seed) const {
  RandomnessMode m = *this;
  m.seed_ = seed;
  return m;
}

std::uint64_t StreamView::word(std::uint64_t index) const {
  const std::uint64_t u = mix64(shared_key_ + index * kGamma);
  if (uniform_noise_) return u ^ mix64(noise_key_ + index * kGamma);
  if (noise_ == nullptr) return u;
  return u ^ noise_->draw(mix64(noise_key_ + index * kGamma));
}

RandomView::RandomView(const RandomnessMode& mode, Party party)
    : party_(party), rho_(mode.rho()), seed_(mode.seed()), kind_(mode.kind()), noise_(mode.noise()) {}

StreamView RandomView::stream(std::uint64_t id) const {
  StreamView s;
  s.shared_key_ = lane_key(seed_, id, kShared);
  if (party_ == Party::Bob) {
    const double p = (1.0 - rho_) / 2.0;
    if (p >= 0.5) {
      s.uniform_noise_ = true;
      s.noise_key_ = lane_key(seed_, id, kNoise);
    } else if (p > 0.0) {
      s.noise_ = noise_;
      s.noise_key_ = lane_key(seed_, id, kNoise);
    }
  }
  return s;
}

std::uint64_t RandomView::private_word(std::uint64_t stream, std::uint64_t index) const {
  const auto lane = party_ == Party::Alice ? kAlicePrivate : kBobPrivate;
  return mix64(lane_key(seed_, stream, lane) + index * kGamma);
}

DsbsStream dsbs_stream(const RandomnessMode& mode) {
  return {RandomView(mode, Party::Alice), RandomView(mode, Party::Bob)};
}

CorrelatedHash::CorrelatedHash(const RandomView& view, std::uint64_t stream, int r)
    : s_(view.stream(stream)), r_(r) {
  if (r < 1) throw ValidationError("hash width must be >= 1");
  words_ = static_cast<std::uint64_t>((r + 63) / 64);
  const int tail = r % 64;
  last_mask_ = tail == 0 ? ~std::uint64_t{0} : ((std::uint64_t{1} << tail) - 1);
}

void CorrelatedHash::hash(std::uint64_t key, std::uint64_t* out) const {
  for (std::uint64_t w = 0; w < words_; ++w) out[w] = s_.word(key * words_ + w);
  out[words_ - 1] &= last_mask_;
}

std::vector<std::uint64_t> CorrelatedHash::hash(std::uint64_t key) const {
  std::vector<std::uint64_t> out(words_);
  hash(key, out.data());
  return out;
}

int CorrelatedHash::distance(const std::uint64_t* a, const std::uint64_t* b, int words) {
  int d = 0;
  for (int w = 0; w < words; ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

CorrelatedHashFamily correlated_hash_family(int r, const RandomnessMode& mode, std::uint64_t stream) {
  return {CorrelatedHash(RandomView(mode, Party::Alice), stream, r),
          CorrelatedHash(RandomView(mode, Party::Bob), stream, r)};
}

GaussianStream::GaussianStream(const RandomView& view, std::uint64_t stream, int dim, int K)
    : s_(view.stream(stream)), dim_(dim), K_(K) {
  if (dim < 1) throw ValidationError("gaussian stream: dim must be >= 1");
  if (K < 1) throw ValidationError("gaussian stream: K must be >= 1");
  if (K % 64 != 0 && 64 % K != 0) throw ValidationError("gaussian stream: K must divide or be a multiple of 64");
}

int GaussianStream::sum_bits(std::uint64_t bit_index) const {
  if (K_ == 64) return 64 - 2 * std::popcount(s_.word(bit_index >> 6));
  if (K_ > 64) {
    int ones = 0;
    const std::uint64_t first = bit_index >> 6;
    for (int i = 0; i < K_ / 64; ++i) ones += std::popcount(s_.word(first + i));
    return K_ - 2 * ones;
  }
  const std::uint64_t w = s_.word(bit_index >> 6) >> (bit_index & 63);
  const std::uint64_t mask = (std::uint64_t{1} << K_) - 1;
  return K_ - 2 * std::popcount(w & mask);
}

double GaussianStream::coordinate(std::uint64_t round, int j) const {
  const std::uint64_t coord = round * static_cast<std::uint64_t>(dim_) + static_cast<std::uint64_t>(j);
  return sum_bits(coord * static_cast<std::uint64_t>(K_)) / std::sqrt(static_cast<double>(K_));
}

void GaussianStream::fill(std::uint64_t round, std::span<double> out) const {
  for (int j = 0; j < dim_; ++j) out[j] = coordinate(round, j);
}

double GaussianStream::project(std::uint64_t round, std::span<const double> u) const {
  const std::uint64_t base = round * static_cast<std::uint64_t>(dim_);
  double acc = 0.0;
  if (K_ == 64) {
    for (int j = 0; j < dim_; ++j) acc += u[j] * (64 - 2 * std::popcount(s_.word(base + j)));
  } else if (K_ > 64) {
    for (int j = 0; j < dim_; ++j) acc += u[j] * sum_bits((base + j) * static_cast<std::uint64_t>(K_));
  } else {
    // Several coordinates share a word: walk each word once, K bits at a time.
    const std::uint64_t mask = (std::uint64_t{1} << K_) - 1;
    static const auto tables = [] {
      std::array<std::array<double, 256>, 9> t{};
      for (int k = 1; k <= 8; ++k)
        for (int v = 0; v < 256; ++v) t[k][v] = k - 2 * std::popcount(static_cast<unsigned>(v) & ((1u << k) - 1));
      return t;
    }();
    const bool small = K_ <= 8;
    const auto& table = tables[small ? K_ : 0];
    std::uint64_t bit = base * static_cast<std::uint64_t>(K_);
    int j = 0;
    while (j < dim_) {
      std::uint64_t w = s_.word(bit >> 6) >> (bit & 63);
      const int fit = std::min<int>(dim_ - j, static_cast<int>((64 - (bit & 63)) / K_));
      for (int c = 0; c < fit; ++c, ++j, w >>= K_)
        acc += u[j] * (small ? table[w & mask] : K_ - 2 * std::popcount(w & mask));
      bit += static_cast<std::uint64_t>(fit) * K_;
    }
  }
  return acc / std::sqrt(static_cast<double>(K_));
}

GaussianPairStream gaussian_pair_stream(int dim, const RandomnessMode& mode, int K, std::uint64_t stream) {
  return {GaussianStream(RandomView(mode, Party::Alice), stream, dim, K),
          GaussianStream(RandomView(mode, Party::Bob), stream, dim, K)};
}

}  // namespace permcc
