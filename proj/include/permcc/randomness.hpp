#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace permcc {

//! SplitMix64 output function (Stafford variant 13).
std::uint64_t mix64(std::uint64_t z);

//! Counter-based keyed generator: a pure function of (seed, stream, index).
//! key = mix64(mix64(mix64(seed + gamma) ^ stream) ^ lane), word = mix64(key + index * gamma).
std::uint64_t keyed_word(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

//! Combine several integers into one stream id.
std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts);

//! 53-bit uniform double in [0, 1).
inline double to_unit(std::uint64_t w) { return static_cast<double>(w >> 11) * 0x1.0p-53; }

enum class RandomnessKind { Perfect, Correlated, Private };
enum class Party { Alice, Bob };

//! Draws 64 i.i.d. Bernoulli(p) bits: a Binomial(64, p) count by CDF inversion,
//! then that many distinct positions.
class BernoulliMask {
 public:
  explicit BernoulliMask(double p);
  double p() const { return p_; }
  std::uint64_t draw(std::uint64_t state) const;

 private:
  double p_;
  std::array<double, 65> cdf_{};
};

class RandomnessMode {
 public:
  static RandomnessMode perfect(std::uint64_t seed);
  static RandomnessMode correlated(double rho, std::uint64_t seed);
  static RandomnessMode private_coins(std::uint64_t seed);

  RandomnessKind kind() const { return kind_; }
  double rho() const { return rho_; }
  std::uint64_t seed() const { return seed_; }
  //! Probability that Bob's bit differs from the shared bit.
  double noise_probability() const { return (1.0 - rho_) / 2.0; }
  RandomnessMode with_seed(std::uint64_t seed) const;
  const std::shared_ptr<const BernoulliMask>& noise() const { return noise_; }

 private:
  RandomnessMode(RandomnessKind kind, double rho, std::uint64_t seed);

  RandomnessKind kind_;
  double rho_;
  std::uint64_t seed_;
  std::shared_ptr<const BernoulliMask> noise_;
};

//! One stream of one party's view with precomputed keys; cheap to copy.
class StreamView {
 public:
  std::uint64_t word(std::uint64_t index) const;
  bool bit(std::uint64_t index) const { return (word(index >> 6) >> (index & 63)) & 1u; }
  double unit(std::uint64_t index) const { return to_unit(word(index)); }

 private:
  friend class RandomView;
  std::uint64_t shared_key_ = 0;
  std::uint64_t noise_key_ = 0;
  std::shared_ptr<const BernoulliMask> noise_;  // null: no noise on this view
  bool uniform_noise_ = false;
};

//! A party's view of the correlated source. Alice reads the shared bit u;
//! Bob reads u XOR e with e ~ Bernoulli((1-rho)/2) from a disjoint lane.
//! Both parties also own private coins that the other never sees.
class RandomView {
 public:
  RandomView(const RandomnessMode& mode, Party party);

  Party party() const { return party_; }
  double rho() const { return rho_; }
  std::uint64_t seed() const { return seed_; }

  StreamView stream(std::uint64_t id) const;
  std::uint64_t word(std::uint64_t stream, std::uint64_t index) const { return this->stream(stream).word(index); }
  bool bit(std::uint64_t stream, std::uint64_t index) const { return this->stream(stream).bit(index); }
  std::uint64_t private_word(std::uint64_t stream, std::uint64_t index) const;

 private:
  Party party_;
  double rho_;
  std::uint64_t seed_;
  RandomnessKind kind_;
  std::shared_ptr<const BernoulliMask> noise_;
};

struct DsbsStream {
  RandomView alice;
  RandomView bob;
};

DsbsStream dsbs_stream(const RandomnessMode& mode);

//! One party's accessor h(i) into a family of r-bit strings; the two parties'
//! strings for the same key are rho-correlated bitwise.
class CorrelatedHash {
 public:
  CorrelatedHash(const RandomView& view, std::uint64_t stream, int r);

  int width() const { return r_; }
  int words() const { return static_cast<int>(words_); }
  //! Writes words() 64-bit limbs; unused high bits of the last limb are zero.
  void hash(std::uint64_t key, std::uint64_t* out) const;
  std::vector<std::uint64_t> hash(std::uint64_t key) const;
  static int distance(const std::uint64_t* a, const std::uint64_t* b, int words);

 private:
  StreamView s_;
  int r_;
  std::uint64_t words_;
  std::uint64_t last_mask_;
};

struct CorrelatedHashFamily {
  CorrelatedHash alice;
  CorrelatedHash bob;
};

CorrelatedHashFamily correlated_hash_family(int r, const RandomnessMode& mode, std::uint64_t stream = 0x4a5f);

//! Coordinates of a pseudo-Gaussian vector: (sum of K +-1 bits) / sqrt(K).
class GaussianStream {
 public:
  GaussianStream(const RandomView& view, std::uint64_t stream, int dim, int K = 64);

  int dim() const { return dim_; }
  int K() const { return K_; }
  double coordinate(std::uint64_t round, int j) const;
  void fill(std::uint64_t round, std::span<double> out) const;
  //! <u, g_round> without materialising g_round.
  double project(std::uint64_t round, std::span<const double> u) const;

 private:
  int sum_bits(std::uint64_t bit_index) const;

  StreamView s_;
  int dim_;
  int K_;
};

struct GaussianPairStream {
  GaussianStream alice;
  GaussianStream bob;
};

GaussianPairStream gaussian_pair_stream(int dim, const RandomnessMode& mode, int K = 64, std::uint64_t stream = 0x6a55);

}  // namespace permcc
