#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "permcc/engine.hpp"
#include "permcc/funcspec.hpp"
#include "permcc/measure.hpp"

namespace permcc {

struct IsrConfig {
  double rho = 0.9;  // design correlation; sizes every sketch and the SSI cutoff
  double C = 1.0;
  std::optional<int> k_override;
  double kappa_hd = 4.0;  // gap-IP rounds: ceil(kappa_hd ln(1/delta) / (rho (c - s))^2)
  std::uint64_t dim_cap = 10'000'000;
  int gaussian_K = 4;  // +-1 bits summed per Gaussian coordinate
  double ssi_const = 8.0;  // SSI and equality hashes: r = ceil(ssi_const ln(pairs/delta) / rho^2)
  double rsi_const = 8.0;  // interval test: r = ceil(rsi_const (k + 3))
  double newman_epsilon = 0.25;
  std::uint64_t newman_seed = 0x4e45574d;
  //! Region IV weight protocol; when empty, Alice sends a and Bob outputs F(a, b).
  std::optional<Protocol> weight_protocol;
  double weight_protocol_error = 0.0;  // its per-input error, checked by newmanize
};

//! Fractional cutoff 1/2 - rho/4 on the distance between two r-bit hashes.
double ssi_cutoff(double rho);
bool hashes_match(const std::uint64_t* a, const std::uint64_t* b, int r, double rho);

// Small set intersection ---------------------------------------------------------

enum class SsiDirection { OneWay, TwoWay };

//! Hashes of every coordinate in supp(own), ascending, r bits each.
void ssi_write(const Bits& own, const RandomView& v, std::uint64_t stream, int r, BitString& out);
//! Number of coordinates of supp(own) whose hash matches one of the sender's `count` hashes.
int ssi_count(const Bits& own, int count, const RandomView& v, std::uint64_t stream, int r, double rho,
              BitReader& in);

//! Bob outputs |x AND y|. The two-way variant lets the lighter side hash and,
//! when that is Bob, Alice returns the count in ceil(log2(min(a,b)+1)) bits.
Protocol ssi_isr(int a, int b, int r, SsiDirection direction, double rho);

// Reverse sparse indexing -----------------------------------------------------------

void rsi_write(std::uint64_t value, const RandomView& v, std::uint64_t stream, int r, BitString& out);
bool rsi_member(std::span<const std::uint64_t> set, const RandomView& v, std::uint64_t stream, int r, double rho,
                BitReader& in);

//! Alice holds a weight-1 string, Bob a set of size <= 2^k; Bob outputs membership.
Protocol reverse_sparse_indexing_isr(int k, int r, double rho);

// Gap inner product -----------------------------------------------------------------

//! Probability that the two parties' sign bits agree when <u, v> = ip.
double sign_agreement(double rho, double ip);

struct GapIpParams {
  int dim = 1;
  double c = 1.0;
  double s = 0.0;
  double rho = 1.0;
  int T = 1;
  double cutoff = 0.5;  // agreement fraction at or above which Bob says <u,v> >= c
};

//! T = ceil(kappa / (rho (c - s))^2); cutoff halfway between the two agreement rates.
GapIpParams gap_ip_params(int dim, double c, double s, double rho, double kappa);

//! Sign of <u, g_i> for each of T rounds.
void gap_ip_write(const GapIpParams& p, std::span<const double> u, const RandomView& v, std::uint64_t stream, int K,
                  BitString& out);
int gap_ip_agreements(const GapIpParams& p, std::span<const double> w, const RandomView& v, std::uint64_t stream,
                      int K, BitReader& in);

//! One-way on {0,1}^n through u_i = (-1)^{x_i} / sqrt(n); outputs 1 iff <u,v> >= c.
Protocol gap_ip_isr(int n, double c, double s, double rho, double kappa, int K = 16);

//! Fraction of rounds whose signs agree for fixed u, v.
double empirical_sign_agreement(std::span<const double> u, std::span<const double> v, const RandomnessMode& mode,
                                int rounds, int K = 64);

// Tensor powers -----------------------------------------------------------------------

//! Explicit u^{(x)t}, length dim^t.
std::vector<double> tensor_power(std::span<const double> u, int t);
//! Isometric symmetric embedding: coordinates indexed by multisets of size t,
//! weight sqrt(t!/prod m_i!) prod u_i^{m_i}. Inner products equal <u,v>^t.
std::vector<double> symmetric_power(std::span<const double> u, int t);
std::uint64_t symmetric_dim(int n, int t);
std::vector<double> sign_vector(const Bits& x);

// Small Hamming distance ----------------------------------------------------------------

//! One threshold test "distance <= threshold".
struct HdTest {
  int threshold = 0;
  int k = 0;             // min(threshold, n - 1 - threshold)
  bool flipped = false;  // answered through distance(x, not y) <= k
  bool fallback = false;
  int t = 1;             // tensor power of stage 2
};

//! Several threshold tests answered from one message. Stage-1 sketches are
//! shared by all tests and stage-2 sketches by tests with the same t. When any
//! test needs the full-send fallback, Alice sends x and Bob answers all of them exactly.
class HdBattery {
 public:
  HdBattery(int n, std::vector<int> thresholds, double delta, const IsrConfig& cfg);

  const std::vector<HdTest>& tests() const { return tests_; }
  bool full_send() const { return full_send_; }
  std::int64_t bits() const;

  void write(const Bits& x, const RandomView& v, std::uint64_t stream, BitString& out) const;
  //! Per test, in threshold order: true when distance(x, y) <= threshold.
  std::vector<bool> read(const Bits& y, const RandomView& v, std::uint64_t stream, BitReader& in) const;

 private:
  struct Stage2 {
    int t = 1;
    GapIpParams gap;
  };

  int n_;
  int K_;
  double rho_;
  std::vector<HdTest> tests_;
  bool full_send_ = false;
  int eq_r_ = 0;  // 0 when no test has k = 0
  GapIpParams stage1_;
  bool has_stage1_ = false;
  std::vector<Stage2> stage2_;
  std::vector<double> cut1_, cut2_;  // per test
  std::vector<int> s2_index_;        // per test, into stage2_
};

//! One-way; Bob outputs 1 iff distance <= k. Stage 1 separates <= k from >= n/10,
//! stage 2 runs on t-fold powers with t = ceil(n/(10k)); each stage has error <= 1/8.
//! Falls back to sending x when 20k > n; k = 0 uses a hash of x.
Protocol hd_isr(int n, int k, const IsrConfig& cfg = {});

// Strongly permutation-invariant functions ---------------------------------------------

enum class PiCase { Constant, ProjectionX, ProjectionY, Distance, Intersection };

struct PiClassification {
  PiCase kind = PiCase::Constant;
  bool flip_x = false;  // Intersection: count |x~ AND y~| with x~ = not x when set
  bool flip_y = false;
  //! Output as a function of the case's quantity: |x|, |y|, distance, or |x~ AND y~|.
  std::vector<std::uint8_t> tau;
};

PiClassification classify_strongly_pi(int n, const StronglyPiDescriptor& d);

Protocol strongly_pi_isr(std::shared_ptr<const FunctionSpec> f, MeasureMode mode, const IsrConfig& cfg = {});

// Newman derandomization ------------------------------------------------------------------

struct NewmanTable {
  std::size_t domain_size = 0;
  std::vector<std::uint64_t> seeds;
  double base_error = 0.0;
  double epsilon = 0.0;
  double max_error = 0.0;  // verified over the whole domain
  int index_bits = 0;
  int attempts = 0;
};

//! ceil(2 ln(2|D|) / eps^2).
std::size_t newman_seed_count(std::size_t domain_size, double epsilon);

struct Newmanized {
  std::shared_ptr<const NewmanTable> table;
  Protocol protocol;
};

//! Samples t shared seeds, checks exhaustively that every input's error over
//! them is <= base_error + epsilon, resamples up to 10 times. At run time Alice
//! picks an index privately and sends it; both run `base` under that seed.
Newmanized newmanize(const Protocol& base, const std::vector<LabeledInput>& domain, double base_error,
                     double epsilon, std::uint64_t seed);

// Full region protocols ---------------------------------------------------------------------

enum class Region { I, II, III, IV };

std::string region_name(Region r);

struct RegionLabel {
  Region label = Region::I;
  bool flip_x = false;
  bool flip_y = false;
  bool swap = false;  // two-way I/II with Bob holding the small set
};

//! 2^K, saturated above n.
std::int64_t region_power(int K, int n);
RegionLabel classify_region(int n, int a, int b, int K, MeasureMode mode);

//! k from the config (override or ceil(raw / C)) and K = ceil(C k).
int isr_k(const FunctionSpec& f, MeasureMode mode, const IsrConfig& cfg);
int isr_K(int k, double C);

//! Slices labelled II or IV that are not constant, and region-III jumps farther
//! than K from both ends, as readable strings. Empty when the region claims hold.
std::vector<std::string> region_claim_violations(const FunctionSpec& f, MeasureMode mode, int K);

Protocol full_isr(std::shared_ptr<const FunctionSpec> f, MeasureMode mode, const IsrConfig& cfg = {});

}  // namespace permcc
