#pragma once

#include <cstdint>
#include <memory>

#include "permcc/engine.hpp"
#include "permcc/funcspec.hpp"
#include "permcc/measure.hpp"
#include "permcc/reductions.hpp"

namespace permcc {

struct PsrConfig {
  double kappa_kor = 48.0;
  double kappa_bucketed = 16.0;
  double amp = 18.0;  // majority repetitions = ceil(amp * ln(1/delta))
};

//! Repetitions needed to push a 1/3-error test to error delta; 1 when delta >= 1/3.
int majority_reps(double delta, double amp = 18.0);

// KOR parity sketch ---------------------------------------------------------

struct KorParams {
  int n = 0;
  int c = 0;  // center actually sketched (n - c for the flipped variant)
  int g = 1;
  bool flipped = false;
  double p = 0.5;
  int T = 1;
  double threshold = 0.0;  // on the fraction of disagreeing parities
};

//! T = ceil(kappa (c/g)^2) rounds; the flipped variant tests n-c with Alice's input complemented.
KorParams kor_params(int n, int c, int g, double kappa, bool flipped = false);
//! Probability that one round's parities differ at distance d.
double kor_q(double p, int d);

void kor_write(const KorParams& k, const Bits& x, const RandomView& v, std::uint64_t stream, BitString& out);
//! True when the message says distance >= c+g (in the original, unflipped sense).
bool kor_read(const KorParams& k, const Bits& y, const RandomView& v, std::uint64_t stream, BitReader& in);

//! One-way; outputs 1 iff distance >= c+g.
Protocol kor_hd(int n, int c, int g, double kappa = 48.0, bool flipped = false);

// Bucketed GHD ----------------------------------------------------------------

struct GhdParams {
  int n = 0, a = 0, b = 0, c = 0, g = 1;
  double alpha = 0.0, beta = 0.0;
  std::int64_t B = 1;
  std::int64_t ell = 1;
  int T = 1;
  int index_bits = 1;  // ceil(log2(ell + 1))
};

//! B = 100(a+b)(a/g)^2, ell = ceil((2B/a) ln(20a/g)), T = ceil(kappa (a/g)^2).
GhdParams ghd_params(int n, int a, int b, int c, int g, double kappa = 16.0);

//! Shared objects of one atomic run. Buckets are probed in a uniformly random
//! order; a uniform hash followed by a uniform relabelling of the buckets is
//! again a uniform hash, so bucket(i) returns coordinate i's probe rank directly.
struct TauRound {
  const GhdParams* params;
  StreamView hash;
  std::uint64_t base;  // first word of this round in the stream

  TauRound(const GhdParams& p, const StreamView& s, std::uint64_t round)
      : params(&p), hash(s), base(round * static_cast<std::uint64_t>(p.n)) {}
  std::uint64_t bucket(int coord) const;
};

//! Alice's index j in [1, ell], or 0 for abort.
std::int64_t tau_index(const TauRound& r, const Bits& x);
//! Bob's +1/-1: product of (1 - 2 y_i) over the bucket probed at step j; +1 on abort.
int tau_output(const TauRound& r, const Bits& y, std::int64_t j);

void ghd_write(const GhdParams& p, const Bits& x, const RandomView& v, std::uint64_t stream, BitString& out);
//! Fraction of +1 outcomes above which Bob says distance >= c+g: the midpoint
//! (2 + alpha + beta)/4 of the ideal rates 1/2 + alpha/2 and 1/2 + beta/2.
double ghd_threshold(const GhdParams& p);
//! True when the count of +1 reaches ghd_threshold(p) * T, i.e. distance >= c+g.
bool ghd_read(const GhdParams& p, const Bits& y, const RandomView& v, std::uint64_t stream, BitReader& in);

//! One-way; requires a <= b <= n/2.
Protocol ghd_bucketed(const GhdParams& p);

// Jump resolution -------------------------------------------------------------

struct ResolvePlan {
  Target original;
  Normalization norm;
  Target normalized;
  bool use_kor = false;
  KorParams kor;
  GhdParams ghd;
  int reps = 1;
  std::int64_t atomic_bits = 0;
  std::int64_t budget = 0;  // reps * atomic_bits + 1 outcome bit
};

ResolvePlan resolve_plan(int n, int a, int b, int c, int g, double delta, const PsrConfig& cfg = {});

//! Sender side: the party that is Alice after normalization writes reps sketches.
void resolve_write(const ResolvePlan& p, const Bits& own, bool own_is_x, const RandomView& v, std::uint64_t stream,
                   BitString& out);
//! Receiver side: majority (ties go below); returns true when distance >= c+g in original terms.
bool resolve_read(const ResolvePlan& p, const Bits& own, bool own_is_x, const RandomView& v, std::uint64_t stream,
                  BitReader& in);

//! Outputs 1 iff distance >= c+g; the receiver announces the outcome with 1 bit.
Protocol resolve_jump(int n, int a, int b, int c, int g, double delta, const PsrConfig& cfg = {});

// Full protocol -----------------------------------------------------------------

double full_psr_delta(std::size_t jump_count);
//! 2 ceil(log2(n+1)) + (1 + ceil(log2(|J|+1))) * max resolve budget over the slice's jumps.
std::int64_t full_psr_budget(const FunctionSpec& f, int a, int b, const PsrConfig& cfg = {});
//! Value of slice (a,b) on plateau i (between jump i-1 and jump i).
Ternary plateau_value(const SliceView& s, const std::vector<Jump>& js, std::size_t i);

Protocol full_two_way_psr(std::shared_ptr<const FunctionSpec> f, const PsrConfig& cfg = {});

}  // namespace permcc
