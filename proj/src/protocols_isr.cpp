#include "permcc/protocols_isr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "permcc/errors.hpp"
#include "permcc/protocols_psr.hpp"

namespace permcc {

namespace {

constexpr std::uint64_t kSsiStream = 0x737369;
constexpr std::uint64_t kRsiStream = 0x727369;
constexpr std::uint64_t kGapStream = 0x676170;
constexpr std::uint64_t kHdStream = 0x6864;
constexpr std::uint64_t kPiStream = 0x7069;
constexpr std::uint64_t kNewmanStream = 0x6e6d;
constexpr std::uint64_t kFullStream = 0x66756c6c;

void require_rho(double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ValidationError("ISR protocols need a design rho in (0, 1]");
}

void push_hash(BitString& out, const std::uint64_t* h, int r) {
  for (int j = 0; j < r; ++j) out.push_bit((h[j >> 6] >> (j & 63)) & 1u);
}

void read_hash(BitReader& in, std::uint64_t* h, int r) {
  for (int w = 0; w < (r + 63) / 64; ++w) h[w] = 0;
  for (int j = 0; j < r; ++j)
    if (in.read_bit()) h[j >> 6] |= std::uint64_t{1} << (j & 63);
}

std::uint64_t fingerprint(const Bits& x) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL ^ x.size();
  std::uint64_t w = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    w |= static_cast<std::uint64_t>(x[i] & 1u) << (i & 63);
    if ((i & 63) == 63 || i + 1 == x.size()) {
      h = mix64(h ^ w) + (i >> 6);
      w = 0;
    }
  }
  return mix64(h);
}

int hash_width(double c, double pairs, double delta, double rho) {
  return std::max(1, static_cast<int>(std::ceil(c * std::log(std::max(1.0, pairs) / delta) / (rho * rho))));
}

int gamma_bits(std::uint64_t v) { return 2 * (std::bit_width(v + 1) - 1) + 1; }

void push_gamma(BitString& out, std::uint64_t v) {
  const int len = std::bit_width(v + 1);
  for (int i = 1; i < len; ++i) out.push_bit(false);
  out.push_uint(v + 1, len);
}

std::uint64_t read_gamma(BitReader& in) {
  int zeros = 0;
  while (!in.read_bit()) ++zeros;
  std::uint64_t v = 1;
  for (int i = 0; i < zeros; ++i) v = (v << 1) | (in.read_bit() ? 1u : 0u);
  return v - 1;
}

BitString tail_of(BitReader& in) {
  BitString s;
  while (in.remaining() > 0) s.push_bit(in.read_bit());
  return s;
}

}  // namespace

double ssi_cutoff(double rho) { return 0.5 - rho / 4.0; }

bool hashes_match(const std::uint64_t* a, const std::uint64_t* b, int r, double rho) {
  return CorrelatedHash::distance(a, b, (r + 63) / 64) <= ssi_cutoff(rho) * r;
}

// Small set intersection ---------------------------------------------------------

void ssi_write(const Bits& own, const RandomView& v, std::uint64_t stream, int r, BitString& out) {
  const CorrelatedHash h(v, stream, r);
  std::vector<std::uint64_t> buf(h.words());
  for (int i : support(own)) {
    h.hash(static_cast<std::uint64_t>(i), buf.data());
    push_hash(out, buf.data(), r);
  }
}

int ssi_count(const Bits& own, int count, const RandomView& v, std::uint64_t stream, int r, double rho,
              BitReader& in) {
  const CorrelatedHash h(v, stream, r);
  const int words = h.words();
  std::vector<std::uint64_t> theirs(static_cast<std::size_t>(count) * words);
  for (int i = 0; i < count; ++i) read_hash(in, theirs.data() + static_cast<std::size_t>(i) * words, r);
  std::vector<std::uint64_t> mine(words);
  int m = 0;
  for (int j : support(own)) {
    h.hash(static_cast<std::uint64_t>(j), mine.data());
    for (int i = 0; i < count; ++i) {
      if (hashes_match(mine.data(), theirs.data() + static_cast<std::size_t>(i) * words, r, rho)) {
        ++m;
        break;
      }
    }
  }
  return m;
}

namespace {

void check_weight(const Bits& x, int w, const char* who) {
  if (weight(x) != w)
    throw ValidationError(std::string("ssi: ") + who + "'s weight differs from the declared " + std::to_string(w));
}

PartyTask ssi_alice(Bits x, RandomView v, int a, int b, int r, double rho, bool alice_hashes) {
  check_weight(x, a, "Alice");
  if (alice_hashes) {
    BitString m;
    ssi_write(x, v, kSsiStream, r, m);
    co_await send(std::move(m));
    co_return std::nullopt;
  }
  BitString m = co_await receive();
  BitReader in(m);
  const int count = ssi_count(x, b, v, kSsiStream, r, rho, in);
  BitString out;
  out.push_uint(static_cast<std::uint64_t>(count), ceil_log2(static_cast<std::uint64_t>(b) + 1));
  co_await send(std::move(out));
  co_return std::nullopt;
}

PartyTask ssi_bob(Bits y, RandomView v, int a, int b, int r, double rho, bool alice_hashes) {
  check_weight(y, b, "Bob");
  if (alice_hashes) {
    BitString m = co_await receive();
    BitReader in(m);
    co_return ssi_count(y, a, v, kSsiStream, r, rho, in);
  }
  BitString m;
  ssi_write(y, v, kSsiStream, r, m);
  co_await send(std::move(m));
  BitString back = co_await receive();
  co_return static_cast<std::int64_t>(back.read_uint(0, ceil_log2(static_cast<std::uint64_t>(b) + 1)));
}

}  // namespace

Protocol ssi_isr(int a, int b, int r, SsiDirection direction, double rho) {
  require_rho(rho);
  if (a < 0 || b < 0 || r < 1) throw ValidationError("ssi: need a, b >= 0 and r >= 1");
  const bool alice_hashes = direction == SsiDirection::OneWay || a <= b;
  Protocol p;
  p.name = direction == SsiDirection::OneWay ? "ssi_isr_one_way" : "ssi_isr_two_way";
  p.one_way = direction == SsiDirection::OneWay;
  p.alice = [=](Bits x, RandomView v) { return ssi_alice(std::move(x), std::move(v), a, b, r, rho, alice_hashes); };
  p.bob = [=](Bits y, RandomView v) { return ssi_bob(std::move(y), std::move(v), a, b, r, rho, alice_hashes); };
  p.budget = [=](int, int) -> std::int64_t {
    if (alice_hashes) return static_cast<std::int64_t>(a) * r;
    return static_cast<std::int64_t>(b) * r + ceil_log2(static_cast<std::uint64_t>(b) + 1);
  };
  return p;
}

// Reverse sparse indexing -----------------------------------------------------------

void rsi_write(std::uint64_t value, const RandomView& v, std::uint64_t stream, int r, BitString& out) {
  const CorrelatedHash h(v, stream, r);
  const auto buf = h.hash(value);
  push_hash(out, buf.data(), r);
}

bool rsi_member(std::span<const std::uint64_t> set, const RandomView& v, std::uint64_t stream, int r, double rho,
                BitReader& in) {
  const CorrelatedHash h(v, stream, r);
  std::vector<std::uint64_t> theirs(h.words()), mine(h.words());
  read_hash(in, theirs.data(), r);
  for (std::uint64_t s : set) {
    h.hash(s, mine.data());
    if (hashes_match(mine.data(), theirs.data(), r, rho)) return true;
  }
  return false;
}

Protocol reverse_sparse_indexing_isr(int k, int r, double rho) {
  require_rho(rho);
  if (k < 0 || k > 30 || r < 1) throw ValidationError("rsi: need 0 <= k <= 30 and r >= 1");
  auto send_fn = [r](const Bits& x, const RandomView& v) {
    const auto s = support(x);
    if (s.size() != 1) throw ValidationError("rsi: Alice must hold a single element");
    BitString m;
    rsi_write(static_cast<std::uint64_t>(s.front()), v, kRsiStream, r, m);
    return m;
  };
  auto decide_fn = [k, r, rho](const Bits& y, const RandomView& v, const BitString& m) -> std::int64_t {
    const auto s = support(y);
    if (s.size() > (std::size_t{1} << k)) throw ValidationError("rsi: Bob's set exceeds 2^k elements");
    std::vector<std::uint64_t> set(s.begin(), s.end());
    BitReader in(m);
    return rsi_member(set, v, kRsiStream, r, rho, in) ? 1 : 0;
  };
  return one_way_protocol("reverse_sparse_indexing_isr", send_fn, decide_fn,
                          [r](int, int) { return static_cast<std::int64_t>(r); });
}

// Gap inner product -----------------------------------------------------------------

double sign_agreement(double rho, double ip) { return 0.5 + std::asin(std::clamp(rho * ip, -1.0, 1.0)) / std::numbers::pi; }

GapIpParams gap_ip_params(int dim, double c, double s, double rho, double kappa) {
  require_rho(rho);
  if (!(s >= -1.0 && s < c && c <= 1.0)) throw ValidationError("gap_ip: need -1 <= s < c <= 1");
  if (dim < 1) throw ValidationError("gap_ip: dim must be >= 1");
  GapIpParams p;
  p.dim = dim;
  p.c = c;
  p.s = s;
  p.rho = rho;
  const double gap = rho * (c - s);
  p.T = static_cast<int>(std::min(1e9, std::ceil(kappa / (gap * gap))));
  p.T = std::max(p.T, 1);
  p.cutoff = (sign_agreement(rho, c) + sign_agreement(rho, s)) / 2.0;
  return p;
}

void gap_ip_write(const GapIpParams& p, std::span<const double> u, const RandomView& v, std::uint64_t stream, int K,
                  BitString& out) {
  const GaussianStream g(v, stream, p.dim, K);
  for (int r = 0; r < p.T; ++r) out.push_bit(g.project(static_cast<std::uint64_t>(r), u) >= 0.0);
}

int gap_ip_agreements(const GapIpParams& p, std::span<const double> w, const RandomView& v, std::uint64_t stream,
                      int K, BitReader& in) {
  const GaussianStream g(v, stream, p.dim, K);
  int agree = 0;
  for (int r = 0; r < p.T; ++r) agree += (g.project(static_cast<std::uint64_t>(r), w) >= 0.0) == in.read_bit();
  return agree;
}

Protocol gap_ip_isr(int n, double c, double s, double rho, double kappa, int K) {
  const GapIpParams p = gap_ip_params(n, c, s, rho, kappa);
  auto send_fn = [p, K](const Bits& x, const RandomView& v) {
    BitString m;
    gap_ip_write(p, sign_vector(x), v, kGapStream, K, m);
    return m;
  };
  auto decide_fn = [p, K](const Bits& y, const RandomView& v, const BitString& m) -> std::int64_t {
    BitReader in(m);
    const int agree = gap_ip_agreements(p, sign_vector(y), v, kGapStream, K, in);
    return agree >= p.cutoff * p.T ? 1 : 0;
  };
  return one_way_protocol("gap_ip_isr", send_fn, decide_fn, [p](int, int) { return static_cast<std::int64_t>(p.T); });
}

double empirical_sign_agreement(std::span<const double> u, std::span<const double> v, const RandomnessMode& mode,
                                int rounds, int K) {
  if (u.size() != v.size() || u.empty()) throw ValidationError("sign agreement: vectors differ in length");
  const auto g = gaussian_pair_stream(static_cast<int>(u.size()), mode, K, kGapStream);
  std::int64_t agree = 0;
  for (int r = 0; r < rounds; ++r) {
    const bool sa = g.alice.project(static_cast<std::uint64_t>(r), u) >= 0.0;
    const bool sb = g.bob.project(static_cast<std::uint64_t>(r), v) >= 0.0;
    agree += sa == sb;
  }
  return static_cast<double>(agree) / rounds;
}

// Tensor powers -----------------------------------------------------------------------

std::vector<double> tensor_power(std::span<const double> u, int t) {
  if (t < 1) throw ValidationError("tensor power: t must be >= 1");
  std::vector<double> out(u.begin(), u.end());
  for (int i = 1; i < t; ++i) {
    std::vector<double> next;
    next.reserve(out.size() * u.size());
    for (double a : out)
      for (double b : u) next.push_back(a * b);
    out = std::move(next);
  }
  return out;
}

std::uint64_t symmetric_dim(int n, int t) {
  // C(n + t - 1, t), saturating.
  long double v = 1.0L;
  for (int i = 1; i <= t; ++i) v = v * (n - 1 + i) / i;
  if (v > 1e18L) return ~std::uint64_t{0};
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(v)));
}

std::vector<double> symmetric_power(std::span<const double> u, int t) {
  if (t < 1) throw ValidationError("symmetric power: t must be >= 1");
  const int n = static_cast<int>(u.size());
  std::vector<double> fact(t + 1, 1.0);
  for (int i = 1; i <= t; ++i) fact[i] = fact[i - 1] * i;
  std::vector<double> out;
  out.reserve(symmetric_dim(n, t));
  std::vector<int> idx(t, 0);
  for (;;) {
    double prod = 1.0, denom = 1.0;
    int run = 1;
    for (int i = 0; i < t; ++i) {
      prod *= u[idx[i]];
      if (i + 1 < t && idx[i + 1] == idx[i]) {
        ++run;
      } else {
        denom *= fact[run];
        run = 1;
      }
    }
    out.push_back(std::sqrt(fact[t] / denom) * prod);
    int p = t - 1;
    while (p >= 0 && idx[p] == n - 1) --p;
    if (p < 0) break;
    ++idx[p];
    for (int i = p + 1; i < t; ++i) idx[i] = idx[p];
  }
  return out;
}

std::vector<double> sign_vector(const Bits& x) {
  const double s = 1.0 / std::sqrt(static_cast<double>(x.size()));
  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = x[i] ? -s : s;
  return u;
}

// Small Hamming distance ----------------------------------------------------------------

HdBattery::HdBattery(int n, std::vector<int> thresholds, double delta, const IsrConfig& cfg)
    : n_(n), K_(cfg.gaussian_K), rho_(cfg.rho) {
  require_rho(cfg.rho);
  if (n < 1) throw ValidationError("hd battery: n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("hd battery: delta must lie in (0, 1)");
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  for (int i : thresholds) {
    if (i < 0 || i >= n) throw ValidationError("hd battery: thresholds must lie in [0, n-1]");
    HdTest t;
    t.threshold = i;
    t.flipped = i > n - 1 - i;
    t.k = std::min(i, n - 1 - i);
    t.fallback = 20 * t.k > n;
    t.t = t.k >= 1 ? (n + 10 * t.k - 1) / (10 * t.k) : 1;
    full_send_ = full_send_ || t.fallback;
    tests_.push_back(t);
  }
  if (full_send_) return;

  const double stage_delta = delta / 2.0;
  const double kappa = cfg.kappa_hd * std::log(1.0 / stage_delta);
  cut1_.assign(tests_.size(), 0.0);
  cut2_.assign(tests_.size(), 0.0);
  s2_index_.assign(tests_.size(), -1);
  for (std::size_t j = 0; j < tests_.size(); ++j) {
    const HdTest& t = tests_[j];
    if (t.k == 0) {
      eq_r_ = hash_width(cfg.ssi_const, 1.0, delta, rho_);
      continue;
    }
    const double nn = n;
    const GapIpParams g1 = gap_ip_params(n, 1.0 - 2.0 * t.k / nn, 0.8, rho_, kappa);
    if (!has_stage1_ || g1.T > stage1_.T) stage1_ = g1;
    has_stage1_ = true;
    cut1_[j] = g1.cutoff;

    if (std::pow(nn, t.t) > static_cast<double>(cfg.dim_cap))
      throw DimensionOverflow("hd_isr: n^t = " + std::to_string(n) + "^" + std::to_string(t.t) +
                              " exceeds the dimension cap");
    const int dim = static_cast<int>(symmetric_dim(n, t.t));
    const GapIpParams g2 = gap_ip_params(dim, std::pow(1.0 - 2.0 * t.k / nn, t.t),
                                         std::pow(1.0 - 2.0 * (t.k + 1) / nn, t.t), rho_, kappa);
    auto it = std::find_if(stage2_.begin(), stage2_.end(), [&](const Stage2& s) { return s.t == t.t; });
    if (it == stage2_.end()) {
      stage2_.push_back({t.t, g2});
      it = stage2_.end() - 1;
    } else if (g2.T > it->gap.T) {
      it->gap.T = g2.T;
    }
    s2_index_[j] = static_cast<int>(it - stage2_.begin());
    cut2_[j] = g2.cutoff;
  }
}

std::int64_t HdBattery::bits() const {
  if (tests_.empty()) return 0;
  if (full_send_) return n_;
  std::int64_t b = eq_r_ + (has_stage1_ ? stage1_.T : 0);
  for (const auto& s : stage2_) b += s.gap.T;
  return b;
}

void HdBattery::write(const Bits& x, const RandomView& v, std::uint64_t stream, BitString& out) const {
  if (tests_.empty()) return;
  if (full_send_) {
    for (auto bit : x) out.push_bit(bit != 0);
    return;
  }
  if (eq_r_ > 0) rsi_write(fingerprint(x), v, stream_id({stream, 3}), eq_r_, out);
  if (!has_stage1_) return;
  const auto u = sign_vector(x);
  gap_ip_write(stage1_, u, v, stream_id({stream, 1}), K_, out);
  for (const auto& s : stage2_) {
    const auto su = symmetric_power(u, s.t);
    gap_ip_write(s.gap, su, v, stream_id({stream, 2, static_cast<std::uint64_t>(s.t)}), K_, out);
  }
}

std::vector<bool> HdBattery::read(const Bits& y, const RandomView& v, std::uint64_t stream, BitReader& in) const {
  std::vector<bool> res(tests_.size(), false);
  if (tests_.empty()) return res;
  if (full_send_) {
    Bits x(n_);
    for (int i = 0; i < n_; ++i) x[i] = in.read_bit() ? 1 : 0;
    const int d = hamming(x, y);
    for (std::size_t j = 0; j < tests_.size(); ++j) res[j] = d <= tests_[j].threshold;
    return res;
  }
  bool eq_direct = false, eq_flipped = false;
  if (eq_r_ > 0) {
    const CorrelatedHash h(v, stream_id({stream, 3}), eq_r_);
    std::vector<std::uint64_t> theirs(h.words()), mine(h.words());
    read_hash(in, theirs.data(), eq_r_);
    h.hash(fingerprint(y), mine.data());
    eq_direct = hashes_match(mine.data(), theirs.data(), eq_r_, rho_);
    h.hash(fingerprint(complement(y)), mine.data());
    eq_flipped = hashes_match(mine.data(), theirs.data(), eq_r_, rho_);
  }
  int agree1 = 0;
  std::vector<int> agree2(stage2_.size(), 0);
  if (has_stage1_) {
    const auto w = sign_vector(y);
    agree1 = gap_ip_agreements(stage1_, w, v, stream_id({stream, 1}), K_, in);
    for (std::size_t s = 0; s < stage2_.size(); ++s) {
      const auto sw = symmetric_power(w, stage2_[s].t);
      agree2[s] = gap_ip_agreements(stage2_[s].gap, sw, v,
                                    stream_id({stream, 2, static_cast<std::uint64_t>(stage2_[s].t)}), K_, in);
    }
  }
  for (std::size_t j = 0; j < tests_.size(); ++j) {
    const HdTest& t = tests_[j];
    bool near;
    if (t.k == 0) {
      near = t.flipped ? eq_flipped : eq_direct;
    } else {
      // Complementing y negates v, and v^(x)t picks up (-1)^t.
      const int T1 = stage1_.T;
      const int a1 = t.flipped ? T1 - agree1 : agree1;
      const Stage2& s2 = stage2_[s2_index_[j]];
      const int T2 = s2.gap.T;
      const int a2 = (t.flipped && t.t % 2 == 1) ? T2 - agree2[s2_index_[j]] : agree2[s2_index_[j]];
      near = a1 >= cut1_[j] * T1 && a2 >= cut2_[j] * T2;
    }
    res[j] = t.flipped ? !near : near;
  }
  return res;
}

Protocol hd_isr(int n, int k, const IsrConfig& cfg) {
  if (k < 0 || k >= n) throw ValidationError("hd_isr: need 0 <= k < n");
  auto bat = std::make_shared<const HdBattery>(n, std::vector<int>{k}, 0.25, cfg);
  auto send_fn = [bat](const Bits& x, const RandomView& v) {
    BitString m;
    bat->write(x, v, kHdStream, m);
    return m;
  };
  auto decide_fn = [bat](const Bits& y, const RandomView& v, const BitString& m) -> std::int64_t {
    BitReader in(m);
    return bat->read(y, v, kHdStream, in)[0] ? 1 : 0;
  };
  return one_way_protocol("hd_isr", send_fn, decide_fn, [bat](int, int) { return bat->bits(); });
}

// Strongly permutation-invariant functions ---------------------------------------------

PiClassification classify_strongly_pi(int n, const StronglyPiDescriptor& d) {
  if (static_cast<int>(d.sigma.size()) != n + 1) throw ValidationError("strongly PI: sigma must have n+1 entries");
  PiClassification c;
  const auto& g = d.gate;
  const int ones = g[0] + g[1] + g[2] + g[3];
  auto reversed = [&] {
    std::vector<std::uint8_t> r(n + 1);
    for (int i = 0; i <= n; ++i) r[i] = d.sigma[n - i];
    return r;
  };
  auto is = [&](int g0, int g1, int g2, int g3) { return g[0] == g0 && g[1] == g1 && g[2] == g2 && g[3] == g3; };
  if (ones == 0 || ones == 4) {
    c.kind = PiCase::Constant;
    c.tau = {d.sigma[ones == 0 ? 0 : n]};
  } else if (ones == 2) {
    if (is(0, 0, 1, 1) || is(1, 1, 0, 0)) {
      c.kind = PiCase::ProjectionX;
      c.tau = g[2] ? d.sigma : reversed();
    } else if (is(0, 1, 0, 1) || is(1, 0, 1, 0)) {
      c.kind = PiCase::ProjectionY;
      c.tau = g[1] ? d.sigma : reversed();
    } else {
      c.kind = PiCase::Distance;
      c.tau = g[1] ? d.sigma : reversed();
    }
  } else {
    // One cell differs from the rest: it is the AND of two literals.
    const int target = ones == 1 ? 1 : 0;
    int pos = 0;
    while (g[pos] != target) ++pos;
    c.kind = PiCase::Intersection;
    c.flip_x = ((pos >> 1) & 1) == 0;
    c.flip_y = (pos & 1) == 0;
    c.tau = ones == 1 ? d.sigma : reversed();
  }
  return c;
}

namespace {

std::vector<int> tau_thresholds(const std::vector<std::uint8_t>& tau) {
  std::vector<int> out;
  for (std::size_t i = 0; i + 1 < tau.size(); ++i)
    if (tau[i] != tau[i + 1]) out.push_back(static_cast<int>(i));
  return out;
}

// Output when the tests on ascending thresholds report "distance > i" for the first p of them.
std::int64_t distance_plateau(const std::vector<std::uint8_t>& tau, const std::vector<int>& thr, std::size_t p) {
  return tau[p == 0 ? 0 : thr[p - 1] + 1];
}

struct IntersectionJumps {
  int m_lo = 0;
  std::vector<int> ms;          // tau[m] != tau[m+1], ascending
  std::vector<int> thresholds;  // "m_true >= m + 1" iff distance <= a + b - 2m - 2
};

IntersectionJumps intersection_jumps(const std::vector<std::uint8_t>& tau, int n, int a, int b) {
  IntersectionJumps j;
  j.m_lo = std::max(0, a + b - n);
  const int m_hi = std::min(a, b);
  for (int m = j.m_lo; m < m_hi; ++m) {
    if (tau[m] != tau[m + 1]) {
      j.ms.push_back(m);
      j.thresholds.push_back(a + b - 2 * m - 2);
    }
  }
  return j;
}

std::int64_t intersection_plateau(const std::vector<std::uint8_t>& tau, const IntersectionJumps& j, std::size_t p) {
  return tau[p == 0 ? j.m_lo : j.ms[p - 1] + 1];
}

double step_delta(std::size_t jumps) {
  const int steps = std::max(1, ceil_log2(jumps + 1));
  return 1.0 / (3.0 * steps);
}

struct PiPlan {
  int n = 0;
  MeasureMode mode = MeasureMode::TwoWay;
  IsrConfig cfg;
  PiClassification cls;
  int K = 1;
  int L = 0;
  int wa = 0;
  std::vector<int> dist_thr;
  std::vector<HdBattery> dist_steps;  // two-way: one per threshold
  std::optional<HdBattery> dist_all;  // one-way

  Bits tilde_x(const Bits& x) const { return cls.flip_x ? complement(x) : x; }
  Bits tilde_y(const Bits& y) const { return cls.flip_y ? complement(y) : y; }

  //! One-way union of intersection thresholds over Bob's unscreened weights.
  HdBattery union_battery(int ap) const {
    std::set<int> thr;
    for (int bp = L; bp <= n; ++bp)
      for (int i : intersection_jumps(cls.tau, n, ap, bp).thresholds) thr.insert(i);
    std::vector<int> v(thr.begin(), thr.end());
    return HdBattery(n, v, 1.0 / (3.0 * std::max<std::size_t>(1, v.size())), cfg);
  }

  std::int64_t budget(int a, int b) const {
    switch (cls.kind) {
      case PiCase::Constant:
      case PiCase::ProjectionY:
        return 0;
      case PiCase::ProjectionX:
        return 1;
      case PiCase::Distance: {
        if (mode == MeasureMode::OneWay) return dist_all->bits();
        std::int64_t worst = 0;
        for (const auto& bt : dist_steps) worst = std::max(worst, bt.bits());
        return std::max(1, ceil_log2(dist_thr.size() + 1)) * (worst + 1);
      }
      case PiCase::Intersection: {
        const int ap = cls.flip_x ? n - a : a;
        const int bp = cls.flip_y ? n - b : b;
        if (ap < L) return 1;
        if (mode == MeasureMode::OneWay) return 1 + wa + union_battery(ap).bits();
        if (bp < L) return 2 + 2 * wa;
        const auto j = intersection_jumps(cls.tau, n, ap, bp);
        std::int64_t worst = 0;
        for (int i : j.thresholds) worst = std::max(worst, HdBattery(n, {i}, step_delta(j.ms.size()), cfg).bits());
        return 2 + 2 * wa + std::max(1, ceil_log2(j.ms.size() + 1)) * (worst + 1);
      }
    }
    return 0;
  }
};

std::uint64_t step_stream(std::size_t step) { return stream_id({kPiStream, step}); }

PartyTask pi_alice(Bits x, RandomView v, std::shared_ptr<const PiPlan> p) {
  const auto& tau = p->cls.tau;
  switch (p->cls.kind) {
    case PiCase::Constant:
    case PiCase::ProjectionY:
      co_return std::nullopt;
    case PiCase::ProjectionX: {
      BitString m;
      m.push_bit(tau[weight(x)] != 0);
      co_await send(std::move(m));
      co_return std::nullopt;
    }
    case PiCase::Distance: {
      if (p->mode == MeasureMode::OneWay) {
        BitString m;
        p->dist_all->write(x, v, kPiStream, m);
        co_await send(std::move(m));
        co_return std::nullopt;
      }
      std::size_t lo = 0, hi = p->dist_thr.size(), step = 0;
      while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        BitString m;
        p->dist_steps[mid].write(x, v, step_stream(step++), m);
        co_await send(std::move(m));
        const bool below = (co_await receive()).bit(0);
        if (below) hi = mid; else lo = mid + 1;
      }
      co_return std::nullopt;
    }
    case PiCase::Intersection: {
      const Bits xt = p->tilde_x(x);
      const int ap = weight(xt);
      BitString m;
      m.push_bit(ap >= p->L);
      if (ap >= p->L) m.push_uint(static_cast<std::uint64_t>(ap - p->L), p->wa);
      if (p->mode == MeasureMode::OneWay) {
        if (ap >= p->L) p->union_battery(ap).write(xt, v, kPiStream, m);
        co_await send(std::move(m));
        co_return std::nullopt;
      }
      co_await send(std::move(m));
      if (ap < p->L) co_return std::nullopt;
      BitString r = co_await receive();
      if (!r.bit(0)) co_return std::nullopt;
      const int bp = p->L + static_cast<int>(r.read_uint(1, p->wa));
      const auto j = intersection_jumps(tau, p->n, ap, bp);
      const double dl = step_delta(j.ms.size());
      std::size_t lo = 0, hi = j.ms.size(), step = 0;
      while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        BitString s;
        HdBattery(p->n, {j.thresholds[mid]}, dl, p->cfg).write(xt, v, step_stream(step++), s);
        co_await send(std::move(s));
        const bool beyond = (co_await receive()).bit(0);
        if (beyond) lo = mid + 1; else hi = mid;
      }
      co_return std::nullopt;
    }
  }
  co_return std::nullopt;
}

PartyTask pi_bob(Bits y, RandomView v, std::shared_ptr<const PiPlan> p) {
  const auto& tau = p->cls.tau;
  switch (p->cls.kind) {
    case PiCase::Constant:
      co_return tau[0];
    case PiCase::ProjectionY:
      co_return tau[weight(y)];
    case PiCase::ProjectionX:
      co_return (co_await receive()).bit(0) ? 1 : 0;
    case PiCase::Distance: {
      if (p->mode == MeasureMode::OneWay) {
        BitString m = co_await receive();
        BitReader in(m);
        const auto res = p->dist_all->read(y, v, kPiStream, in);
        std::size_t lead = 0;
        while (lead < res.size() && !res[lead]) ++lead;
        co_return distance_plateau(tau, p->dist_thr, lead);
      }
      std::size_t lo = 0, hi = p->dist_thr.size(), step = 0;
      while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        BitString m = co_await receive();
        BitReader in(m);
        const bool below = p->dist_steps[mid].read(y, v, step_stream(step++), in)[0];
        BitString r;
        r.push_bit(below);
        co_await send(std::move(r));
        if (below) hi = mid; else lo = mid + 1;
      }
      co_return distance_plateau(tau, p->dist_thr, lo);
    }
    case PiCase::Intersection: {
      const Bits yt = p->tilde_y(y);
      const int bp = weight(yt);
      BitString m = co_await receive();
      BitReader in(m);
      if (!in.read_bit()) co_return tau[0];
      const int ap = p->L + static_cast<int>(in.read_uint(p->wa));
      if (p->mode == MeasureMode::OneWay) {
        if (bp < p->L) co_return tau[0];
        const HdBattery bat = p->union_battery(ap);
        const auto res = bat.read(yt, v, kPiStream, in);
        const auto j = intersection_jumps(tau, p->n, ap, bp);
        std::size_t lead = 0;
        for (; lead < j.ms.size(); ++lead) {
          const auto& tests = bat.tests();
          const auto it = std::find_if(tests.begin(), tests.end(),
                                       [&](const HdTest& t) { return t.threshold == j.thresholds[lead]; });
          if (!res[static_cast<std::size_t>(it - tests.begin())]) break;
        }
        co_return intersection_plateau(tau, j, lead);
      }
      BitString r;
      r.push_bit(bp >= p->L);
      if (bp >= p->L) r.push_uint(static_cast<std::uint64_t>(bp - p->L), p->wa);
      co_await send(std::move(r));
      if (bp < p->L) co_return tau[0];
      const auto j = intersection_jumps(tau, p->n, ap, bp);
      const double dl = step_delta(j.ms.size());
      std::size_t lo = 0, hi = j.ms.size(), step = 0;
      while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        BitString s = co_await receive();
        BitReader sin(s);
        const bool beyond = HdBattery(p->n, {j.thresholds[mid]}, dl, p->cfg).read(yt, v, step_stream(step++), sin)[0];
        BitString back;
        back.push_bit(beyond);
        co_await send(std::move(back));
        if (beyond) lo = mid + 1; else hi = mid;
      }
      co_return intersection_plateau(tau, j, lo);
    }
  }
  co_return 0;
}

}  // namespace

Protocol strongly_pi_isr(std::shared_ptr<const FunctionSpec> f, MeasureMode mode, const IsrConfig& cfg) {
  if (!f->descriptor()) throw ValidationError("strongly_pi_isr: the function has no gate descriptor");
  require_rho(cfg.rho);
  auto plan = std::make_shared<PiPlan>();
  plan->n = f->n();
  plan->mode = mode;
  plan->cfg = cfg;
  plan->cls = classify_strongly_pi(f->n(), *f->descriptor());
  plan->K = isr_K(isr_k(*f, mode, cfg), cfg.C);
  const int n = plan->n;
  if (plan->cls.kind == PiCase::Distance) {
    plan->dist_thr = tau_thresholds(plan->cls.tau);
    if (mode == MeasureMode::OneWay) {
      plan->dist_all.emplace(n, plan->dist_thr, 1.0 / (3.0 * std::max<std::size_t>(1, plan->dist_thr.size())), cfg);
    } else {
      for (int i : plan->dist_thr) plan->dist_steps.emplace_back(n, std::vector<int>{i}, step_delta(plan->dist_thr.size()), cfg);
    }
  }
  if (plan->cls.kind == PiCase::Intersection) {
    plan->L = std::max(0, n - 2 * plan->K);
    plan->wa = ceil_log2(static_cast<std::uint64_t>(n - plan->L + 1));
    const auto& tau = plan->cls.tau;
    for (int m = 0; m + 1 < plan->L; ++m)
      if (tau[m] != tau[m + 1])
        throw InconsistentMeasure("strongly_pi_isr: the count map jumps below the screening level n - 2Ck");
  }
  Protocol p;
  p.name = "strongly_pi_isr_" + mode_name(mode);
  p.one_way = mode == MeasureMode::OneWay;
  std::shared_ptr<const PiPlan> cp = plan;
  p.alice = [cp](Bits x, RandomView v) { return pi_alice(std::move(x), std::move(v), cp); };
  p.bob = [cp](Bits y, RandomView v) { return pi_bob(std::move(y), std::move(v), cp); };
  p.budget = [cp](int a, int b) { return cp->budget(a, b); };
  return p;
}

// Newman derandomization ------------------------------------------------------------------

std::size_t newman_seed_count(std::size_t domain_size, double epsilon) {
  if (domain_size == 0 || !(epsilon > 0.0)) throw ValidationError("newman: need a nonempty domain and epsilon > 0");
  return static_cast<std::size_t>(std::ceil(2.0 * std::log(2.0 * static_cast<double>(domain_size)) / (epsilon * epsilon)));
}

namespace {

PartyTask newman_alice(Bits x, RandomView v, std::shared_ptr<const NewmanTable> table, PartyProgram base) {
  const std::uint64_t idx = v.private_word(kNewmanStream, 0) % table->seeds.size();
  BitString m;
  m.push_uint(idx, table->index_bits);
  co_await send(std::move(m));
  PartyTask inner = base(std::move(x), RandomView(RandomnessMode::perfect(table->seeds[idx]), Party::Alice));
  for (;;) {
    if (inner.done()) break;
    if (!inner.runnable()) {
      inner.deliver(co_await receive());
      continue;
    }
    if (inner.advance() == PartyTask::Step::Send) co_await send(inner.take_outgoing());
  }
  co_return inner.result();
}

PartyTask newman_bob(Bits y, RandomView, std::shared_ptr<const NewmanTable> table, PartyProgram base) {
  BitString m = co_await receive();
  const std::uint64_t idx = table->index_bits == 0 ? 0 : m.read_uint(0, table->index_bits);
  if (idx >= table->seeds.size()) throw ProtocolError("newman: seed index out of range");
  PartyTask inner = base(std::move(y), RandomView(RandomnessMode::perfect(table->seeds[idx]), Party::Bob));
  for (;;) {
    if (inner.done()) break;
    if (!inner.runnable()) {
      inner.deliver(co_await receive());
      continue;
    }
    if (inner.advance() == PartyTask::Step::Send) co_await send(inner.take_outgoing());
  }
  co_return inner.result();
}

}  // namespace

Newmanized newmanize(const Protocol& base, const std::vector<LabeledInput>& domain, double base_error,
                     double epsilon, std::uint64_t seed) {
  if (domain.size() > (std::size_t{1} << 16)) throw ValidationError("newman: domain larger than 2^16");
  const std::size_t t = newman_seed_count(domain.size(), epsilon);
  auto table = std::make_shared<NewmanTable>();
  table->domain_size = domain.size();
  table->base_error = base_error;
  table->epsilon = epsilon;
  table->index_bits = ceil_log2(t);
  SessionOptions opt;
  opt.record_transcript = false;
  const double limit = base_error + epsilon;
  bool ok = false;
  for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
    table->attempts = attempt + 1;
    table->seeds.resize(t);
    for (std::size_t i = 0; i < t; ++i)
      table->seeds[i] = keyed_word(seed, stream_id({kNewmanStream, static_cast<std::uint64_t>(attempt)}), i);
    ok = true;
    double worst = 0.0;
    for (const auto& li : domain) {
      if (li.expected == Ternary::Undefined) throw ValidationError("newman: domain input has an undefined label");
      const std::int64_t want = li.expected == Ternary::One ? 1 : 0;
      std::size_t errors = 0;
      for (std::uint64_t s : table->seeds)
        errors += run_session(base, li.pair, RandomnessMode::perfect(s), opt).output != want;
      const double e = static_cast<double>(errors) / static_cast<double>(t);
      worst = std::max(worst, e);
      if (e > limit) {
        ok = false;
        break;
      }
    }
    table->max_error = worst;
  }
  if (!ok) throw InfeasibleError("newman: verification failed after 10 attempts; epsilon is too small");

  std::shared_ptr<const NewmanTable> ct = table;
  Protocol p;
  p.name = "newman(" + base.name + ")";
  p.one_way = base.one_way;
  const PartyProgram ba = base.alice, bb = base.bob;
  p.alice = [ct, ba](Bits x, RandomView v) { return newman_alice(std::move(x), std::move(v), ct, ba); };
  p.bob = [ct, bb](Bits y, RandomView v) { return newman_bob(std::move(y), std::move(v), ct, bb); };
  const BudgetFn bbud = base.budget;
  p.budget = [ct, bbud](int a, int b) -> std::int64_t { return ct->index_bits + (bbud ? bbud(a, b) : 0); };
  return {ct, std::move(p)};
}

// Full region protocols ---------------------------------------------------------------------

std::string region_name(Region r) {
  switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
    case Region::IV: return "IV";
  }
  return "?";
}

std::int64_t region_power(int K, int n) {
  if (K >= 31 || (std::int64_t{1} << K) > n) return static_cast<std::int64_t>(n) + 1;
  return std::int64_t{1} << K;
}

RegionLabel classify_region(int n, int a, int b, int K, MeasureMode mode) {
  RegionLabel r;
  r.flip_x = 2 * a > n;
  r.flip_y = 2 * b > n;
  const int A = std::min(a, n - a), B = std::min(b, n - b);
  const std::int64_t P = region_power(K, n);
  if (mode == MeasureMode::OneWay) {
    if (A <= K) r.label = B <= P ? Region::I : Region::II;
    else r.label = std::abs(A - B) < K ? Region::III : Region::IV;
    return r;
  }
  if (A <= K) {
    r.label = B <= P ? Region::I : Region::II;
  } else if (B <= K) {
    r.swap = true;
    r.label = A <= P ? Region::I : Region::II;
  } else {
    r.label = std::abs(A - B) < K ? Region::III : Region::IV;
  }
  return r;
}

int isr_k(const FunctionSpec& f, MeasureMode mode, const IsrConfig& cfg) {
  if (cfg.k_override) {
    if (*cfg.k_override < 0) throw ValidationError("k must be >= 0");
    return *cfg.k_override;
  }
  if (!(cfg.C > 0.0)) throw ValidationError("C must be positive");
  return scaled_k(measure(f, mode), cfg.C);
}

int isr_K(int k, double C) { return std::max(1, static_cast<int>(std::ceil(C * k - 1e-9))); }

std::vector<std::string> region_claim_violations(const FunctionSpec& f, MeasureMode mode, int K) {
  std::vector<std::string> out;
  const int n = f.n();
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b <= n; ++b) {
      const RegionLabel r = classify_region(n, a, b, K, mode);
      const SliceView s = f.slice(a, b);
      const std::string at = "(" + std::to_string(a) + "," + std::to_string(b) + ")";
      if ((r.label == Region::II || r.label == Region::IV) && !s.constant())
        out.push_back("region " + region_name(r.label) + " slice " + at + " depends on the distance");
      if (r.label == Region::III) {
        for (const Jump& j : jumps(s)) {
          const int i = j.c + j.g - 1;
          if (std::min(i, n - 1 - i) > K)
            out.push_back("region III slice " + at + " has a jump at c=" + std::to_string(j.c) + " beyond K");
        }
      }
    }
  }
  return out;
}

namespace {

enum Code : std::uint64_t { kCodeI = 0, kCodeII = 1, kCodeTest = 2 };

struct FullPlan {
  std::shared_ptr<const FunctionSpec> f;
  MeasureMode mode = MeasureMode::TwoWay;
  IsrConfig cfg;
  int n = 0;
  int k = 0;
  int K = 1;
  std::int64_t P = 2;
  int bound = 0;  // largest possible other-side weight in region I
  int wK = 0, w2K = 0;
  int rsi_r = 1;
  std::vector<std::optional<HdBattery>> battery;  // per a with min(a, n-a) > K
  Newmanized newman;

  Ternary first_value(int a, int b) const {
    const SliceView s = f->slice(a, b);
    return s.values.empty() ? Ternary::Undefined : s.values.front();
  }

  std::int64_t constant_value(int a, int b) const {
    const SliceView s = f->slice(a, b);
    if (!s.constant())
      throw InconsistentMeasure("full_isr: slice (" + std::to_string(a) + "," + std::to_string(b) +
                                ") is not independent of the distance");
    return s.values.front() == Ternary::One ? 1 : 0;
  }

  std::int64_t value_or_zero(int a, int b, int d) const {
    if (a < 0 || a > n || b < 0 || b > n) return 0;
    return f->value(a, b, d) == Ternary::One ? 1 : 0;
  }

  int ssi_r(int small) const {
    return hash_width(cfg.ssi_const, static_cast<double>(std::max(small, 1)) * std::max(bound, 1), 1.0 / 12.0,
                      cfg.rho);
  }

  std::vector<std::uint64_t> rsi_candidates(int B) const {
    std::vector<std::uint64_t> c;
    for (int v = std::max(K + 1, B - K + 1); v <= std::min(n / 2, B + K - 1); ++v) c.push_back(static_cast<std::uint64_t>(v));
    return c;
  }

  //! The unique value in (B - K, B + K) congruent to `residue` mod 2K.
  int reconstruct(int B, int residue) const {
    const int m = 2 * K;
    int v = B - K + 1;
    v += ((residue - v) % m + m) % m;
    return v;
  }

  std::vector<int> slice_thresholds(int a, int b) const {
    std::vector<int> out;
    for (const Jump& j : jumps(f->slice(a, b))) out.push_back(j.c + j.g - 1);
    return out;
  }

  HdBattery make_battery(int a) const {
    const int A = std::min(a, n - a);
    std::set<int> thr;
    for (int B = std::max(0, A - K + 1); B <= std::min(n / 2, A + K - 1); ++B) {
      if (mode == MeasureMode::TwoWay && B <= K) continue;
      for (int b : {B, n - B})
        for (int i : slice_thresholds(a, b)) thr.insert(i);
    }
    std::vector<int> v(thr.begin(), thr.end());
    return HdBattery(n, v, 1.0 / (12.0 * std::max<std::size_t>(1, v.size())), cfg);
  }

  std::int64_t region_iii_value(const Bits& y, const RandomView& v, int a, BitReader& in) const {
    const int b = weight(y);
    const HdBattery& bat = *battery[a];
    if (static_cast<std::int64_t>(in.remaining()) < bat.bits()) return 0;
    const auto res = bat.read(y, v, stream_id({kFullStream, 3}), in);
    const SliceView s = f->slice(a, b);
    const auto js = jumps(s);
    std::size_t p = 0;
    for (; p < js.size(); ++p) {
      const int i = js[p].c + js[p].g - 1;
      const auto& tests = bat.tests();
      const auto it = std::find_if(tests.begin(), tests.end(), [&](const HdTest& t) { return t.threshold == i; });
      if (it == tests.end()) return 0;
      if (res[static_cast<std::size_t>(it - tests.begin())]) break;
    }
    return plateau_value(s, js, p) == Ternary::One ? 1 : 0;
  }

  std::int64_t newman_bits(int a, int b) const { return newman.protocol.budget ? newman.protocol.budget(a, b) : 0; }

  std::int64_t budget(int a, int b) const {
    const int A = std::min(a, n - a), B = std::min(b, n - b);
    const auto bat_bits = [&] { return battery[a] ? battery[a]->bits() : 0; };
    if (mode == MeasureMode::OneWay) {
      if (A <= K) return 2 + wK + static_cast<std::int64_t>(A) * ssi_r(A);
      const std::int64_t L = bat_bits();
      return 2 + rsi_r + w2K + gamma_bits(static_cast<std::uint64_t>(L)) + L + newman_bits(a, b);
    }
    std::int64_t bits = 6;
    if (A <= K) return bits + wK + (B <= P ? static_cast<std::int64_t>(A) * ssi_r(A) : 0);
    if (B <= K) return bits + wK + (A <= P ? static_cast<std::int64_t>(B) * ssi_r(B) : 0);
    return bits + rsi_r + 1 + std::max<std::int64_t>(w2K + bat_bits(), newman_bits(a, b));
  }
};

struct Normalized {
  int w = 0;   // |x|
  bool flip = false;
  int W = 0;   // min(w, n - w)
  Bits t;      // complemented when flip
};

Normalized normalize(const Bits& x) {
  Normalized r;
  const int n = static_cast<int>(x.size());
  r.w = weight(x);
  r.flip = 2 * r.w > n;
  r.W = r.flip ? n - r.w : r.w;
  r.t = r.flip ? complement(x) : x;
  return r;
}

std::uint64_t ssi_stream() { return stream_id({kFullStream, 1}); }
std::uint64_t rsi_stream() { return stream_id({kFullStream, 2}); }
std::uint64_t battery_stream() { return stream_id({kFullStream, 3}); }

// Distance between the originals from the normalized intersection count.
int original_distance(int n, int A, int B, int m, bool fx, bool fy) {
  const int d = A + B - 2 * m;
  return fx != fy ? n - d : d;
}

PartyTask full_two_way_alice(Bits x, RandomView v, std::shared_ptr<const FullPlan> p) {
  const int n = p->n;
  const Normalized nx = normalize(x);
  const int A = nx.W;
  BitString m1;
  m1.push_bit(nx.flip);
  m1.push_bit(A <= p->K);
  m1.push_bit(A <= p->P);
  co_await send(std::move(m1));

  BitString m2 = co_await receive();
  BitReader in(m2);
  const bool fy = in.read_bit();
  const auto code = in.read_uint(2);

  if (A <= p->K) {
    BitString m;
    m.push_uint(static_cast<std::uint64_t>(A), p->wK);
    if (code == kCodeI) ssi_write(nx.t, v, ssi_stream(), p->ssi_r(A), m);
    co_await send(std::move(m));
    co_return std::nullopt;
  }
  if (code != kCodeTest) {
    const int B = static_cast<int>(in.read_uint(p->wK));
    const int b = fy ? n - B : B;
    if (code == kCodeII) co_return p->constant_value(nx.w, b);
    const int cnt = ssi_count(nx.t, B, v, ssi_stream(), p->ssi_r(B), p->cfg.rho, in);
    co_return p->value_or_zero(nx.w, b, original_distance(n, A, B, cnt, nx.flip, fy));
  }

  BitString m3;
  rsi_write(static_cast<std::uint64_t>(A), v, rsi_stream(), p->rsi_r, m3);
  co_await send(std::move(m3));
  const bool close = (co_await receive()).bit(0);
  if (close) {
    BitString m;
    m.push_uint(static_cast<std::uint64_t>(A % (2 * p->K)), p->w2K);
    p->battery[nx.w]->write(x, v, battery_stream(), m);
    co_await send(std::move(m));
    co_return std::nullopt;
  }
  PartyTask inner = p->newman.protocol.alice(std::move(x), v);
  for (;;) {
    if (inner.done()) break;
    if (!inner.runnable()) {
      inner.deliver(co_await receive());
      continue;
    }
    if (inner.advance() == PartyTask::Step::Send) co_await send(inner.take_outgoing());
  }
  co_return inner.result();
}

PartyTask full_two_way_bob(Bits y, RandomView v, std::shared_ptr<const FullPlan> p) {
  const int n = p->n;
  const Normalized ny = normalize(y);
  const int B = ny.W;
  BitString m1 = co_await receive();
  const bool fx = m1.bit(0), a_small = m1.bit(1), a_below_power = m1.bit(2);

  if (a_small) {
    const auto code = B <= p->P ? kCodeI : kCodeII;
    BitString m2;
    m2.push_bit(ny.flip);
    m2.push_uint(code, 2);
    co_await send(std::move(m2));
    BitString m3 = co_await receive();
    BitReader in(m3);
    const int A = static_cast<int>(in.read_uint(p->wK));
    const int a = fx ? n - A : A;
    if (code == kCodeII) co_return p->constant_value(a, ny.w);
    const int cnt = ssi_count(ny.t, A, v, ssi_stream(), p->ssi_r(A), p->cfg.rho, in);
    co_return p->value_or_zero(a, ny.w, original_distance(n, A, B, cnt, fx, ny.flip));
  }
  if (B <= p->K) {
    const auto code = a_below_power ? kCodeI : kCodeII;
    BitString m2;
    m2.push_bit(ny.flip);
    m2.push_uint(code, 2);
    m2.push_uint(static_cast<std::uint64_t>(B), p->wK);
    if (code == kCodeI) ssi_write(ny.t, v, ssi_stream(), p->ssi_r(B), m2);
    co_await send(std::move(m2));
    co_return std::nullopt;
  }

  BitString m2;
  m2.push_bit(ny.flip);
  m2.push_uint(kCodeTest, 2);
  co_await send(std::move(m2));
  BitString m3 = co_await receive();
  BitReader rin(m3);
  const auto cands = p->rsi_candidates(B);
  const bool close = rsi_member(cands, v, rsi_stream(), p->rsi_r, p->cfg.rho, rin);
  BitString r;
  r.push_bit(close);
  co_await send(std::move(r));
  if (close) {
    BitString m = co_await receive();
    BitReader in(m);
    const int A = p->reconstruct(B, static_cast<int>(in.read_uint(p->w2K)));
    const int a = fx ? n - A : A;
    if (A <= p->K || A > n / 2 || !p->battery[a]) co_return 0;
    co_return p->region_iii_value(y, v, a, in);
  }
  PartyTask inner = p->newman.protocol.bob(std::move(y), v);
  for (;;) {
    if (inner.done()) break;
    if (!inner.runnable()) {
      inner.deliver(co_await receive());
      continue;
    }
    if (inner.advance() == PartyTask::Step::Send) co_await send(inner.take_outgoing());
  }
  co_return inner.result();
}

PartyTask full_one_way_alice(Bits x, RandomView v, std::shared_ptr<const FullPlan> p) {
  const Normalized nx = normalize(x);
  const int A = nx.W;
  BitString m;
  m.push_bit(nx.flip);
  m.push_bit(A <= p->K);
  if (A <= p->K) {
    m.push_uint(static_cast<std::uint64_t>(A), p->wK);
    ssi_write(nx.t, v, ssi_stream(), p->ssi_r(A), m);
    co_await send(std::move(m));
    co_return std::nullopt;
  }
  rsi_write(static_cast<std::uint64_t>(A), v, rsi_stream(), p->rsi_r, m);
  m.push_uint(static_cast<std::uint64_t>(A % (2 * p->K)), p->w2K);
  const HdBattery& bat = *p->battery[nx.w];
  push_gamma(m, static_cast<std::uint64_t>(bat.bits()));
  bat.write(x, v, battery_stream(), m);
  // Newman part: seed index and the weight protocol's message, as one tail.
  BitString idx_and_base;
  {
    PartyTask na = p->newman.protocol.alice(x, v);
    while (!na.done()) {
      if (!na.runnable()) throw ProtocolError("full_isr: the one-way weight protocol waits for Bob");
      if (na.advance() == PartyTask::Step::Send) idx_and_base.append(na.take_outgoing());
    }
  }
  m.append(idx_and_base);
  co_await send(std::move(m));
  co_return std::nullopt;
}

PartyTask full_one_way_bob(Bits y, RandomView v, std::shared_ptr<const FullPlan> p) {
  const int n = p->n;
  const Normalized ny = normalize(y);
  const int B = ny.W;
  BitString m = co_await receive();
  BitReader in(m);
  const bool fx = in.read_bit();
  if (in.read_bit()) {
    const int A = static_cast<int>(in.read_uint(p->wK));
    const int a = fx ? n - A : A;
    if (B > p->P) co_return p->constant_value(a, ny.w);
    const int cnt = ssi_count(ny.t, A, v, ssi_stream(), p->ssi_r(A), p->cfg.rho, in);
    co_return p->value_or_zero(a, ny.w, original_distance(n, A, B, cnt, fx, ny.flip));
  }
  const auto cands = p->rsi_candidates(B);
  const bool close = rsi_member(cands, v, rsi_stream(), p->rsi_r, p->cfg.rho, in);
  const int residue = static_cast<int>(in.read_uint(p->w2K));
  const auto L = static_cast<std::int64_t>(read_gamma(in));
  if (close) {
    const int A = p->reconstruct(B, residue);
    const int a = fx ? n - A : A;
    if (A <= p->K || A > n / 2 || !p->battery[a] || p->battery[a]->bits() != L) co_return 0;
    co_return p->region_iii_value(y, v, a, in);
  }
  for (std::int64_t i = 0; i < L; ++i) in.read_bit();
  const BitString rest = tail_of(in);
  // Split the tail back into the seed-index message and the weight message.
  const int ib = p->newman.table->index_bits;
  BitString idx, body;
  for (std::size_t i = 0; i < rest.size(); ++i) (static_cast<int>(i) < ib ? idx : body).push_bit(rest.bit(i));
  PartyTask nb = p->newman.protocol.bob(std::move(y), v);
  nb.deliver(std::move(idx));
  nb.deliver(std::move(body));
  while (!nb.done()) {
    if (!nb.runnable()) throw ProtocolError("full_isr: the weight protocol's Bob waits for more messages");
    if (nb.advance() == PartyTask::Step::Send) throw ProtocolError("full_isr: Bob sent in a one-way weight protocol");
  }
  co_return nb.result().value_or(0);
}

PartyTask weight_alice(Bits x, RandomView, int width) {
  BitString m;
  m.push_uint(static_cast<std::uint64_t>(weight(x)), width);
  co_await send(std::move(m));
  co_return std::nullopt;
}

PartyTask weight_bob(Bits y, RandomView, std::shared_ptr<const FunctionSpec> f, int width) {
  const int a = static_cast<int>((co_await receive()).read_uint(0, width));
  const SliceView s = f->slice(a, weight(y));
  co_return !s.values.empty() && s.values.front() == Ternary::One ? 1 : 0;
}

Protocol trivial_weight_protocol(std::shared_ptr<const FunctionSpec> f) {
  const int width = ceil_log2(static_cast<std::uint64_t>(f->n()) + 1);
  Protocol p;
  p.name = "weight_send";
  p.one_way = true;
  p.alice = [width](Bits x, RandomView v) { return weight_alice(std::move(x), std::move(v), width); };
  p.bob = [f, width](Bits y, RandomView v) { return weight_bob(std::move(y), std::move(v), f, width); };
  p.budget = [width](int, int) { return static_cast<std::int64_t>(width); };
  return p;
}

}  // namespace

Protocol full_isr(std::shared_ptr<const FunctionSpec> f, MeasureMode mode, const IsrConfig& cfg) {
  require_rho(cfg.rho);
  if (!f->is_total()) throw ValidationError("full_isr: the function must be total");
  auto plan = std::make_shared<FullPlan>();
  plan->f = f;
  plan->mode = mode;
  plan->cfg = cfg;
  plan->n = f->n();
  const int n = plan->n;
  plan->k = isr_k(*f, mode, cfg);
  plan->K = isr_K(plan->k, cfg.C);
  plan->P = region_power(plan->K, n);
  plan->bound = static_cast<int>(std::min<std::int64_t>(plan->P, n / 2));
  plan->wK = ceil_log2(static_cast<std::uint64_t>(plan->K) + 1);
  plan->w2K = ceil_log2(2 * static_cast<std::uint64_t>(plan->K));
  plan->rsi_r = static_cast<int>(std::ceil(cfg.rsi_const * (plan->K + 3)));
  plan->battery.resize(n + 1);
  for (int a = 0; a <= n; ++a)
    if (std::min(a, n - a) > plan->K) plan->battery[a] = plan->make_battery(a);

  const Protocol base = cfg.weight_protocol ? *cfg.weight_protocol : trivial_weight_protocol(f);
  if (mode == MeasureMode::OneWay && !base.one_way) throw ValidationError("full_isr: one-way mode needs a one-way weight protocol");
  std::vector<LabeledInput> domain;
  domain.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b <= n; ++b) {
      LabeledInput li;
      const int d = valid_distances(n, a, b).front();
      li.pair = canonical_pair(n, a, b, d);
      li.expected = plan->first_value(a, b);
      domain.push_back(std::move(li));
    }
  }
  plan->newman = newmanize(base, domain, cfg.weight_protocol ? cfg.weight_protocol_error : 0.0, cfg.newman_epsilon,
                           cfg.newman_seed);

  std::shared_ptr<const FullPlan> cp = plan;
  Protocol p;
  p.name = "full_isr_" + mode_name(mode);
  p.one_way = mode == MeasureMode::OneWay;
  if (p.one_way) {
    p.alice = [cp](Bits x, RandomView v) { return full_one_way_alice(std::move(x), std::move(v), cp); };
    p.bob = [cp](Bits y, RandomView v) { return full_one_way_bob(std::move(y), std::move(v), cp); };
  } else {
    p.alice = [cp](Bits x, RandomView v) { return full_two_way_alice(std::move(x), std::move(v), cp); };
    p.bob = [cp](Bits y, RandomView v) { return full_two_way_bob(std::move(y), std::move(v), cp); };
  }
  p.budget = [cp](int a, int b) { return cp->budget(a, b); };
  return p;
}

}  // namespace permcc
