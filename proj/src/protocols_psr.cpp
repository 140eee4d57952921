#include "permcc/protocols_psr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "permcc/errors.hpp"

namespace permcc {

int majority_reps(double delta, double amp) {
  if (!(delta > 0.0)) throw ValidationError("delta must be positive");
  if (delta >= 1.0 / 3.0) return 1;
  return static_cast<int>(std::ceil(amp * std::log(1.0 / delta)));
}

namespace {

std::vector<std::uint64_t> pack(const Bits& x) {
  std::vector<std::uint64_t> w((x.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i]) w[i >> 6] |= std::uint64_t{1} << (i & 63);
  return w;
}

std::uint64_t tail_mask(int n) {
  const int r = n % 64;
  return r == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << r) - 1;
}

// Parities of x over the T shared subsets, one bit per round.
template <typename Fn>
void kor_parities(const KorParams& k, const std::vector<std::uint64_t>& xw, const RandomView& v, std::uint64_t stream,
                  Fn&& fn) {
  const StreamView s = v.stream(stream);
  const std::uint64_t blocks = xw.size();
  const std::uint64_t last = tail_mask(k.n);
  const bool uniform = k.p >= 0.5;
  const BernoulliMask bern(uniform ? 0.5 : k.p);
  for (int t = 0; t < k.T; ++t) {
    int parity = 0;
    for (std::uint64_t w = 0; w < blocks; ++w) {
      const std::uint64_t state = s.word(static_cast<std::uint64_t>(t) * blocks + w);
      std::uint64_t mask = uniform ? state : bern.draw(state);
      if (w + 1 == blocks) mask &= last;
      parity ^= std::popcount(mask & xw[w]) & 1;
    }
    fn(parity);
  }
}

}  // namespace

double kor_q(double p, int d) { return (1.0 - std::pow(1.0 - 2.0 * p, d)) / 2.0; }

KorParams kor_params(int n, int c, int g, double kappa, bool flipped) {
  KorParams k;
  k.n = n;
  k.g = g;
  k.flipped = flipped;
  k.c = flipped ? n - c : c;
  if (g < 1 || k.c < g || k.c + g > n) throw ValidationError("kor: need g >= 1 and g <= c <= n - g");
  k.p = std::min(1.0 / (2.0 * k.c), 0.5);
  k.T = static_cast<int>(std::ceil(kappa * std::pow(static_cast<double>(k.c) / g, 2)));
  k.threshold = (kor_q(k.p, k.c - g) + kor_q(k.p, k.c + g)) / 2.0;
  return k;
}

void kor_write(const KorParams& k, const Bits& x, const RandomView& v, std::uint64_t stream, BitString& out) {
  const auto xw = pack(k.flipped ? complement(x) : x);
  kor_parities(k, xw, v, stream, [&](int parity) { out.push_bit(parity != 0); });
}

bool kor_read(const KorParams& k, const Bits& y, const RandomView& v, std::uint64_t stream, BitReader& in) {
  const auto yw = pack(y);
  int differ = 0;
  kor_parities(k, yw, v, stream, [&](int parity) { differ += (parity != 0) != in.read_bit(); });
  const bool above = static_cast<double>(differ) / k.T >= k.threshold;
  return k.flipped ? !above : above;
}

Protocol kor_hd(int n, int c, int g, double kappa, bool flipped) {
  const KorParams k = kor_params(n, c, g, kappa, flipped);
  constexpr std::uint64_t stream = 0x6b6f72;
  return one_way_protocol(
      "kor_hd",
      [k](const Bits& x, const RandomView& v) {
        BitString m;
        kor_write(k, x, v, stream, m);
        return m;
      },
      [k](const Bits& y, const RandomView& v, const BitString& m) -> std::int64_t {
        BitReader in(m);
        return kor_read(k, y, v, stream, in) ? 1 : 0;
      },
      [k](int, int) -> std::int64_t { return k.T; });
}

GhdParams ghd_params(int n, int a, int b, int c, int g, double kappa) {
  if (a < 1 || g < 1) throw ValidationError("ghd_bucketed: need a >= 1 and g >= 1");
  GhdParams p;
  p.n = n;
  p.a = a;
  p.b = b;
  p.c = c;
  p.g = g;
  p.alpha = static_cast<double>(c - b + g) / a;
  p.beta = static_cast<double>(c - b - g) / a;
  if (p.alpha > 1.0 + 1e-12 || p.beta < -1.0 - 1e-12)
    throw ValidationError("ghd_bucketed: alpha, beta must lie in [-1, 1]");
  const double ratio = static_cast<double>(a) / g;
  p.B = static_cast<std::int64_t>(std::ceil(100.0 * (a + b) * ratio * ratio));
  p.ell = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(2.0 * p.B / a * std::log(20.0 * ratio))));
  p.T = static_cast<int>(std::ceil(kappa * ratio * ratio));
  p.index_bits = ceil_log2(static_cast<std::uint64_t>(p.ell) + 1);
  return p;
}

std::uint64_t TauRound::bucket(int coord) const {
  const unsigned __int128 prod = static_cast<unsigned __int128>(hash.word(base + static_cast<std::uint64_t>(coord))) *
                                 static_cast<std::uint64_t>(params->B);
  return static_cast<std::uint64_t>(prod >> 64);
}

namespace {

std::int64_t tau_index_support(const TauRound& r, const std::vector<int>& supp) {
  if (supp.empty()) return 0;
  std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
  for (int i : supp) best = std::min(best, r.bucket(i));
  const auto j = static_cast<std::int64_t>(best) + 1;
  return j > r.params->ell ? 0 : j;
}

int tau_output_support(const TauRound& r, const std::vector<int>& supp, std::int64_t j) {
  if (j == 0) return 1;
  const auto target = static_cast<std::uint64_t>(j - 1);
  int ones = 0;
  for (int i : supp) ones += r.bucket(i) == target;
  return (ones & 1) ? -1 : 1;
}

}  // namespace

std::int64_t tau_index(const TauRound& r, const Bits& x) { return tau_index_support(r, support(x)); }

int tau_output(const TauRound& r, const Bits& y, std::int64_t j) { return tau_output_support(r, support(y), j); }

void ghd_write(const GhdParams& p, const Bits& x, const RandomView& v, std::uint64_t stream, BitString& out) {
  const StreamView s = v.stream(stream);
  const auto supp = support(x);
  for (int t = 0; t < p.T; ++t) {
    const TauRound r(p, s, static_cast<std::uint64_t>(t));
    out.push_uint(static_cast<std::uint64_t>(tau_index_support(r, supp)), p.index_bits);
  }
}

bool ghd_read(const GhdParams& p, const Bits& y, const RandomView& v, std::uint64_t stream, BitReader& in) {
  const StreamView s = v.stream(stream);
  const auto supp = support(y);
  int plus = 0;
  for (int t = 0; t < p.T; ++t) {
    const TauRound r(p, s, static_cast<std::uint64_t>(t));
    const auto j = static_cast<std::int64_t>(in.read_uint(p.index_bits));
    if (tau_output_support(r, supp, j) > 0) ++plus;
  }
  return plus >= ghd_threshold(p) * p.T;
}

double ghd_threshold(const GhdParams& p) { return (2.0 + p.alpha + p.beta) / 4.0; }

Protocol ghd_bucketed(const GhdParams& p) {
  if (!(p.a <= p.b && 2 * p.b <= p.n)) throw ValidationError("ghd_bucketed: need a <= b <= n/2");
  constexpr std::uint64_t stream = 0x676864;
  return one_way_protocol(
      "ghd_bucketed",
      [p](const Bits& x, const RandomView& v) {
        BitString m;
        ghd_write(p, x, v, stream, m);
        return m;
      },
      [p](const Bits& y, const RandomView& v, const BitString& m) -> std::int64_t {
        BitReader in(m);
        return ghd_read(p, y, v, stream, in) ? 1 : 0;
      },
      [p](int, int) -> std::int64_t { return static_cast<std::int64_t>(p.T) * p.index_bits; });
}

ResolvePlan resolve_plan(int n, int a, int b, int c, int g, double delta, const PsrConfig& cfg) {
  ResolvePlan p;
  p.original = Target{n, a, b, c, g};
  p.norm = normalize_target(p.original, true);
  p.normalized = apply_normalization(p.original, p.norm);
  const Target& t = p.normalized;
  p.use_kor = std::min(t.c, n - t.c) <= t.a;
  if (p.use_kor) {
    p.kor = kor_params(n, t.c, g, cfg.kappa_kor, n - t.c < t.c);
    p.atomic_bits = p.kor.T;
  } else {
    p.ghd = ghd_params(n, t.a, t.b, t.c, g, cfg.kappa_bucketed);
    p.atomic_bits = static_cast<std::int64_t>(p.ghd.T) * p.ghd.index_bits;
  }
  p.reps = majority_reps(delta, cfg.amp);
  p.budget = p.reps * p.atomic_bits + 1;
  return p;
}

namespace {

Bits oriented(const ResolvePlan& p, const Bits& own, bool own_is_x) {
  const bool flip = own_is_x ? p.norm.flip_x : p.norm.flip_y;
  return flip ? complement(own) : own;
}

std::uint64_t rep_stream(std::uint64_t stream, int r) { return stream_id({stream, static_cast<std::uint64_t>(r)}); }

}  // namespace

void resolve_write(const ResolvePlan& p, const Bits& own, bool own_is_x, const RandomView& v, std::uint64_t stream,
                   BitString& out) {
  const Bits x = oriented(p, own, own_is_x);
  for (int r = 0; r < p.reps; ++r) {
    if (p.use_kor)
      kor_write(p.kor, x, v, rep_stream(stream, r), out);
    else
      ghd_write(p.ghd, x, v, rep_stream(stream, r), out);
  }
}

bool resolve_read(const ResolvePlan& p, const Bits& own, bool own_is_x, const RandomView& v, std::uint64_t stream,
                  BitReader& in) {
  const Bits y = oriented(p, own, own_is_x);
  int above = 0;
  for (int r = 0; r < p.reps; ++r) {
    const bool s = p.use_kor ? kor_read(p.kor, y, v, rep_stream(stream, r), in)
                             : ghd_read(p.ghd, y, v, rep_stream(stream, r), in);
    above += s;
  }
  const bool maj = 2 * above > p.reps;
  return p.norm.odd_flips() ? !maj : maj;
}

namespace {

constexpr std::uint64_t kResolveStream = 0x7265736f;

PartyTask resolve_alice(Bits x, RandomView v, ResolvePlan plan) {
  if (!plan.norm.swap) {
    BitString m;
    resolve_write(plan, x, true, v, kResolveStream, m);
    co_await send(std::move(m));
    co_await receive();
  } else {
    BitString m = co_await receive();
    BitReader in(m);
    BitString out;
    out.push_bit(resolve_read(plan, x, true, v, kResolveStream, in));
    co_await send(std::move(out));
  }
  co_return std::nullopt;
}

PartyTask resolve_bob(Bits y, RandomView v, ResolvePlan plan) {
  bool above = false;
  if (!plan.norm.swap) {
    BitString m = co_await receive();
    BitReader in(m);
    above = resolve_read(plan, y, false, v, kResolveStream, in);
    BitString out;
    out.push_bit(above);
    co_await send(std::move(out));
  } else {
    BitString m;
    resolve_write(plan, y, false, v, kResolveStream, m);
    co_await send(std::move(m));
    above = (co_await receive()).bit(0);
  }
  co_return above ? 1 : 0;
}

}  // namespace

Protocol resolve_jump(int n, int a, int b, int c, int g, double delta, const PsrConfig& cfg) {
  const ResolvePlan plan = resolve_plan(n, a, b, c, g, delta, cfg);
  Protocol p;
  p.name = "resolve_jump";
  p.alice = [plan](Bits x, RandomView v) { return resolve_alice(std::move(x), std::move(v), plan); };
  p.bob = [plan](Bits y, RandomView v) { return resolve_bob(std::move(y), std::move(v), plan); };
  p.budget = [plan](int, int) { return plan.budget; };
  return p;
}

double full_psr_delta(std::size_t jump_count) {
  return 1.0 / (6.0 * (1.0 + ceil_log2(static_cast<std::uint64_t>(jump_count) + 1)));
}

std::int64_t full_psr_budget(const FunctionSpec& f, int a, int b, const PsrConfig& cfg) {
  const int n = f.n();
  const std::int64_t exchange = 2 * ceil_log2(static_cast<std::uint64_t>(n) + 1);
  const auto js = jumps(f.slice(a, b));
  if (js.empty()) return exchange;
  const double delta = full_psr_delta(js.size());
  std::int64_t worst = 0;
  for (const auto& j : js) worst = std::max(worst, resolve_plan(n, a, b, j.c, j.g, delta, cfg).budget);
  return exchange + (1 + ceil_log2(js.size() + 1)) * worst;
}

Ternary plateau_value(const SliceView& s, const std::vector<Jump>& js, std::size_t i) {
  if (js.empty()) {
    for (auto v : s.values)
      if (v != Ternary::Undefined) return v;
    return Ternary::Undefined;
  }
  return i == 0 ? s.at(js[0].c - js[0].g) : s.at(js[i - 1].c + js[i - 1].g);
}

namespace {

// Both parties run the same binary search over plateau indices [lo, hi].
PartyTask full_psr_party(Bits own, RandomView v, std::shared_ptr<const FunctionSpec> f, PsrConfig cfg, bool is_alice) {
  const int n = f->n();
  const int wbits = ceil_log2(static_cast<std::uint64_t>(n) + 1);
  const int mine = weight(own);
  int a = 0, b = 0;
  if (is_alice) {
    BitString m;
    m.push_uint(static_cast<std::uint64_t>(mine), wbits);
    co_await send(std::move(m));
    a = mine;
    b = static_cast<int>((co_await receive()).read_uint(0, wbits));
  } else {
    a = static_cast<int>((co_await receive()).read_uint(0, wbits));
    b = mine;
    BitString m;
    m.push_uint(static_cast<std::uint64_t>(mine), wbits);
    co_await send(std::move(m));
  }
  const SliceView slice = f->slice(a, b);
  const auto js = jumps(slice);
  std::size_t lo = 0, hi = js.size();
  const double delta = full_psr_delta(js.size());
  std::uint64_t step = 0;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const ResolvePlan plan = resolve_plan(n, a, b, js[mid].c, js[mid].g, delta, cfg);
    const std::uint64_t stream = stream_id({kResolveStream, step++});
    const bool sender = is_alice != plan.norm.swap;
    bool above = false;
    if (sender) {
      BitString m;
      resolve_write(plan, own, is_alice, v, stream, m);
      co_await send(std::move(m));
      above = (co_await receive()).bit(0);
    } else {
      BitString m = co_await receive();
      BitReader in(m);
      above = resolve_read(plan, own, is_alice, v, stream, in);
      BitString out;
      out.push_bit(above);
      co_await send(std::move(out));
    }
    if (above)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (is_alice) co_return std::nullopt;
  co_return plateau_value(slice, js, lo) == Ternary::One ? 1 : 0;
}

}  // namespace

Protocol full_two_way_psr(std::shared_ptr<const FunctionSpec> f, const PsrConfig& cfg) {
  Protocol p;
  p.name = "full2way";
  p.alice = [f, cfg](Bits x, RandomView v) { return full_psr_party(std::move(x), std::move(v), f, cfg, true); };
  p.bob = [f, cfg](Bits y, RandomView v) { return full_psr_party(std::move(y), std::move(v), f, cfg, false); };
  p.budget = [f, cfg](int a, int b) { return full_psr_budget(*f, a, b, cfg); };
  return p;
}

}  // namespace permcc
