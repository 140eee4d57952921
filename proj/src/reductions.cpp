#include "permcc/reductions.hpp"

#include <bit>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "permcc/errors.hpp"

namespace permcc {

std::string target_to_string(const Target& t) {
  std::ostringstream os;
  os << t.n << ',' << t.a << ',' << t.b << ',' << t.c << ',' << t.g;
  return os.str();
}

Target parse_target(const std::string& text) {
  std::vector<int> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("target: '" + item + "' is not an integer");
    }
  }
  if (v.size() != 5) throw ValidationError("target must be n,a,b,c,g");
  return {v[0], v[1], v[2], v[3], v[4]};
}

Normalization normalize_target(const Target& t, bool allow_swap) {
  Normalization nz;
  nz.flip_x = 2 * t.a > t.n;
  nz.flip_y = 2 * t.b > t.n;
  const int a = nz.flip_x ? t.n - t.a : t.a;
  const int b = nz.flip_y ? t.n - t.b : t.b;
  nz.swap = allow_swap && a > b;
  return nz;
}

Target apply_normalization(const Target& t, const Normalization& nz) {
  Target r = t;
  if (nz.flip_x) r.a = t.n - t.a;
  if (nz.flip_y) r.b = t.n - t.b;
  if (nz.odd_flips()) r.c = t.n - t.c;
  if (nz.swap) std::swap(r.a, r.b);
  return r;
}

PaddingPlan padding_plan(int A, int B, int C) {
  if (A < 0 || B < 0) throw InfeasibleError("padding: negative number of ones");
  if (C < std::abs(A - B) || C > A + B) throw InfeasibleError("padding: distance increase out of range");
  if ((A + B + C) % 2 != 0) throw InfeasibleError("padding: parity of A+B+C is odd");
  PaddingPlan p{A, B, C, (A + B - C) / 2, (A + B + C) / 2};
  return p;
}

InputPair repeat_and_pad(const Bits& x, const Bits& y, int g, const PaddingPlan& plan) {
  if (x.size() != y.size()) throw ValidationError("repeat_and_pad: length mismatch");
  if (g < 1) throw ValidationError("repeat_and_pad: g must be >= 1");
  InputPair out;
  out.x.reserve(x.size() * g + plan.coords);
  out.y.reserve(y.size() * g + plan.coords);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (int r = 0; r < g; ++r) {
      out.x.push_back(x[i]);
      out.y.push_back(y[i]);
    }
  for (int i = 0; i < plan.shared; ++i) {
    out.x.push_back(1);
    out.y.push_back(1);
  }
  for (int i = 0; i < plan.A - plan.shared; ++i) {
    out.x.push_back(1);
    out.y.push_back(0);
  }
  for (int i = 0; i < plan.B - plan.shared; ++i) {
    out.x.push_back(0);
    out.y.push_back(1);
  }
  return out;
}

std::string family_name(SourceFamily f) {
  switch (f) {
    case SourceFamily::UDISJ:
      return "udisj";
    case SourceFamily::SetInc:
      return "setinc";
    default:
      return "si";
  }
}

SourceFamily parse_family(const std::string& s) {
  if (s == "udisj") return SourceFamily::UDISJ;
  if (s == "setinc") return SourceFamily::SetInc;
  if (s == "si") return SourceFamily::SparseIndexing;
  throw ValidationError("unknown reduction family '" + s + "'");
}

namespace {

void validate_target(const Target& t) {
  if (t.n < 1 || t.g < 1) throw ValidationError("target: need n >= 1 and g >= 1");
  if (t.a < 0 || t.b < 0 || t.a > t.n || t.b > t.n) throw ValidationError("target: weights out of range");
  if (!is_valid_distance(t.n, t.a, t.b, t.c - t.g) || !is_valid_distance(t.n, t.a, t.b, t.c + t.g))
    throw ValidationError("target: c-g and c+g must be valid distances for (a, b)");
}

// Source weights (sa, sb) with label One at source distance d_one; the padding
// lands d_one*g on c-g.
PaddingPlan plan_for(const Target& nt, int source_n, int sa, int sb, int d_one) {
  const int g = nt.g;
  PaddingPlan p = padding_plan(nt.a - g * sa, nt.b - g * sb, nt.c - g - g * d_one);
  if (static_cast<long long>(g) * source_n + p.coords > nt.n)
    throw InfeasibleError("reduction needs more than n coordinates");
  return p;
}

Bits mask_bits(std::uint64_t m, int len) {
  Bits b(static_cast<std::size_t>(len), 0);
  for (int i = 0; i < len; ++i) b[i] = (m >> i) & 1u;
  return b;
}

// Every len-bit mask of the given weight, in increasing order.
void for_each_subset(int len, int k, const std::function<void(std::uint64_t)>& fn) {
  if (k < 0 || k > len) return;
  if (k == 0) {
    fn(0);
    return;
  }
  std::uint64_t m = (std::uint64_t{1} << k) - 1;
  const std::uint64_t limit = len == 64 ? 0 : (std::uint64_t{1} << len);
  while (limit == 0 || m < limit) {
    fn(m);
    const std::uint64_t c = m & (~m + 1);
    const std::uint64_t r = m + c;
    if (r == 0) break;
    m = (((r ^ m) >> 2) / c) | r;
  }
}

}  // namespace

int ReductionInstanceMap::claimed_bound() const {
  return family_ == SourceFamily::SetInc ? std::min(t_, w_) : t_;
}

InputPair ReductionInstanceMap::map(const Bits& xs, const Bits& ys) const {
  InputPair np;
  if (family_ == SourceFamily::SparseIndexing && si_mode_ == SiMode::Ic) {
    // Alice: indicator of y; Bob: Hadamard code of x.
    const int len = 1 << (t_ + 1);
    std::uint64_t xv = 0, yv = 0;
    for (int i = 0; i <= t_; ++i) {
      xv |= static_cast<std::uint64_t>(xs[i] & 1u) << i;
      yv |= static_cast<std::uint64_t>(ys[i] & 1u) << i;
    }
    Bits ind(static_cast<std::size_t>(len), 0), had(static_cast<std::size_t>(len), 0);
    ind[yv] = 1;
    for (int alpha = 0; alpha < len; ++alpha) had[alpha] = std::popcount(xv & static_cast<std::uint64_t>(alpha)) & 1;
    np = repeat_and_pad(ind, had, normalized_.g, plan_);
  } else {
    np = repeat_and_pad(xs, ys, normalized_.g, plan_);
  }
  np.x.resize(static_cast<std::size_t>(target_.n), 0);
  np.y.resize(static_cast<std::size_t>(target_.n), 0);
  InputPair out = norm_.swap ? InputPair{np.y, np.x} : np;
  if (norm_.flip_x) out.x = complement(out.x);
  if (norm_.flip_y) out.y = complement(out.y);
  return out;
}

Ternary ReductionInstanceMap::expected(bool source_one) const {
  // One lands on normalized c-g, which is the original c+g after one flip.
  return ternary_of(source_one == norm_.odd_flips());
}

std::vector<SourceInstance> ReductionInstanceMap::enumerate_sources() const {
  std::vector<SourceInstance> out;
  const int sn = source_n_;
  auto add = [&](std::uint64_t x, std::uint64_t y, bool one) {
    out.push_back({mask_bits(x, sn), mask_bits(y, sn), one});
  };
  switch (family_) {
    case SourceFamily::UDISJ:
      for_each_subset(sn, t_, [&](std::uint64_t x) {
        for_each_subset(sn, t_, [&](std::uint64_t y) {
          const int i = std::popcount(x & y);
          if (i <= 1) add(x, y, i == 1);
        });
      });
      break;
    case SourceFamily::SetInc:
      for_each_subset(sn, t_, [&](std::uint64_t x) {
        for_each_subset(sn, t_ + w_, [&](std::uint64_t y) {
          const int i = std::popcount(x & y);
          if (i >= t_ - 1) add(x, y, i == t_);
        });
      });
      break;
    case SourceFamily::SparseIndexing:
      if (si_mode_ == SiMode::OneWay) {
        for_each_subset(sn, t_, [&](std::uint64_t x) {
          for (int j = 0; j < sn; ++j) add(x, std::uint64_t{1} << j, (x >> j) & 1u);
        });
      } else {
        const int len = t_ + 1;
        for (std::uint64_t x = 1; x < (std::uint64_t{1} << len); ++x)
          for (std::uint64_t y = 0; y < (std::uint64_t{1} << len); ++y) {
            const int i = std::popcount(x & y);
            if (i <= 1) out.push_back({mask_bits(x, len), mask_bits(y, len), i == 1});
          }
      }
      break;
  }
  return out;
}

std::string ReductionInstanceMap::summary() const {
  std::ostringstream os;
  os << "family=" << family_name(family_);
  if (family_ == SourceFamily::SparseIndexing) os << (si_mode_ == SiMode::Ic ? " mode=ic" : " mode=one_way");
  os << " t=" << t_;
  if (family_ == SourceFamily::SetInc) os << " w=" << w_;
  os << " source_n=" << source_n_ << " target=" << target_to_string(target_)
     << " normalized=" << target_to_string(normalized_) << " flips=" << norm_.flip_x << norm_.flip_y
     << " swap=" << norm_.swap << " pad=(" << plan_.A << ',' << plan_.B << ',' << plan_.C << ')'
     << " bound=" << claimed_bound();
  return os.str();
}

ReductionInstanceMap reduce_from_udisj(const Target& target) {
  validate_target(target);
  ReductionInstanceMap m;
  m.family_ = SourceFamily::UDISJ;
  m.target_ = target;
  m.norm_ = normalize_target(target, true);
  m.normalized_ = apply_normalization(target, m.norm_);
  const Target& t = m.normalized_;
  m.t_ = std::min((t.c - t.b + t.a + t.g) / (2 * t.g), (t.n - t.c - t.g) / (2 * t.g));
  if (m.t_ < 1) throw InfeasibleError("udisj: t < 1");
  m.source_n_ = 3 * m.t_;
  m.plan_ = plan_for(t, m.source_n_, m.t_, m.t_, 2 * m.t_ - 2);
  return m;
}

ReductionInstanceMap reduce_from_setinc(const Target& target) {
  validate_target(target);
  ReductionInstanceMap m;
  m.family_ = SourceFamily::SetInc;
  m.target_ = target;
  m.norm_ = normalize_target(target, true);
  m.normalized_ = apply_normalization(target, m.norm_);
  const Target& t = m.normalized_;
  m.t_ = (t.a + t.b - t.c + t.g) / (2 * t.g);
  m.w_ = (t.c + t.b - t.a - t.g) / (2 * t.g);
  if (m.t_ < 1 || m.w_ < 1) throw InfeasibleError("setinc: t or w < 1");
  m.source_n_ = 2 * m.t_ + m.w_;
  m.plan_ = plan_for(t, m.source_n_, m.t_, m.t_ + m.w_, m.w_);
  return m;
}

ReductionInstanceMap reduce_from_sparse_indexing(const Target& target, SiMode mode) {
  validate_target(target);
  ReductionInstanceMap m;
  m.family_ = SourceFamily::SparseIndexing;
  m.si_mode_ = mode;
  m.target_ = target;
  m.norm_ = normalize_target(target, mode == SiMode::Ic);
  m.normalized_ = apply_normalization(target, m.norm_);
  const Target& t = m.normalized_;
  if (mode == SiMode::OneWay) {
    m.t_ = std::min((t.c - t.b + t.a + t.g) / (2 * t.g), (t.n - t.c - t.g) / (2 * t.g));
    if (m.t_ < 1) throw InfeasibleError("si one_way: t < 1");
    m.source_n_ = 2 * m.t_;
    m.plan_ = plan_for(t, m.source_n_, m.t_, 1, m.t_ - 1);
    return m;
  }
  // Largest t whose Hadamard instance fits; the constraints only tighten as t grows.
  for (int tt = 1; tt <= 24; ++tt) {
    const int len = 1 << (tt + 1);
    try {
      PaddingPlan p = plan_for(t, len, 1, 1 << tt, (1 << tt) - 1);
      m.t_ = tt;
      m.source_n_ = len;
      m.plan_ = p;
    } catch (const InfeasibleError&) {
      break;
    }
  }
  if (m.t_ < 1) throw InfeasibleError("si ic: no feasible t >= 1");
  return m;
}

ReductionInstanceMap reduce(const Target& target, SourceFamily family, SiMode mode) {
  switch (family) {
    case SourceFamily::UDISJ:
      return reduce_from_udisj(target);
    case SourceFamily::SetInc:
      return reduce_from_setinc(target);
    default:
      return reduce_from_sparse_indexing(target, mode);
  }
}

ContractReport check_contract(const ReductionInstanceMap& m) {
  const Target& t = m.target();
  const FunctionSpec spec = make_eghd(t.n, t.a, t.b, t.c, t.g);
  ContractReport r;
  for (const auto& src : m.enumerate_sources()) {
    ++r.checked;
    const InputPair p = m.map(src.x, src.y);
    if (static_cast<int>(p.x.size()) != t.n || static_cast<int>(p.y.size()) != t.n) {
      ++r.length_violations;
      continue;
    }
    if (weight(p.x) != t.a || weight(p.y) != t.b) ++r.weight_violations;
    const int d = hamming(p.x, p.y);
    if (d != t.c - t.g && d != t.c + t.g) ++r.distance_violations;
    if (spec.eval(p) != m.expected(src.one)) ++r.label_violations;
  }
  return r;
}

}  // namespace permcc
