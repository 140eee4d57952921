#include "permcc/measure.hpp"

#include <algorithm>
#include <cmath>

#include "permcc/errors.hpp"

namespace permcc {

std::string mode_name(MeasureMode m) { return m == MeasureMode::TwoWay ? "two_way" : "one_way"; }

MeasureMode parse_mode(const std::string& s) {
  if (s == "two_way") return MeasureMode::TwoWay;
  if (s == "one_way") return MeasureMode::OneWay;
  throw ValidationError("mode must be two_way or one_way, got '" + s + "'");
}

std::vector<Jump> jumps(const SliceView& s) {
  std::vector<Jump> out;
  int last_d = -1;
  Ternary last_v = Ternary::Undefined;
  for (std::size_t r = 0; r < s.size(); ++r) {
    const Ternary v = s.values[r];
    if (v == Ternary::Undefined) continue;
    const int d = s.distance(r);
    if (last_d >= 0 && v != last_v) out.push_back({(last_d + d) / 2, (d - last_d) / 2});
    last_d = d;
    last_v = v;
  }
  return out;
}

JumpTerm jump_term(int n, int a, int b, const Jump& j, MeasureMode mode) {
  JumpTerm t;
  t.g = j.g;
  int num = std::min({a, j.c, n - a, n - j.c});
  if (mode == MeasureMode::TwoWay) num = std::min({num, b, n - b});
  t.linear_num = num;
  t.linear = static_cast<double>(num) / j.g;
  // min{c, n-c} >= g for every jump, so this is never negative.
  t.log = std::log2(static_cast<double>(std::min(j.c, n - j.c)) / j.g);
  if (t.log > t.linear) {
    t.value = t.log;
    t.kind = TermKind::Log;
  } else {
    t.value = t.linear;
    t.kind = TermKind::Linear;
  }
  return t;
}

MeasureReport measure(const FunctionSpec& f, MeasureMode mode) {
  MeasureReport r;
  r.mode = mode;
  const int n = f.n();
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b) {
      auto js = jumps(f.slice(a, b));
      if (js.empty()) continue;
      for (const auto& j : js) {
        const JumpTerm t = jump_term(n, a, b, j, mode);
        if (!r.argmax || t.value > r.raw_value) {
          r.raw_value = t.value;
          r.argmax = Argmax{a, b, j.c, j.g, t.kind};
        }
      }
      r.per_slice_jumps.emplace(std::make_pair(a, b), std::move(js));
    }
  return r;
}

int scaled_k(const MeasureReport& r, double C) {
  if (!(C > 0.0)) throw ValidationError("C must be positive");
  // Guard against 3.0000000001 style rounding on exact quotients.
  return static_cast<int>(std::ceil(r.raw_value / C - 1e-9));
}

ReductionCertificate certificate(const FunctionSpec& f, const MeasureReport& r) {
  if (!r.argmax) throw InfeasibleError("certificate: function has no jumps");
  const Argmax& m = *r.argmax;
  const Target target{f.n(), m.a, m.b, m.c, m.g};

  std::vector<std::pair<SourceFamily, SiMode>> order;
  if (r.mode == MeasureMode::TwoWay)
    order = {{SourceFamily::SetInc, SiMode::Ic}, {SourceFamily::UDISJ, SiMode::Ic},
             {SourceFamily::SparseIndexing, SiMode::Ic}};
  else
    order = {{SourceFamily::SparseIndexing, SiMode::OneWay}, {SourceFamily::SparseIndexing, SiMode::Ic}};

  std::optional<ReductionCertificate> best;
  for (const auto& [fam, si] : order) {
    try {
      const ReductionInstanceMap map = reduce(target, fam, si);
      if (!best || map.claimed_bound() > best->claimed_bound)
        best = ReductionCertificate{fam, si, map.t(), map.w(), target, map.claimed_bound()};
    } catch (const InfeasibleError&) {
    }
  }
  if (!best) throw InfeasibleError("certificate: no reduction family is feasible for " + target_to_string(target));
  return *best;
}

}  // namespace permcc
