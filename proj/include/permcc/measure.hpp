#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "permcc/funcspec.hpp"
#include "permcc/reductions.hpp"

namespace permcc {

enum class MeasureMode { TwoWay, OneWay };

std::string mode_name(MeasureMode m);
MeasureMode parse_mode(const std::string& s);

//! h(c-g) != h(c+g), both defined, h undefined strictly between.
struct Jump {
  int c = 0;
  int g = 1;

  bool operator==(const Jump&) const = default;
  auto operator<=>(const Jump&) const = default;
};

enum class TermKind { Linear, Log };

struct JumpTerm {
  int linear_num = 0;  // linear term is linear_num / g
  int g = 1;
  double linear = 0.0;
  double log = 0.0;  // log2(min{c, n-c} / g)
  double value = 0.0;
  TermKind kind = TermKind::Linear;  // Linear on ties
};

//! Two-way numerator min{a,b,c,n-a,n-b,n-c}; one-way drops b and n-b.
JumpTerm jump_term(int n, int a, int b, const Jump& j, MeasureMode mode);

struct Argmax {
  int a = 0;
  int b = 0;
  int c = 0;
  int g = 1;
  TermKind kind = TermKind::Linear;
};

struct MeasureReport {
  MeasureMode mode = MeasureMode::TwoWay;
  double raw_value = 0.0;
  std::optional<Argmax> argmax;  // lexicographically smallest (a,b,c,g) among maximisers
  std::map<std::pair<int, int>, std::vector<Jump>> per_slice_jumps;  // only slices with jumps
};

//! Consecutive defined entries with different values, ascending in c.
std::vector<Jump> jumps(const SliceView& s);

MeasureReport measure(const FunctionSpec& f, MeasureMode mode);

//! ceil(raw_value / C); 0 when raw_value is 0.
int scaled_k(const MeasureReport& r, double C);

struct ReductionCertificate {
  SourceFamily family = SourceFamily::UDISJ;
  SiMode si_mode = SiMode::Ic;
  int t = 0;
  int w = 0;  // SetInc only
  Target target;
  int claimed_bound = 0;
};

//! Best reduction for the report's argmax. Two-way ties resolve SetInc, then
//! UDISJ, then SI; one-way considers SI in one-way mode, then in ic mode.
//! Throws InfeasibleError when no family fits.
ReductionCertificate certificate(const FunctionSpec& f, const MeasureReport& r);

}  // namespace permcc
