#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "permcc/bits.hpp"
#include "permcc/funcspec.hpp"

namespace permcc {

//! An eGHD^n_{a,b,c,g} instance.
struct Target {
  int n = 0;
  int a = 0;
  int b = 0;
  int c = 0;
  int g = 1;

  bool operator==(const Target&) const = default;
};

std::string target_to_string(const Target& t);
//! Parses "n,a,b,c,g".
Target parse_target(const std::string& text);

//! Complement x, complement y, then exchange roles (in that order).
struct Normalization {
  bool flip_x = false;
  bool flip_y = false;
  bool swap = false;

  bool odd_flips() const { return flip_x != flip_y; }
};

//! Flip weights above n/2 and, when allow_swap, order so that a <= b.
Normalization normalize_target(const Target& t, bool allow_swap);
Target apply_normalization(const Target& t, const Normalization& nz);

//! A ones appended to x, B to y, raising the distance by exactly C.
//! Layout: s shared ones, then A-s Alice-only ones, then B-s Bob-only ones.
struct PaddingPlan {
  int A = 0;
  int B = 0;
  int C = 0;
  int shared = 0;
  int coords = 0;
};

PaddingPlan padding_plan(int A, int B, int C);

//! Each coordinate repeated g times, then the plan's coordinates appended.
InputPair repeat_and_pad(const Bits& x, const Bits& y, int g, const PaddingPlan& plan);

enum class SourceFamily { UDISJ, SetInc, SparseIndexing };
enum class SiMode { Ic, OneWay };

std::string family_name(SourceFamily f);
SourceFamily parse_family(const std::string& s);

struct SourceInstance {
  Bits x;
  Bits y;
  bool one = false;  // source label
};

//! Executable map from a source problem to a target eGHD instance. Source
//! label One lands on the normalized distance c-g.
class ReductionInstanceMap {
 public:
  SourceFamily family() const { return family_; }
  SiMode si_mode() const { return si_mode_; }
  const Target& target() const { return target_; }
  const Target& normalized() const { return normalized_; }
  const Normalization& normalization() const { return norm_; }
  const PaddingPlan& plan() const { return plan_; }
  int t() const { return t_; }
  int w() const { return w_; }
  int source_n() const { return source_n_; }
  //! min{t, w} for SetInc, t otherwise.
  int claimed_bound() const;

  InputPair map(const Bits& xs, const Bits& ys) const;
  //! eGHD value expected on the image of a source instance with this label.
  Ternary expected(bool source_one) const;
  std::vector<SourceInstance> enumerate_sources() const;
  std::string summary() const;

 private:
  friend ReductionInstanceMap reduce_from_udisj(const Target&);
  friend ReductionInstanceMap reduce_from_setinc(const Target&);
  friend ReductionInstanceMap reduce_from_sparse_indexing(const Target&, SiMode);

  SourceFamily family_ = SourceFamily::UDISJ;
  SiMode si_mode_ = SiMode::Ic;
  Target target_;
  Target normalized_;
  Normalization norm_;
  PaddingPlan plan_;
  int t_ = 0;
  int w_ = 0;
  int source_n_ = 0;
};

//! Source UDISJ^{3t}_t, t = min{(c-b+a+g)/2g, (n-c-g)/2g} floored.
ReductionInstanceMap reduce_from_udisj(const Target& target);
//! Source SetInc^{2t+w}_{t,t+w}, t = (a+b-c+g)/2g, w = (c+b-a-g)/2g floored.
ReductionInstanceMap reduce_from_setinc(const Target& target);
//! Ic: unique disjointness on t+1 bits through the Hadamard code (largest feasible t).
//! OneWay: SI^{2t}_t padded directly, without a role swap.
ReductionInstanceMap reduce_from_sparse_indexing(const Target& target, SiMode mode);

ReductionInstanceMap reduce(const Target& target, SourceFamily family, SiMode mode = SiMode::Ic);

struct ContractReport {
  std::size_t checked = 0;
  std::size_t weight_violations = 0;
  std::size_t distance_violations = 0;
  std::size_t label_violations = 0;
  std::size_t length_violations = 0;

  bool ok() const {
    return checked > 0 && weight_violations + distance_violations + label_violations + length_violations == 0;
  }
};

//! Maps every source instance and checks weights, distance and eGHD label.
ContractReport check_contract(const ReductionInstanceMap& m);

}  // namespace permcc
