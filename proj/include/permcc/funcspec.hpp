#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "permcc/bits.hpp"

namespace permcc {

enum class Ternary : std::uint8_t { Zero = 0, One = 1, Undefined = 2 };

inline Ternary ternary_of(bool b) { return b ? Ternary::One : Ternary::Zero; }
char ternary_char(Ternary t);

struct InputPair {
  Bits x;
  Bits y;
};

//! All Hamming distances realisable by |x|=a, |y|=b in {0,1}^n, ascending.
std::vector<int> valid_distances(int n, int a, int b);
bool is_valid_distance(int n, int a, int b, int d);

//! Gate-and-threshold description of a strongly permutation-invariant function:
//! f(x,y) = sigma[ #{i : gate(x_i, y_i) = 1} ].
struct StronglyPiDescriptor {
  std::array<std::uint8_t, 4> gate{};  // indexed by (u << 1) | v
  std::vector<std::uint8_t> sigma;     // length n + 1

  int gate_at(int u, int v) const { return gate[(u << 1) | v]; }
};

//! Read-only view of h(a, b, .) restricted to its valid distances.
struct SliceView {
  int n = 0;
  int a = 0;
  int b = 0;
  int d_min = 0;
  std::span<const Ternary> values;

  std::size_t size() const { return values.size(); }
  int distance(std::size_t rank) const { return d_min + 2 * static_cast<int>(rank); }
  //! Undefined for distances outside the valid set.
  Ternary at(int d) const;
  bool constant() const;
};

using ParamMap = std::map<std::string, std::int64_t>;

//! A permutation-invariant function stored as its (a, b, d) table.
class FunctionSpec {
 public:
  using Rule = std::function<Ternary(int a, int b, int d)>;

  FunctionSpec(int n, const Rule& rule, std::string family = "explicit", ParamMap params = {});

  int n() const { return n_; }
  const std::string& family() const { return family_; }
  const ParamMap& params() const { return params_; }
  const std::optional<StronglyPiDescriptor>& descriptor() const { return descriptor_; }
  void set_descriptor(StronglyPiDescriptor d) { descriptor_ = std::move(d); }

  Ternary eval(const Bits& x, const Bits& y) const;
  Ternary eval(const InputPair& p) const { return eval(p.x, p.y); }
  //! h(a, b, d); Undefined when d is not valid for (a, b).
  Ternary value(int a, int b, int d) const;
  SliceView slice(int a, int b) const;
  bool is_total() const;

  bool operator==(const FunctionSpec& o) const { return n_ == o.n_ && table_ == o.table_; }

 private:
  std::size_t slot(int a, int b) const { return static_cast<std::size_t>(a) * (n_ + 1) + b; }

  int n_;
  std::string family_;
  ParamMap params_;
  std::optional<StronglyPiDescriptor> descriptor_;
  std::vector<std::size_t> offset_;
  std::vector<Ternary> table_;
};

FunctionSpec make_ghd(int n, int a, int b, int c, int g);
FunctionSpec make_eghd(int n, int a, int b, int c, int g);
//! |x|=|y|=t; One when |x AND y| = 1 (distance 2t-2), Zero when disjoint (2t).
FunctionSpec make_udisj(int n, int t);
//! |x|=p, |y|=q; One when |x AND y| = p (x inside y), Zero when p-1.
FunctionSpec make_set_inclusion(int n, int p, int q);
//! |x|=t, |y|=1; One when the single element of y lies in x.
FunctionSpec make_sparse_indexing(int n, int t);
//! One iff distance <= k.
FunctionSpec make_hamming_threshold(int n, int k);
FunctionSpec make_equality(int n);
FunctionSpec build_strongly_pi(int n, const StronglyPiDescriptor& desc);
//! Dispatch by family name: ghd, eghd, udisj, setinc, si, hd, equality.
FunctionSpec build_named(const std::string& family, int n, const ParamMap& params);

//! x = 1^a 0^(n-a); y shares (a+b-d)/2 ones with x, rest placed right after x's block.
InputPair canonical_pair(int n, int a, int b, int d);

//! Total function whose slices start at a random value and flip between
//! consecutive valid distances with probability plateau_bias.
FunctionSpec random_total_pi(int n, std::uint64_t seed, double plateau_bias);

std::string save_spec_json(const FunctionSpec& f);
FunctionSpec load_spec_json(const std::string& text);
FunctionSpec load_spec_file(const std::string& path);
void save_spec_file(const FunctionSpec& f, const std::string& path);

}  // namespace permcc
