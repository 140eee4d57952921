#include <gtest/gtest.h>

#include <set>

#include "permcc/errors.hpp"
#include "permcc/reductions.hpp"

using namespace permcc;

namespace {

// Every valid eGHD target with n <= max_n.
std::vector<Target> all_targets(int max_n) {
  std::vector<Target> out;
  for (int n = 2; n <= max_n; ++n)
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) {
        const auto ds = valid_distances(n, a, b);
        for (std::size_t i = 0; i < ds.size(); ++i)
          for (std::size_t j = i + 1; j < ds.size(); ++j)
            out.push_back({n, a, b, (ds[i] + ds[j]) / 2, (ds[j] - ds[i]) / 2});
      }
  return out;
}

}  // namespace

TEST(Target, ParseAndPrint) {
  const Target t = parse_target("30,10,10,19,1");
  EXPECT_EQ(t, (Target{30, 10, 10, 19, 1}));
  EXPECT_EQ(target_to_string(t), "30,10,10,19,1");
  EXPECT_THROW(parse_target("1,2,3"), ValidationError);
  EXPECT_THROW(parse_target("1,2,x,4,5"), ValidationError);
}

TEST(Normalization, FlipsHeavyWeightsAndOrders) {
  auto nz = normalize_target({10, 7, 2, 5, 1}, true);
  auto t = apply_normalization({10, 7, 2, 5, 1}, nz);
  EXPECT_LE(t.a, t.b);
  EXPECT_LE(t.b, 5);
  EXPECT_TRUE(nz.flip_x);
  // Flipping one side maps c to n - c.
  EXPECT_EQ(t.c, 5);
  auto keep = normalize_target({10, 4, 2, 4, 1}, false);
  EXPECT_FALSE(keep.swap);
}

TEST(Padding, Examples) {
  auto p = padding_plan(2, 3, 3);
  EXPECT_EQ(p.shared, 1);
  EXPECT_EQ(p.coords, 4);
  auto e = padding_plan(0, 0, 0);
  EXPECT_EQ(e.coords, 0);
  EXPECT_THROW(padding_plan(1, 1, 3), InfeasibleError);
  EXPECT_THROW(padding_plan(1, 2, 2), InfeasibleError);
}

TEST(Padding, RepeatAndPadIdentities) {
  auto r = repeat_and_pad(bits_from_string("10"), bits_from_string("11"), 2, padding_plan(0, 0, 0));
  EXPECT_EQ(hamming(r.x, r.y), 2);
  auto s = repeat_and_pad(bits_from_string("101"), bits_from_string("101"), 1, padding_plan(2, 3, 3));
  EXPECT_EQ(hamming(s.x, s.y), 3);
  auto id = repeat_and_pad(bits_from_string("0110"), bits_from_string("1100"), 1, padding_plan(0, 0, 0));
  EXPECT_EQ(bits_to_string(id.x), "0110");
  EXPECT_EQ(bits_to_string(id.y), "1100");
  // General law: d = g d' + C, |x| = g|x'| + A, |y| = g|y'| + B.
  for (int g = 1; g <= 3; ++g)
    for (auto [A, B, C] : {std::tuple{0, 0, 0}, {2, 3, 3}, {3, 1, 2}, {4, 4, 0}}) {
      const Bits x = bits_from_string("10110"), y = bits_from_string("01100");
      auto out = repeat_and_pad(x, y, g, padding_plan(A, B, C));
      EXPECT_EQ(hamming(out.x, out.y), g * hamming(x, y) + C);
      EXPECT_EQ(weight(out.x), g * weight(x) + A);
      EXPECT_EQ(weight(out.y), g * weight(y) + B);
    }
}

TEST(Reductions, Examples) {
  auto u = reduce_from_udisj({30, 10, 10, 19, 1});
  EXPECT_EQ(u.t(), 5);
  EXPECT_EQ(u.source_n(), 15);
  EXPECT_EQ(u.claimed_bound(), 5);
  auto s = reduce_from_setinc({6, 3, 3, 3, 1});
  EXPECT_EQ(s.t(), 2);
  EXPECT_EQ(s.w(), 1);
  EXPECT_EQ(s.claimed_bound(), 1);
  EXPECT_THROW(reduce_from_setinc({6, 0, 2, 2, 1}), ValidationError);
  EXPECT_EQ(parse_family("udisj"), SourceFamily::UDISJ);
  EXPECT_THROW(parse_family("nope"), ValidationError);
  EXPECT_NE(u.summary().find("t=5"), std::string::npos);
}

TEST(Reductions, HadamardEncoding) {
  // SI^4 with t = 1 needs no padding, so the map exposes the code itself.
  auto m = reduce_from_sparse_indexing({4, 1, 2, 2, 1}, SiMode::Ic);
  ASSERT_EQ(m.t(), 1);
  EXPECT_EQ(m.plan().coords, 0);
  auto p = m.map(Bits{1, 0}, Bits{0, 0});
  EXPECT_EQ(bits_to_string(p.y), "0101");
  EXPECT_EQ(bits_to_string(p.x), "1000");
  // Every nonzero source x has a code of weight 2^t.
  auto big = reduce_from_sparse_indexing({40, 2, 12, 12, 2}, SiMode::Ic);
  for (const auto& s : big.enumerate_sources()) {
    EXPECT_EQ(static_cast<int>(s.x.size()), big.t() + 1);
    EXPECT_GT(weight(s.x), 0);
  }
  EXPECT_TRUE(check_contract(big).ok());
}

TEST(Reductions, ExhaustiveContractsSmallN) {
  std::size_t feasible[4] = {0, 0, 0, 0};
  for (const auto& t : all_targets(9)) {
    int slot = 0;
    for (auto [fam, mode] : {std::pair{SourceFamily::UDISJ, SiMode::Ic}, {SourceFamily::SetInc, SiMode::Ic},
                             {SourceFamily::SparseIndexing, SiMode::Ic},
                             {SourceFamily::SparseIndexing, SiMode::OneWay}}) {
      try {
        auto m = reduce(t, fam, mode);
        auto rep = check_contract(m);
        EXPECT_TRUE(rep.ok()) << m.summary();
        ++feasible[slot];
      } catch (const InfeasibleError&) {
      }
      ++slot;
    }
  }
  for (auto f : feasible) EXPECT_GT(f, 0u);
}

TEST(Reductions, LabelsFollowSourceOrientation) {
  auto m = reduce_from_udisj({30, 10, 10, 19, 1});
  std::set<int> one_d, zero_d;
  for (const auto& s : m.enumerate_sources()) {
    auto p = m.map(s.x, s.y);
    (s.one ? one_d : zero_d).insert(hamming(p.x, p.y));
  }
  ASSERT_EQ(one_d.size(), 1u);
  ASSERT_EQ(zero_d.size(), 1u);
  EXPECT_EQ(std::abs(*one_d.begin() - *zero_d.begin()), 2);
  EXPECT_EQ(m.expected(true) == Ternary::One ? *one_d.begin() : *zero_d.begin(), 20);
}
