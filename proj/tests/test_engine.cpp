#include <gtest/gtest.h>

#include <cmath>

#include "permcc/engine.hpp"
#include "permcc/errors.hpp"

using namespace permcc;

namespace {

// Alice sends x, Bob answers with the distance.
Protocol send_all() {
  return one_way_protocol(
      "send_all",
      [](const Bits& x, const RandomView&) {
        BitString m;
        for (auto b : x) m.push_bit(b);
        return m;
      },
      [](const Bits& y, const RandomView&, const BitString& m) -> std::int64_t {
        int d = 0;
        for (std::size_t i = 0; i < y.size(); ++i) d += (m.bit(i) != (y[i] != 0));
        return d;
      },
      [](int, int) -> std::int64_t { return -1; });
}

PartyTask ping(Bits x, RandomView) {
  for (int i = 0; i < 3; ++i) {
    BitString m;
    m.push_uint(static_cast<std::uint64_t>(weight(x)), 8);
    co_await send(m);
    auto reply = co_await receive();
    if (reply.size() != 1) throw ValidationError("bad reply");
  }
  co_return std::nullopt;
}

PartyTask pong(Bits y, RandomView) {
  std::int64_t total = 0;
  for (int i = 0; i < 3; ++i) {
    auto m = co_await receive();
    total += static_cast<std::int64_t>(BitReader(m).read_uint(8)) + weight(y);
    BitString ack;
    ack.push_bit(true);
    co_await send(ack);
  }
  co_return total;
}

PartyTask wait_forever(Bits, RandomView) {
  co_await receive();
  co_return 0;
}

PartyTask alice_answers(Bits x, RandomView) { co_return weight(x); }

PartyTask chatty(Bits, RandomView) {
  for (;;) co_await send(BitString{});
}

PartyTask bob_talks(Bits, RandomView) {
  co_await send(BitString{});
  co_return 1;
}

PartyTask thrower(Bits, RandomView) {
  throw InconsistentMeasure("boom");
  co_return 0;
}

// Outputs 1 with probability 1/4 from Bob's private coins.
PartyTask coin_bob(Bits, RandomView v) { co_return (v.private_word(1, 0) & 3u) == 0 ? 1 : 0; }
PartyTask silent(Bits, RandomView) { co_return std::nullopt; }

}  // namespace

TEST(Engine, OneWayDistance) {
  auto p = send_all();
  auto in = canonical_pair(10, 4, 5, 5);
  auto r = run_session(p, in, RandomnessMode::perfect(1));
  EXPECT_EQ(r.output, 5);
  EXPECT_EQ(r.bits_a_to_b, 10);
  EXPECT_EQ(r.bits_b_to_a, 0);
  EXPECT_EQ(r.rounds, 1);
  ASSERT_EQ(r.transcript.size(), 1u);
  EXPECT_EQ(r.transcript[0].from, Party::Alice);
}

TEST(Engine, PingPongCountsBothDirections) {
  Protocol p{"pingpong", ping, pong, false, nullptr};
  auto r = run_session(p, canonical_pair(8, 3, 2, 3), RandomnessMode::perfect(1));
  EXPECT_EQ(r.output, 3 * (3 + 2));
  EXPECT_EQ(r.bits_a_to_b, 24);
  EXPECT_EQ(r.bits_b_to_a, 3);
  EXPECT_EQ(r.rounds, 6);
  SessionOptions quiet;
  quiet.record_transcript = false;
  EXPECT_TRUE(run_session(p, canonical_pair(8, 3, 2, 3), RandomnessMode::perfect(1), quiet).transcript.empty());
}

TEST(Engine, AliceOutputUsedWhenBobHasNone) {
  Protocol p{"alice_out", alice_answers, silent, false, nullptr};
  EXPECT_EQ(run_session(p, canonical_pair(6, 4, 1, 3), RandomnessMode::perfect(1)).output, 4);
}

TEST(Engine, ChannelMisuse) {
  const auto in = canonical_pair(4, 1, 1, 0);
  const auto m = RandomnessMode::perfect(1);
  EXPECT_THROW(run_session(Protocol{"dead", wait_forever, wait_forever, false, nullptr}, in, m), ProtocolError);
  EXPECT_THROW(run_session(Protocol{"ow", alice_answers, silent, true, nullptr}, in, m), ProtocolError);
  EXPECT_THROW(run_session(Protocol{"ow", silent, bob_talks, true, nullptr}, in, m), ProtocolError);
  SessionOptions cap;
  cap.max_rounds = 50;
  EXPECT_THROW(run_session(Protocol{"chat", chatty, wait_forever, false, nullptr}, in, m, cap), ProtocolError);
  EXPECT_THROW(run_session(Protocol{"throw", silent, thrower, false, nullptr}, in, m), InconsistentMeasure);
  EXPECT_THROW(run_session(send_all(), InputPair{Bits(3), Bits(4)}, m), ValidationError);
}

TEST(Engine, EstimateErrorDeterministicProtocol) {
  auto f = make_hamming_threshold(8, 8);
  auto p = send_all();
  // Output is the distance; expected is 1 (all distances <= 8), so the error is 0 only at d = 1.
  std::vector<LabeledInput> ins{labeled_canonical(f, 3, 2, 1), labeled_canonical(f, 3, 3, 2)};
  auto rep = estimate_error(p, ins, RandomnessMode::perfect(1), 20, 3);
  ASSERT_EQ(rep.inputs.size(), 2u);
  EXPECT_EQ(rep.inputs[0].error, 0.0);
  EXPECT_EQ(rep.inputs[1].error, 1.0);
  EXPECT_EQ(rep.inputs[0].id, "3/2/1");
  EXPECT_EQ(rep.inputs[0].mean_bits_ab, 8.0);
  EXPECT_EQ(rep.max_bits(), 8);
  EXPECT_EQ(rep.inputs[0].budget, -1);
  EXPECT_EQ(rep.budget_violations(), 0);
  EXPECT_THROW(estimate_error(p, ins, RandomnessMode::perfect(1), 0, 3), ValidationError);
}

TEST(Engine, EstimateErrorMatchesCoinBias) {
  Protocol p{"coin", silent, coin_bob, false, [](int, int) -> std::int64_t { return 0; }};
  auto f = make_equality(4);
  std::vector<LabeledInput> ins{labeled_canonical(f, 2, 2, 2)};  // expected Zero
  const int trials = 20000;
  auto rep = estimate_error(p, ins, RandomnessMode::private_coins(1), trials, 5);
  EXPECT_NEAR(rep.inputs[0].error, 0.25, 4 * std::sqrt(0.25 * 0.75 / trials));
  EXPECT_NEAR(rep.inputs[0].ci95, 1.96 * std::sqrt(0.25 * 0.75 / trials), 1e-3);
  // Replayable.
  auto again = estimate_error(p, ins, RandomnessMode::private_coins(1), trials, 5);
  EXPECT_EQ(again.inputs[0].errors, rep.inputs[0].errors);
  EXPECT_NE(trial_seed(5, 0, 1), trial_seed(5, 1, 0));
}
