#pragma once

#include <coroutine>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "permcc/bits.hpp"
#include "permcc/funcspec.hpp"
#include "permcc/randomness.hpp"

namespace permcc {

//! One side of a protocol as a coroutine. It talks through
//! `co_await send(msg)` / `co_await receive()` and finishes with
//! `co_return value` (or std::nullopt when it has nothing to output).
class PartyTask {
 public:
  struct promise_type {
    std::deque<BitString> inbox;
    std::optional<BitString> outgoing;
    std::optional<std::int64_t> result;
    std::exception_ptr error;
    bool waiting = false;

    PartyTask get_return_object() { return PartyTask(std::coroutine_handle<promise_type>::from_promise(*this)); }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    void return_value(std::optional<std::int64_t> v) { result = v; }
    void unhandled_exception() { error = std::current_exception(); }
  };

  enum class Step { Send, Wait, Done };

  PartyTask() = default;
  explicit PartyTask(std::coroutine_handle<promise_type> h) : h_(h) {}
  PartyTask(PartyTask&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  PartyTask& operator=(PartyTask&& o) noexcept;
  PartyTask(const PartyTask&) = delete;
  PartyTask& operator=(const PartyTask&) = delete;
  ~PartyTask();

  //! Runs until the next send, a blocking receive, or completion.
  Step advance();
  bool done() const { return !h_ || h_.done(); }
  bool runnable() const { return !done() && (!h_.promise().waiting || !h_.promise().inbox.empty()); }
  BitString take_outgoing();
  void deliver(BitString msg) { h_.promise().inbox.push_back(std::move(msg)); }
  std::optional<std::int64_t> result() const { return h_.promise().result; }

 private:
  std::coroutine_handle<promise_type> h_;
};

struct SendAwaiter {
  BitString msg;
  bool await_ready() const noexcept { return false; }
  void await_suspend(std::coroutine_handle<PartyTask::promise_type> h) { h.promise().outgoing = std::move(msg); }
  void await_resume() const noexcept {}
};

struct ReceiveAwaiter {
  PartyTask::promise_type* p = nullptr;
  bool await_ready() const noexcept { return false; }
  bool await_suspend(std::coroutine_handle<PartyTask::promise_type> h) {
    p = &h.promise();
    if (!p->inbox.empty()) return false;
    p->waiting = true;
    return true;
  }
  BitString await_resume() {
    p->waiting = false;
    BitString m = std::move(p->inbox.front());
    p->inbox.pop_front();
    return m;
  }
};

inline SendAwaiter send(BitString msg) { return SendAwaiter{std::move(msg)}; }
inline ReceiveAwaiter receive() { return {}; }

//! Inputs are taken by value: the coroutine frame owns them.
using PartyProgram = std::function<PartyTask(Bits, RandomView)>;
//! Worst-case bits for a session with the given weights.
using BudgetFn = std::function<std::int64_t(int a, int b)>;

struct Protocol {
  std::string name;
  PartyProgram alice;
  PartyProgram bob;
  bool one_way = false;
  BudgetFn budget;
};

//! Alice sends one message and stops; Bob decides from it.
Protocol one_way_protocol(std::string name, std::function<BitString(const Bits&, const RandomView&)> send_fn,
                          std::function<std::int64_t(const Bits&, const RandomView&, const BitString&)> decide_fn,
                          BudgetFn budget);

struct Message {
  Party from = Party::Alice;
  BitString bits;
};

struct SessionResult {
  std::int64_t output = 0;
  std::int64_t bits_a_to_b = 0;
  std::int64_t bits_b_to_a = 0;
  std::int64_t rounds = 0;  // messages sent
  std::vector<Message> transcript;

  std::int64_t bits() const { return bits_a_to_b + bits_b_to_a; }
};

struct SessionOptions {
  bool record_transcript = true;
  std::int64_t max_rounds = 1'000'000;
};

//! Bob's output wins when both parties return one. Throws ProtocolError on
//! deadlock, the round cap, or a one-way violation.
SessionResult run_session(const Protocol& p, const InputPair& in, const RandomnessMode& mode,
                          const SessionOptions& opt = {});

struct LabeledInput {
  InputPair pair;
  Ternary expected = Ternary::Zero;
  std::string id;
};

//! Canonical pair of (n, a, b, d) labelled with f's value there.
LabeledInput labeled_canonical(const FunctionSpec& f, int a, int b, int d);

struct InputStats {
  std::string id;
  int a = 0;
  int b = 0;
  int d = 0;
  Ternary expected = Ternary::Zero;
  std::int64_t errors = 0;
  double error = 0.0;
  double ci95 = 0.0;
  double mean_bits_ab = 0.0;
  double mean_bits_ba = 0.0;
  double mean_rounds = 0.0;
  std::int64_t max_bits = 0;
  std::int64_t budget = -1;  // -1 when the protocol exports none
  std::int64_t budget_violations = 0;
};

struct TrialReport {
  std::string protocol;
  std::int64_t trials = 0;
  std::vector<InputStats> inputs;

  double max_error() const;
  double mean_bits() const;
  std::int64_t max_bits() const;
  std::int64_t budget_violations() const;
};

//! Seed for trial `trial` on input `input`; distinct per pair and replayable.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t input, std::uint64_t trial);

TrialReport estimate_error(const Protocol& p, const std::vector<LabeledInput>& inputs, const RandomnessMode& mode,
                           std::int64_t trials, std::uint64_t seed);

}  // namespace permcc
