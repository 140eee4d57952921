#include "permcc/engine.hpp"

#include <cmath>
#include <utility>

#include "permcc/errors.hpp"

namespace permcc {

PartyTask& PartyTask::operator=(PartyTask&& o) noexcept {
  if (this != &o) {
    if (h_) h_.destroy();
    h_ = std::exchange(o.h_, {});
  }
  return *this;
}

PartyTask::~PartyTask() {
  if (h_) h_.destroy();
}

PartyTask::Step PartyTask::advance() {
  h_.resume();
  auto& p = h_.promise();
  if (h_.done()) {
    if (p.error) std::rethrow_exception(p.error);
    return Step::Done;
  }
  return p.outgoing ? Step::Send : Step::Wait;
}

BitString PartyTask::take_outgoing() {
  auto& p = h_.promise();
  BitString m = std::move(*p.outgoing);
  p.outgoing.reset();
  return m;
}

namespace {

PartyTask one_way_alice(Bits x, RandomView v, std::function<BitString(const Bits&, const RandomView&)> fn) {
  co_await send(fn(x, v));
  co_return std::nullopt;
}

PartyTask one_way_bob(Bits y, RandomView v,
                      std::function<std::int64_t(const Bits&, const RandomView&, const BitString&)> fn) {
  BitString m = co_await receive();
  co_return fn(y, v, m);
}

}  // namespace

Protocol one_way_protocol(std::string name, std::function<BitString(const Bits&, const RandomView&)> send_fn,
                          std::function<std::int64_t(const Bits&, const RandomView&, const BitString&)> decide_fn,
                          BudgetFn budget) {
  Protocol p;
  p.name = std::move(name);
  p.one_way = true;
  p.budget = std::move(budget);
  p.alice = [send_fn](Bits x, RandomView v) { return one_way_alice(std::move(x), std::move(v), send_fn); };
  p.bob = [decide_fn](Bits y, RandomView v) { return one_way_bob(std::move(y), std::move(v), decide_fn); };
  return p;
}

SessionResult run_session(const Protocol& p, const InputPair& in, const RandomnessMode& mode,
                          const SessionOptions& opt) {
  if (in.x.size() != in.y.size()) throw ValidationError("run_session: inputs differ in length");
  PartyTask tasks[2] = {p.alice(in.x, RandomView(mode, Party::Alice)), p.bob(in.y, RandomView(mode, Party::Bob))};
  SessionResult r;
  bool finished[2] = {false, false};

  for (;;) {
    bool progress = false;
    for (int i = 0; i < 2; ++i) {
      PartyTask& t = tasks[i];
      while (t.runnable()) {
        const auto step = t.advance();
        progress = true;
        if (step == PartyTask::Step::Wait) break;
        if (step == PartyTask::Step::Done) {
          finished[i] = true;
          if (i == 0 && p.one_way && t.result())
            throw ProtocolError(p.name + ": Alice produced an output in a one-way protocol");
          break;
        }
        BitString msg = t.take_outgoing();
        if (i == 1 && p.one_way) throw ProtocolError(p.name + ": Bob sent a message in a one-way protocol");
        (i == 0 ? r.bits_a_to_b : r.bits_b_to_a) += static_cast<std::int64_t>(msg.size());
        if (++r.rounds > opt.max_rounds) throw ProtocolError(p.name + ": round cap exceeded");
        if (opt.record_transcript) r.transcript.push_back({i == 0 ? Party::Alice : Party::Bob, msg});
        tasks[1 - i].deliver(std::move(msg));
      }
    }
    if (!progress) break;
  }

  const auto bob_out = finished[1] ? tasks[1].result() : std::nullopt;
  const auto alice_out = finished[0] ? tasks[0].result() : std::nullopt;
  if (bob_out)
    r.output = *bob_out;
  else if (alice_out)
    r.output = *alice_out;
  else
    throw ProtocolError(p.name + ": deadlock, neither party can proceed and no output was produced");
  return r;
}

LabeledInput labeled_canonical(const FunctionSpec& f, int a, int b, int d) {
  LabeledInput li;
  li.pair = canonical_pair(f.n(), a, b, d);
  li.expected = f.value(a, b, d);
  li.id = std::to_string(a) + "/" + std::to_string(b) + "/" + std::to_string(d);
  return li;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t input, std::uint64_t trial) {
  return keyed_word(seed, stream_id({0x7472, input}), trial);
}

double TrialReport::max_error() const {
  double m = 0.0;
  for (const auto& s : inputs) m = std::max(m, s.error);
  return m;
}

double TrialReport::mean_bits() const {
  if (inputs.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : inputs) acc += s.mean_bits_ab + s.mean_bits_ba;
  return acc / static_cast<double>(inputs.size());
}

std::int64_t TrialReport::max_bits() const {
  std::int64_t m = 0;
  for (const auto& s : inputs) m = std::max(m, s.max_bits);
  return m;
}

std::int64_t TrialReport::budget_violations() const {
  std::int64_t v = 0;
  for (const auto& s : inputs) v += s.budget_violations;
  return v;
}

TrialReport estimate_error(const Protocol& p, const std::vector<LabeledInput>& inputs, const RandomnessMode& mode,
                           std::int64_t trials, std::uint64_t seed) {
  if (trials < 1) throw ValidationError("trials must be >= 1");
  TrialReport rep;
  rep.protocol = p.name;
  rep.trials = trials;
  SessionOptions opt;
  opt.record_transcript = false;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const LabeledInput& li = inputs[i];
    if (li.expected == Ternary::Undefined) throw ValidationError("estimate_error: expected value is undefined");
    InputStats s;
    s.id = li.id.empty() ? std::to_string(i) : li.id;
    s.a = weight(li.pair.x);
    s.b = weight(li.pair.y);
    s.d = hamming(li.pair.x, li.pair.y);
    s.expected = li.expected;
    if (p.budget) s.budget = p.budget(s.a, s.b);
    const std::int64_t want = li.expected == Ternary::One ? 1 : 0;
    double ab = 0.0, ba = 0.0, rounds = 0.0;
    for (std::int64_t t = 0; t < trials; ++t) {
      const SessionResult r = run_session(p, li.pair, mode.with_seed(trial_seed(seed, i, t)), opt);
      if (r.output != want) ++s.errors;
      ab += r.bits_a_to_b;
      ba += r.bits_b_to_a;
      rounds += r.rounds;
      s.max_bits = std::max(s.max_bits, r.bits());
      if (s.budget >= 0 && r.bits() > s.budget) ++s.budget_violations;
    }
    const double n = static_cast<double>(trials);
    s.error = s.errors / n;
    s.ci95 = 1.96 * std::sqrt(s.error * (1.0 - s.error) / n);
    s.mean_bits_ab = ab / n;
    s.mean_bits_ba = ba / n;
    s.mean_rounds = rounds / n;
    rep.inputs.push_back(std::move(s));
  }
  return rep;
}

}  // namespace permcc
