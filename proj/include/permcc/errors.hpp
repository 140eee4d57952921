#pragma once

#include <stdexcept>
#include <string>

namespace permcc {

//! Bad arguments or a violated precondition.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

//! A reduction or parameter choice has no feasible instantiation.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Channel misuse during a session (deadlock, one-way violation, round cap).
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Explicit tensor power would exceed the configured dimension cap.
struct DimensionOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! The function contradicts what its measure promises (wrong k or a bug).
struct InconsistentMeasure : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace permcc
