#pragma once

#include <stdexcept>
#include <string>

namespace statues {

// Base class for everything this library throws on purpose. Logic errors
// (misuse of the API, violated preconditions) use std::invalid_argument
// instead and are not part of this hierarchy.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A pmf literal or a condensed result had no usable mass: empty entry list,
// a negative weight, or a zero total.
struct InvalidPmf : Error {
    using Error::Error;
};

// A query produced no atoms at all, i.e. the conditioning evidence is
// impossible.
struct EmptyDistribution : Error {
    using Error::Error;
};

// A conditional's evidence yielded a value that is not a boolean.
struct NonBooleanCondition : Error {
    using Error::Error;
};

// A table saw a selector value with no matching branch. Raised lazily, only
// when such a value is actually produced under the current bindings.
struct MissingTableEntry : Error {
    using Error::Error;
};

// A pure function rejected its arguments (wrong operand type, division by
// zero, inexact square root, index out of range, ...).
struct FunctionError : Error {
    using Error::Error;
};

// A multi-functional node drew a value that is not a function of the
// expected arity.
struct NonFunctionValue : Error {
    using Error::Error;
};

// An observation pinned an elementary node to a value outside its domain.
struct UnknownObservationValue : Error {
    using Error::Error;
};

// The brute-force oracle refused to enumerate more worlds than its cap.
struct CapExceeded : Error {
    using Error::Error;
};

} // namespace statues
