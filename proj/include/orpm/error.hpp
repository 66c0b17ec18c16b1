#pragma once

#include <stdexcept>
#include <string>

namespace orpm {

/// Base for all errors raised by the library. The CLI maps each subclass
/// onto a process exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller broke a documented precondition (bad joint set, empty input,
/// mismatched grids, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A file did not parse. The message names the offending field or byte offset.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace orpm
