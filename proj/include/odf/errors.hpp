// Exception taxonomy. The CLI maps these onto distinct exit codes:
// InputError -> 2, DataError -> 3, everything else derived from Error -> 4.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace odf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: unreadable files, malformed records, invalid parameters.
class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& what, std::size_t line)
        : InputError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Integrity failures: magic/version mismatch, truncation, violated invariants,
// mixing artifacts from different scenes.
class DataError : public Error {
public:
    using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

// A query position falls outside every active partition. Callers decide the
// fallback policy; the library never silently snaps to a nearest cell.
class NoCoverageError : public Error {
public:
    using Error::Error;
};

}  // namespace odf
