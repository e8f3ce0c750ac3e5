#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evolab {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed expression source. `offset` is the byte offset of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at offset " + std::to_string(offset))
        , offset_(offset)
    {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Evaluation hit log(<=0), sqrt(<0), x/0, 0^negative or a similar singularity.
class DomainError : public Error {
public:
    DomainError(const std::string& what, std::string node)
        : Error(what + " in `" + node + "`")
        , node_(std::move(node))
    {}

    const std::string& node() const noexcept { return node_; }

private:
    std::string node_;
};

/// Symbolic differentiation was asked for a node kind it does not admit.
class UnsupportedForm : public Error {
public:
    using Error::Error;
};

/// Operator/family/check parameters violate a stated constraint.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Fatal numerical failure (singular system, non-finite state, lost positivity).
class NumericError : public Error {
public:
    using Error::Error;
};

/// An iterative limit did not settle within its budget.
class ConvergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace evolab
