#pragma once

#include <stdexcept>
#include <string>

namespace coldrec {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Covariance block not positive definite even after the jitter schedule.
class SingularBlock : public Error {
public:
    using Error::Error;
};

/// Incompatible vector/matrix dimensions or malformed index sets.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A coordinate has zero (or negative) variance where a positive one is required.
class ZeroVariance : public Error {
public:
    using Error::Error;
};

/// A selection refers to a coordinate outside the candidate pool.
class IndexOutOfPool : public Error {
public:
    using Error::Error;
};

/// Requested budget cannot be served by the pool (m+n > pool, n > remaining, m < 1).
class BudgetExceedsPool : public Error {
public:
    using Error::Error;
};

/// Exhaustive subset enumeration would exceed the configured guard.
class CombinatorialBlowup : public Error {
public:
    using Error::Error;
};

/// Closed-form three-user solver requires pairwise distinct covariances.
class DegenerateCovariances : public Error {
public:
    using Error::Error;
};

/// Malformed input data; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, long line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    [[nodiscard]] long line() const noexcept { return line_; }

private:
    long line_;
};

/// The same (user, item) pair appears more than once in a ratings file.
class DuplicatePair : public Error {
public:
    using Error::Error;
};

/// Fewer qualifying items than the requested cold-start test split.
class InsufficientItems : public Error {
public:
    using Error::Error;
};

/// A user has no training ratings, so no prior can be estimated.
class EmptyUserHistory : public Error {
public:
    using Error::Error;
};

}  // namespace coldrec
