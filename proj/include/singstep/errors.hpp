#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace singstep {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rank test failed: sigma_min <= rank_tol * sigma_max.
class SingularMatrix : public Error {
public:
    SingularMatrix(double sigma_min, double sigma_max);
    double sigma_min() const noexcept { return sigma_min_; }
    double sigma_max() const noexcept { return sigma_max_; }

private:
    double sigma_min_;
    double sigma_max_;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

/// A hypothesis of the operation does not hold for the given arguments.
class NotApplicable : public Error {
public:
    using Error::Error;
};

/// N(A) and N(B) intersect nontrivially.
class SharedNullspace : public Error {
public:
    using Error::Error;
};

/// B N(A) and R(A) do not span the whole space.
class DegenerateSum : public Error {
public:
    using Error::Error;
};

/// Range-restricted inverse iteration does not contract.
class NoConvergence : public Error {
public:
    using Error::Error;
};

class ClusteredSingularValues : public Error {
public:
    using Error::Error;
};

class StepTooLarge : public Error {
public:
    using Error::Error;
};

class NonFinite : public Error {
public:
    using Error::Error;
};

class OutOfDomain : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, std::string reason);
    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// The directional limit defining the indicator did not settle.
class LimitUnstable : public Error {
public:
    using Error::Error;
};

class RootEncountered : public Error {
public:
    using Error::Error;
};

/// The bordered matrix [[A, -R], [T^T, 0]] is singular.
class BorderedSingular : public Error {
public:
    using Error::Error;
};

}  // namespace singstep
