#pragma once

#include <stdexcept>
#include <string>

namespace wtv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input violates an operation's precondition (dimension mismatch, q <= 1, odd p, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not reach its accuracy target.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A discretization box loses more mass than allowed. Carries the measured defect.
class PrecisionError : public NumericalError {
public:
    PrecisionError(const std::string& what, double defect);
    double defect() const noexcept { return defect_; }

private:
    double defect_;
};

/// Envelope hypotheses could not be certified on the given data (e.g. no exponential tail).
class HypothesisError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Process exit codes used by the command-line front end.
enum class ExitCode : int {
    Success = 0,
    Precondition = 2,
    Numerical = 3,
    CertificateViolated = 4,
};

namespace detail {
[[noreturn]] void fail_precondition(const std::string& what);
inline void require(bool cond, const std::string& what) {
    if (!cond) fail_precondition(what);
}
}  // namespace detail

}  // namespace wtv
