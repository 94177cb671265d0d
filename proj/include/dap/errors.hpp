#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dap {

// Every failure surfaced by the library carries one of these codes so that
// callers (and tests) can branch on the kind without parsing messages.
enum class Errc {
    ModeMismatch,
    DivisionByZero,
    NegativeOperand,
    RationalNotPerfectSquare,
    ParseError,
    SizeOne,
    SizeMismatch,
    NotPowerOfTwo,
    TargetTooSmall,
    BadDensity,
    ZeroDiagonal,
    NotLowerTriangular,
    NotSymmetric,
    NotPositiveDefinite,
    MalformedTopology,
    MissingMainComponents,
    DoubleCompletion,
    NotComplete,
    UnknownChild,
    RootFailureUnrecoverable,
    DeadlockDetected,
    MalformedFrame,
    IoError,
    InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

} // namespace dap
