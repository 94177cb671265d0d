#include "dap/errors.hpp"

namespace dap {

std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::ModeMismatch: return "ModeMismatch";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::NegativeOperand: return "NegativeOperand";
    case Errc::RationalNotPerfectSquare: return "RationalNotPerfectSquare";
    case Errc::ParseError: return "ParseError";
    case Errc::SizeOne: return "SizeOne";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::NotPowerOfTwo: return "NotPowerOfTwo";
    case Errc::TargetTooSmall: return "TargetTooSmall";
    case Errc::BadDensity: return "BadDensity";
    case Errc::ZeroDiagonal: return "ZeroDiagonal";
    case Errc::NotLowerTriangular: return "NotLowerTriangular";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::MalformedTopology: return "MalformedTopology";
    case Errc::MissingMainComponents: return "MissingMainComponents";
    case Errc::DoubleCompletion: return "DoubleCompletion";
    case Errc::NotComplete: return "NotComplete";
    case Errc::UnknownChild: return "UnknownChild";
    case Errc::RootFailureUnrecoverable: return "RootFailureUnrecoverable";
    case Errc::DeadlockDetected: return "DeadlockDetected";
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what)
    , code_(code)
{
}

void fail(Errc code, const std::string& what)
{
    throw Error(code, what);
}

} // namespace dap
