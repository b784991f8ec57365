#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nehari {

enum class ErrorKind {
    InvalidParameter,
    RegimeMismatch,
    UnsupportedRegime,
    InvalidCoefficients,
    NoNegativeFiber,
    RootBracketFailure,
    NotOnM,
    NotOnM0,
    GridMismatch,
    AssemblyFailure,
    NumericalFailure,
    DegenerateConstraint,
    InitializationFailure,
    ConvergenceFailure,
    BranchLossFailure,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::RegimeMismatch: return "RegimeMismatch";
    case ErrorKind::UnsupportedRegime: return "UnsupportedRegime";
    case ErrorKind::InvalidCoefficients: return "InvalidCoefficients";
    case ErrorKind::NoNegativeFiber: return "NoNegativeFiber";
    case ErrorKind::RootBracketFailure: return "RootBracketFailure";
    case ErrorKind::NotOnM: return "NotOnM";
    case ErrorKind::NotOnM0: return "NotOnM0";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::AssemblyFailure: return "AssemblyFailure";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::DegenerateConstraint: return "DegenerateConstraint";
    case ErrorKind::InitializationFailure: return "InitializationFailure";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::BranchLossFailure: return "BranchLossFailure";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {

inline void require(bool ok, ErrorKind kind, const char* what)
{
    if (!ok) throw Error(kind, what);
}

} // namespace detail
} // namespace nehari
