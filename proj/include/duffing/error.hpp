#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace duffing {

enum class ErrorKind {
    InvalidArgument,
    NotSymmetric,
    NotPositive,
    DegenerateGap,
    NearSingular,
    LambdaOutOfGap,
    GridTooCoarse,
    StepSizeUnderflow,
    MisalignedGrids,
    StrideTooCoarse,
    HorizonTooShort,
    UnboundedSolution,
    Config,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NotPositive: return "NotPositive";
    case ErrorKind::DegenerateGap: return "DegenerateGap";
    case ErrorKind::NearSingular: return "NearSingular";
    case ErrorKind::LambdaOutOfGap: return "LambdaOutOfGap";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::MisalignedGrids: return "MisalignedGrids";
    case ErrorKind::StrideTooCoarse: return "StrideTooCoarse";
    case ErrorKind::HorizonTooShort: return "HorizonTooShort";
    case ErrorKind::UnboundedSolution: return "UnboundedSolution";
    case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace duffing
