#pragma once

#include <stdexcept>
#include <string>

namespace sbf {

enum class ErrorCode {
    DuplicatePoints,
    RefinementStall,
    EmptyCell,
    UnsupportedDimension,
    InvalidPerturbation,
    PoleAtInteger,
    QuadratureNonConvergence,
    SeriesNonConvergence,
    DivergentSeries,
    InfeasibleMoments,
    NegativeWeight,
    SingularSystem,
    SearchBudgetExhausted,
    ZeroCoefficient,
    DegreeOverflow,
    FitUnstable,
    InconclusiveTrend,
    ConditionFailed,
};

inline const char* to_string(ErrorCode c)
{
    switch (c) {
    case ErrorCode::DuplicatePoints: return "DuplicatePoints";
    case ErrorCode::RefinementStall: return "RefinementStall";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::InvalidPerturbation: return "InvalidPerturbation";
    case ErrorCode::PoleAtInteger: return "PoleAtInteger";
    case ErrorCode::QuadratureNonConvergence: return "QuadratureNonConvergence";
    case ErrorCode::SeriesNonConvergence: return "SeriesNonConvergence";
    case ErrorCode::DivergentSeries: return "DivergentSeries";
    case ErrorCode::InfeasibleMoments: return "InfeasibleMoments";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SearchBudgetExhausted: return "SearchBudgetExhausted";
    case ErrorCode::ZeroCoefficient: return "ZeroCoefficient";
    case ErrorCode::DegreeOverflow: return "DegreeOverflow";
    case ErrorCode::FitUnstable: return "FitUnstable";
    case ErrorCode::InconclusiveTrend: return "InconclusiveTrend";
    case ErrorCode::ConditionFailed: return "ConditionFailed";
    }
    return "Unknown";
}

// Numeric failure raised by the library. Precondition violations use
// std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what)
{
    if (!cond)
        throw std::invalid_argument(what);
}

} // namespace sbf
