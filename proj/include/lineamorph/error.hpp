#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lineamorph {

enum class ErrorCode {
    // volume
    MalformedHeader,
    DimensionMismatch,
    UnsupportedEncoding,
    IoFailure,
    InvalidMask,
    InvalidLandmarks,
    EmptyIntersection,
    // interslice
    EmptySlice,
    TooFewSlices,
    DimsMismatch,
    // morphometry
    FragmentedMidline,
    DegenerateCurve,
    DegenerateChord,
    EmptyCrossSection,
    NoMeasurableSlices,
    TooFewMeasured,
    CurveProfileMismatch,
    LandmarkOutOfRange,
    // cohortstats
    EmptySample,
    SampleTooSmall,
    ZeroVariance,
    TooFewGroups,
    UnderAge,
    InvalidSubject,
    EmptyGroup,
    MissingVariable,
    // phantom
    SpecInvalid,
    // pipeline
    EmptyMask,
    InvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `code()` identifies the failure
/// class; `op()` names the operation that raised it when known.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string op = {})
        : std::runtime_error(message), code_(code), op_(std::move(op)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& op() const noexcept { return op_; }

    /// Copy of this error with the operation name filled in (outermost wins).
    Error with_op(std::string op) const {
        return Error(code_, what(), op_.empty() ? std::move(op) : op_);
    }

private:
    ErrorCode code_;
    std::string op_;
};

}  // namespace lineamorph
