#ifndef DRC_ERRORS_HPP
#define DRC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace drc {

// Base class for all toolkit errors so callers can catch drc::Error wholesale.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define DRC_DEFINE_ERROR(NAME)                                      \
    struct NAME : Error {                                           \
        explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
    }

// Configuration / geometry
DRC_DEFINE_ERROR(ConfigError);
DRC_DEFINE_ERROR(LambDickeViolation);
DRC_DEFINE_ERROR(IndexAboveTrapDepth);

// Linear algebra / state bookkeeping
DRC_DEFINE_ERROR(DimensionMismatch);
DRC_DEFINE_ERROR(TruncationOverflow);

// Integration / steady state
DRC_DEFINE_ERROR(StepTooLarge);
DRC_DEFINE_ERROR(NonUniqueSteadyState);
DRC_DEFINE_ERROR(SingularBalanceMatrix);
DRC_DEFINE_ERROR(NoConvergence);

// Spectroscopy / signal chain
DRC_DEFINE_ERROR(NonPhysicalSidebands);
DRC_DEFINE_ERROR(ModulationOverflow);
DRC_DEFINE_ERROR(WindowTooLong);
DRC_DEFINE_ERROR(GridMismatch);
DRC_DEFINE_ERROR(GridTooCoarse);

// Fitting
DRC_DEFINE_ERROR(FitDiverged);
DRC_DEFINE_ERROR(SingularNormalMatrix);
DRC_DEFINE_ERROR(BoundsViolation);

#undef DRC_DEFINE_ERROR

}  // namespace drc

#endif
