#pragma once

#include <stdexcept>
#include <string>

namespace pulsefront {

/// Base class for all pulsefront errors. Carries a short machine-readable
/// kind string so the CLI can map failures onto exit codes.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

// Configuration / input problems (CLI exit code 1).
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error("ConfigError", w) {}
};

// Medium validation.
struct EllipticityViolation : Error {
    explicit EllipticityViolation(const std::string& w) : Error("EllipticityViolation", w) {}
};
struct ZeroMismatch : Error {
    explicit ZeroMismatch(const std::string& w) : Error("ZeroMismatch", w) {}
};
struct NotMonostable : Error {
    explicit NotMonostable(const std::string& w) : Error("NotMonostable", w) {}
};

// Spectral solves.
struct NoPositiveEigenfunction : Error {
    explicit NoPositiveEigenfunction(const std::string& w) : Error("NoPositiveEigenfunction", w) {}
};
struct NonConvergence : Error {
    explicit NonConvergence(const std::string& w) : Error("NonConvergence", w) {}
};
struct MonostabilityViolation : Error {
    explicit MonostabilityViolation(const std::string& w) : Error("MonostabilityViolation", w) {}
};
struct BracketFailure : Error {
    explicit BracketFailure(const std::string& w) : Error("BracketFailure", w) {}
};
struct ProfileTooCoarse : Error {
    explicit ProfileTooCoarse(const std::string& w) : Error("ProfileTooCoarse", w) {}
};

// Time stepping and front tracking.
struct CFLViolation : Error {
    explicit CFLViolation(const std::string& w) : Error("CFLViolation", w) {}
};
struct BlowUp : Error {
    explicit BlowUp(const std::string& w) : Error("BlowUp", w) {}
};
struct MultipleCrossings : Error {
    explicit MultipleCrossings(const std::string& w) : Error("MultipleCrossings", w) {}
};
struct NoCrossing : Error {
    explicit NoCrossing(const std::string& w) : Error("NoCrossing", w) {}
};
struct NoConvergence : Error {
    explicit NoConvergence(const std::string& w) : Error("NoConvergence", w) {}
};
struct SpeedDrift : Error {
    explicit SpeedDrift(const std::string& w) : Error("SpeedDrift", w) {}
};
struct PeriodicityDefect : Error {
    explicit PeriodicityDefect(const std::string& w) : Error("PeriodicityDefect", w) {}
};

// Tail analysis.
struct TailUnderflow : Error {
    explicit TailUnderflow(const std::string& w) : Error("TailUnderflow", w) {}
};
struct NoPlateau : Error {
    explicit NoPlateau(const std::string& w) : Error("NoPlateau", w) {}
};
struct VerificationFailed : Error {
    explicit VerificationFailed(const std::string& w) : Error("VerificationFailed", w) {}
};

// Comparison-function construction and checking.
struct ConditionUnsatisfiable : Error {
    explicit ConditionUnsatisfiable(const std::string& w) : Error("ConditionUnsatisfiable", w) {}
};
struct SignViolation : Error {
    explicit SignViolation(const std::string& w) : Error("SignViolation", w) {}
};
struct SandwichFailure : Error {
    explicit SandwichFailure(const std::string& w) : Error("SandwichFailure", w) {}
};
struct NoAdmissibleLambda : Error {
    explicit NoAdmissibleLambda(const std::string& w) : Error("NoAdmissibleLambda", w) {}
};
struct SandwichBreach : Error {
    explicit SandwichBreach(const std::string& w) : Error("SandwichBreach", w) {}
};
struct NoShiftConvergence : Error {
    explicit NoShiftConvergence(const std::string& w) : Error("NoShiftConvergence", w) {}
};
struct ProfileMismatch : Error {
    explicit ProfileMismatch(const std::string& w) : Error("ProfileMismatch", w) {}
};

} // namespace pulsefront
