#pragma once

#include <stdexcept>
#include <string>

namespace rotstar {

/// Base class of every error thrown by the library. `kind()` is a stable
/// identifier used in CLI error reports.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define ROTSTAR_DEFINE_ERROR(Name)                                                  \
    class Name : public Error {                                                     \
    public:                                                                         \
        explicit Name(const std::string& what) : Error(#Name, what) {}              \
    };

ROTSTAR_DEFINE_ERROR(InvalidArgument)
ROTSTAR_DEFINE_ERROR(DomainError)
ROTSTAR_DEFINE_ERROR(NoZeroFound)
ROTSTAR_DEFINE_ERROR(StepFailure)
ROTSTAR_DEFINE_ERROR(SingularPoint)
ROTSTAR_DEFINE_ERROR(DivergentAxisIntegral)
ROTSTAR_DEFINE_ERROR(NoConvergence)
ROTSTAR_DEFINE_ERROR(NonConvergence)
ROTSTAR_DEFINE_ERROR(SingularLinearization)
ROTSTAR_DEFINE_ERROR(NoBracket)
ROTSTAR_DEFINE_ERROR(GammaFourThirds)
ROTSTAR_DEFINE_ERROR(IOError)

#undef ROTSTAR_DEFINE_ERROR

/// Invalid run configuration; `field` is the offending "section.key".
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error("ConfigError", what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Free boundary search failed at one polar direction.
class NoSignChange : public Error {
public:
    NoSignChange(double zeta, const std::string& what)
        : Error("NoSignChange", what), zeta_(zeta) {}
    double zeta() const noexcept { return zeta_; }

private:
    double zeta_;
};

/// Wraps a failure inside a continuation sweep with the rotation parameter
/// at which it happened.
class SolverError : public Error {
public:
    SolverError(std::string inner_kind, double beta, const std::string& what)
        : Error("SolverError", what), inner_kind_(std::move(inner_kind)), beta_(beta) {}
    const std::string& inner_kind() const noexcept { return inner_kind_; }
    double beta() const noexcept { return beta_; }

private:
    std::string inner_kind_;
    double beta_;
};

}  // namespace rotstar
