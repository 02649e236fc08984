#pragma once

#include <stdexcept>
#include <string>

namespace plap {

/// Coarse failure class; the CLI maps it onto its exit code.
enum class ErrorCategory { config, solver, property, geometry, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& name, const std::string& detail)
        : std::runtime_error(name + ": " + detail), category_(category), detail_(detail) {}

    ErrorCategory category() const noexcept { return category_; }
    /// Message without the error-name prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCategory category_;
    std::string detail_;
};

#define PLAP_DEFINE_ERROR(Name, Category)                                   \
    class Name : public Error {                                             \
    public:                                                                 \
        explicit Name(const std::string& what)                              \
            : Error(ErrorCategory::Category, #Name, what)                   \
        {}                                                                  \
    }

PLAP_DEFINE_ERROR(InvalidArgument, config);
PLAP_DEFINE_ERROR(ConfigError, config);
PLAP_DEFINE_ERROR(SingularPoint, numeric);
PLAP_DEFINE_ERROR(InequalityViolation, property);
PLAP_DEFINE_ERROR(MeshGenerationFailure, geometry);
PLAP_DEFINE_ERROR(PartitionFailure, geometry);
PLAP_DEFINE_ERROR(MeshMismatch, geometry);
PLAP_DEFINE_ERROR(NewtonDivergence, solver);
PLAP_DEFINE_ERROR(SingularTangent, solver);
PLAP_DEFINE_ERROR(AliasingError, config);
PLAP_DEFINE_ERROR(FactorizationFailure, numeric);
PLAP_DEFINE_ERROR(IllConditioned, numeric);
PLAP_DEFINE_ERROR(ParseError, config);

#undef PLAP_DEFINE_ERROR

} // namespace plap
