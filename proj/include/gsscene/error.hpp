#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gsscene {

/// Base of every library error. `kind()` is a stable machine-readable tag
/// used by the CLI error JSON and the HTTP service.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define GSSCENE_DEFINE_ERROR(Name)                                              \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& message) : Error(#Name, message) {}   \
    }

GSSCENE_DEFINE_ERROR(MalformedDocument);
GSSCENE_DEFINE_ERROR(InvariantViolation);
GSSCENE_DEFINE_ERROR(PreconditionError);
GSSCENE_DEFINE_ERROR(EmptyCloud);
GSSCENE_DEFINE_ERROR(FileNotFound);
GSSCENE_DEFINE_ERROR(UnknownLayout);
GSSCENE_DEFINE_ERROR(ValueOutOfDomain);
GSSCENE_DEFINE_ERROR(NonFiniteInput);
GSSCENE_DEFINE_ERROR(NonPositiveThreshold);
GSSCENE_DEFINE_ERROR(LengthMismatch);
GSSCENE_DEFINE_ERROR(NonUnitQuaternion);
GSSCENE_DEFINE_ERROR(EndpointUnavailable);
GSSCENE_DEFINE_ERROR(ResponseNotParseable);
GSSCENE_DEFINE_ERROR(InvalidGuideAfterStep);
GSSCENE_DEFINE_ERROR(UnknownObject);

#undef GSSCENE_DEFINE_ERROR

/// Missing or wrong-typed field. `path()` is a JSON-pointer-like location,
/// e.g. "objects/1/transform/whl".
class SchemaViolation : public Error {
public:
    SchemaViolation(std::string path, const std::string& message)
        : Error("SchemaViolation", path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace gsscene
