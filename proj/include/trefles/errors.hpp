#pragma once

#include <stdexcept>
#include <string>

namespace trefles {

struct NonPSD : std::runtime_error {
    explicit NonPSD(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateTrace : std::runtime_error {
    explicit DegenerateTrace(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalFailure : std::runtime_error {
    explicit NumericalFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateLabels : std::runtime_error {
    explicit DegenerateLabels(const std::string& msg) : std::runtime_error(msg) {}
};

struct InfeasibleStratification : std::runtime_error {
    explicit InfeasibleStratification(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateDiagonal : std::runtime_error {
    explicit DegenerateDiagonal(const std::string& msg) : std::runtime_error(msg) {}
};

struct BadClusterCount : std::runtime_error {
    explicit BadClusterCount(const std::string& msg) : std::runtime_error(msg) {}
};

// File loading / serialization errors.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct VersionMismatch : std::runtime_error {
    explicit VersionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace trefles
