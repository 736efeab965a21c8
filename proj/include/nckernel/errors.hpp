#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nckernel {

enum class ErrorCategory { input, configuration, numerical, ingestion };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

/// Shape or dimension mismatch between arguments.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorCategory::input, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::configuration, what) {}
};

/// A column whose values are all identical has no median interpoint distance.
class DegenerateScaleError : public ConfigError {
public:
    DegenerateScaleError(const std::string& what, long column)
        : ConfigError(what), column_(column) {}

    long column() const noexcept { return column_; }

private:
    long column_;
};

/// Factorization failure. Carries every diagonal jitter level that was tried.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what, std::vector<double> jitters = {})
        : Error(ErrorCategory::numerical, what), jitters_(std::move(jitters)) {}

    const std::vector<double>& attempted_jitters() const noexcept { return jitters_; }

private:
    std::vector<double> jitters_;
};

class IngestionError : public Error {
public:
    explicit IngestionError(std::vector<std::string> violations)
        : Error(ErrorCategory::ingestion, join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "ingestion failed:";
        for (const auto& item : items) {
            out += "\n  - ";
            out += item;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

}  // namespace nckernel
