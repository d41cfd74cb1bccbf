#pragma once

#include <stdexcept>
#include <string>

namespace lsic {

// Base for every error the library raises. `kind()` is the machine-parseable
// tag the CLI prints on failure.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class ActionError : public Error {
public:
    explicit ActionError(const std::string& what) : Error("action", what) {}
};

class SizeError : public Error {
public:
    explicit SizeError(const std::string& what) : Error("size", what) {}
};

class ChainError : public Error {
public:
    explicit ChainError(const std::string& what) : Error("chain", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

class ComparisonError : public Error {
public:
    explicit ComparisonError(const std::string& what) : Error("comparison", what) {}
};

}  // namespace lsic
