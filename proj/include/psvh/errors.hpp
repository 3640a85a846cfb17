#pragma once

#include <stdexcept>
#include <string>

namespace psvh {

// Bad user-supplied configuration or flags. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Missing, malformed, or unwritable files. CLI exit code 3.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical check exceeded its tolerance. CLI exit code 4.
struct ToleranceError : std::runtime_error {
    explicit ToleranceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace psvh
