#pragma once

#include <stdexcept>
#include <string>

namespace perfhom {

/// Bad configuration: unknown key, type error, range violation. Exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: solver breakdown, indefinite operator, blowup. Exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem failure, always carries the offending path. Exit code 4.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace perfhom
