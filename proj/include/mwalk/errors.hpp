#pragma once

#include <stdexcept>
#include <string>

namespace mwalk {

// Configuration / precondition violations. The CLI maps these to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Hard numerical failures (non-finite state, degenerate inputs discovered at
// run time). The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mwalk
