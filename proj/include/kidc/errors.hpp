#pragma once

#include <stdexcept>
#include <string>

namespace kidc {

// Rejected input: bad shapes, malformed files, invalid configuration.
// The CLI maps this to exit code 1.
class InvalidInput : public std::runtime_error {
public:
    explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// Failure while a run is in flight (non-finite loss, I/O mid-training).
// The CLI maps this to exit code 2.
class RunFailure : public std::runtime_error {
public:
    explicit RunFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kidc
