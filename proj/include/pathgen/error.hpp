#pragma once

#include <stdexcept>
#include <string>

namespace pathgen {

// Single exception type for all library failures. The CLI maps it to a
// one-line machine-parseable report and a nonzero exit code.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pathgen
