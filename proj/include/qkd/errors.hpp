#pragma once

#include <stdexcept>

namespace qkd {

// Bad user input: invalid spec, malformed config, inconsistent stats. CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A numeric routine failed to converge or produced an unusable value. CLI exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qkd
