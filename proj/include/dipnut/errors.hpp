#pragma once

#include <stdexcept>

namespace dipnut {

// invalid or inconsistent run configuration (CLI exit code 2)
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// parameters outside the model's validity domain (CLI exit code 3)
struct ValidityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dipnut
