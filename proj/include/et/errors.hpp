#pragma once

#include <stdexcept>
#include <string>

namespace et {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid problem description or input file.
struct ConfigError : Error {
    using Error::Error;
};

// Mismatched depths, alphabets or shapes between otherwise valid objects.
struct DimensionError : Error {
    using Error::Error;
};

// A configured resource cap (state count, orbit count) was exceeded.
struct ResourceError : Error {
    using Error::Error;
};

// Solver could not reach the required residuals.
struct NumericalError : Error {
    using Error::Error;
};

}  // namespace et
