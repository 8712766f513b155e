#pragma once

#include <stdexcept>
#include <string>

namespace contagion {

// Parameter or config input that violates a model invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite values, non-convergence, or a violated numerical post-condition.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Files that cannot be opened, read, or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace contagion
