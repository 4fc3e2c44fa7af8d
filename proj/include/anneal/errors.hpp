#pragma once

#include <stdexcept>
#include <string>

namespace anneal {

// Invalid user input: malformed files, out-of-range parameters, bad grids.
// The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical run could not be completed (e.g. an unstable integration step).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace anneal
