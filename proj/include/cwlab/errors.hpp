#pragma once

#include <stdexcept>
#include <string>

namespace cwlab {

// Error taxonomy shared by the library and the CLI.
// The CLI maps these onto process exit codes:
//   domain_error -> 2 (invalid arguments), infeasible_error -> 3,
//   capacity_error -> 4.

// Invalid inputs: out-of-range parameters, malformed values, precondition
// violations that a caller could have checked.
class domain_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Structurally valid inputs for which the requested computation has no
// defined answer: empty marked sets, guarantee-unavailable parameter ranges,
// constraint-violating planner inputs.
class infeasible_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Resource ceilings: dense state too large, enumeration too large, no free
// memory cell, allocator free-fraction contract violated.
class capacity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cwlab
