#pragma once

#include <stdexcept>
#include <string>

namespace rstego {

// Shapes, ranks or geometries that do not line up.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf produced or an undefined numeric quantity requested.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// API misuse: calling an operation outside its preconditions.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Malformed or unsupported file contents.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace rstego
