#pragma once

#include <stdexcept>
#include <string>

namespace outcrop {

// Precondition violations on pipeline inputs (sizes, levels, ranges).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Camera footprint or chip request that cannot be satisfied.
class CameraError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation not allowed in the current session state.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace outcrop
