#pragma once

#include <stdexcept>
#include <string>

namespace unitax {

// Malformed or inconsistent input data (files, label spaces, score ranges).
// The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace unitax
