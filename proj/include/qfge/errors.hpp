#pragma once

#include <stdexcept>
#include <string>

namespace qfge {

// Data/file problems (bad magic, truncation, checksum). CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated module contract (unsnapped weights, infeasible scale, ...). CLI exit code 4.
struct InvariantError : std::runtime_error {
    explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qfge
