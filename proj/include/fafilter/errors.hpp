#pragma once

#include <stdexcept>

namespace fafilter {

// Error categories map 1:1 onto CLI exit codes (see commands.hpp):
// ConfigError -> 2, IoError -> 3, DataError -> 4.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fafilter
