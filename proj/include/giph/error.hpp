#pragma once

#include <stdexcept>
#include <string>

namespace giph {

/// Base exception for every recoverable failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace giph
