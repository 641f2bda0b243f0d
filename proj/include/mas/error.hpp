#pragma once

#include <stdexcept>
#include <string>

namespace mas {

/// Domain error raised by every library operation on a contract violation.
/// The CLI maps it to exit code 1 and a JSON error object on stderr.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mas
