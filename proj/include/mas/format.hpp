#pragma once

#include <string>

namespace mas {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double x);

} // namespace mas
