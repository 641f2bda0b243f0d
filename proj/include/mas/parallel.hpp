#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>

namespace mas {

/// Caps the OpenMP team size used by every parallel kernel. threads >= 1.
void set_threads(int threads);
int max_threads();

/// OpenMP loop over [0, n). Exceptions thrown by `body` are captured and the
/// one from the smallest index is rethrown after the loop, so the error a
/// caller sees does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, Body&& body)
{
    std::exception_ptr error;
    std::size_t error_index = std::numeric_limits<std::size_t>::max();
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(mas_parallel_for_error)
            {
                if (static_cast<std::size_t>(i) < error_index) {
                    error_index = static_cast<std::size_t>(i);
                    error = std::current_exception();
                }
            }
        }
    }
    if (error) std::rethrow_exception(error);
}

} // namespace mas
