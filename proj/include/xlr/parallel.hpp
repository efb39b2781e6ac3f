#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace xlr {

/// Runs body(i) for i in [0, n) across OpenMP threads (serially when built
/// without OpenMP). An exception thrown by any iteration is rethrown on the
/// calling thread after the loop; the lowest failing index wins.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

/// Thread count the parallel kernels will use.
int parallel_threads() noexcept;

} // namespace xlr
