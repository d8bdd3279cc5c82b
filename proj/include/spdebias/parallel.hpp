#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace spdebias {

/// Runs body(k) for k in [0, n). Parallel mode uses an OpenMP loop; the first
/// exception (by index) is rethrown after the loop in either mode.
template <typename Body>
void for_each_index(std::size_t n, bool parallel, Body&& body) {
  if (!parallel) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long k = 0; k < count; ++k) {
    try {
      body(static_cast<std::size_t>(k));
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace spdebias
