#include "lagrangeforge/parallel.hpp"

#include <omp.h>

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <vector>

namespace lagrangeforge {

void for_each_index(std::size_t n, Execution exec, const std::function<void(std::size_t)>& body) {
  if (exec == Execution::kSerial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int configure_threads_from_env() {
  const char* raw = std::getenv("LAGRANGEFORGE_THREADS");
  if (raw != nullptr) {
    int n = 0;
    const char* end = raw + std::strlen(raw);
    const auto [ptr, ec] = std::from_chars(raw, end, n);
    if (ec == std::errc() && ptr == end && n > 0) omp_set_num_threads(n);
  }
  return omp_get_max_threads();
}

}  // namespace lagrangeforge
