#pragma once

#include <cstddef>
#include <functional>

namespace lagrangeforge {

enum class Execution { kSerial, kParallel };

// Calls body(i) for i in [0, n). Exceptions are captured per index and the one
// with the lowest index is rethrown after all iterations finish, so serial and
// parallel runs report the same error.
void for_each_index(std::size_t n, Execution exec, const std::function<void(std::size_t)>& body);

// Applies LAGRANGEFORGE_THREADS (a positive integer) as the OpenMP thread cap.
// Returns the resulting maximum thread count.
int configure_threads_from_env();

}  // namespace lagrangeforge
