#include "branchsim/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace branchsim {

int configured_workers(int cap) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  int n = hw;
  if (const char* env = std::getenv("BRANCHSIM_THREADS")) {
    try {
      n = std::max(1, std::stoi(env));
    } catch (...) {
      n = hw;
    }
  }
  if (cap > 0) n = std::min(n, cap);
  return std::min(n, 64);
}

void parallel_for_indices(std::size_t n, const std::function<void(std::size_t)>& body,
                          int max_workers) {
  if (n == 0) return;
  const int workers = std::min<std::size_t>(n, std::max(1, configured_workers(max_workers)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = static_cast<std::size_t>(w); i < n;
             i += static_cast<std::size_t>(workers))
          body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace branchsim
