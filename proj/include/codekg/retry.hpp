#pragma once

#include <chrono>
#include <thread>
#include <utility>

#include "codekg/error.hpp"

namespace codekg {

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
};

// Calls fn until it succeeds, retrying NetworkError and RateLimited with
// exponential backoff. The last error is rethrown once attempts run out.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  auto delay = policy.base_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const NetworkError&) {
      if (attempt >= policy.max_attempts) throw;
    } catch (const RateLimited&) {
      if (attempt >= policy.max_attempts) throw;
    }
    std::this_thread::sleep_for(delay);
    delay = std::chrono::milliseconds(
        static_cast<long long>(static_cast<double>(delay.count()) * policy.multiplier));
  }
}

}  // namespace codekg
