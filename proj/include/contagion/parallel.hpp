#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace contagion {

// Static fan-out over [0, n). Each task writes only to its own index, so
// results are identical for any thread count; the first failing index wins
// when rethrowing, keeping error reporting order-independent too.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const size_t workers = std::min<size_t>(static_cast<size_t>(threads), n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<size_t> next{0};
    auto body = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    for (size_t i = 0; i < n; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);
}

} // namespace contagion
