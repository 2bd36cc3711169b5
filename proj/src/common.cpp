#include "titan/common.hpp"
#include "titan/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>

namespace titan {

std::size_t thread_budget() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("TITAN_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) n = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    return n;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min(count, thread_budget());
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace titan
