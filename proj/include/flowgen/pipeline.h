#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace flowgen {

// Apply `fn` to every element of `items`, using up to `threads` worker
// threads, and return the results in input order.  Each output slot is
// computed independently of thread scheduling, so the result is identical
// for any thread count.  The first exception thrown by a worker is rethrown
// after all workers finish.
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& items, unsigned threads, Fn fn)
    -> std::vector<decltype(fn(items[0]))> {
    using Out = decltype(fn(items[0]));
    std::vector<Out> results(items.size());
    if (items.empty()) return results;
    if (threads <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i]);
        return results;
    }

    std::size_t worker_count =
        std::min<std::size_t>(threads, items.size());
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(worker_count);
    workers.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < items.size(); i += worker_count)
                    results[i] = fn(items[i]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

}  // namespace flowgen
