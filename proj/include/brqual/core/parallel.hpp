#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace brqual {

/// Applies fn to every item on a bounded pool of workers. Results keep the
/// input order regardless of scheduling; the first exception thrown by any
/// task is rethrown after all workers stop.
template <typename T, typename F>
auto parallel_map(const std::vector<T>& items, std::size_t workers, F fn)
    -> std::vector<std::invoke_result_t<F&, const T&>> {
    using R = std::invoke_result_t<F&, const T&>;
    std::vector<std::optional<R>> slots(items.size());
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, items.size()));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= items.size()) return;
            try {
                slots[i].emplace(fn(items[i]));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(items.size());
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<R> out;
    out.reserve(items.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace brqual
