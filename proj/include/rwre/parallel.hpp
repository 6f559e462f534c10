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

namespace rwre
{

//---------------------------------------------------------------------------//
/*!
 * Evaluates f(0..n-1) on up to `workers` threads and returns the results in
 * index order.
 *
 * Threads pull the next unclaimed index from a shared counter, so an idle
 * worker always picks up remaining work. Because every result lands in its
 * own slot and callers reduce in index order, output never depends on the
 * worker count or on scheduling.
 */
template<class F>
auto parallel_map(std::size_t n, unsigned workers, F&& f)
    -> std::vector<std::invoke_result_t<F&, std::size_t>>
{
    using R = std::invoke_result_t<F&, std::size_t>;
    std::vector<std::optional<R>> slots(n);
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto run = [&] {
        while (true)
        {
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n)
                return;
            try
            {
                slots[i].emplace(f(i));
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };

    if (workers == 1)
    {
        run();
    }
    else
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(run);
    }
    if (error)
        std::rethrow_exception(error);

    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots)
        out.push_back(std::move(*s));
    return out;
}

}  // namespace rwre
