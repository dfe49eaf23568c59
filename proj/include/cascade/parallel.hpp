#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cascade
{
    /// 0 means one worker per hardware thread.
    inline unsigned resolve_threads(unsigned requested)
    {
        if (requested > 0)
        {
            return requested;
        }
        return std::max(1U, std::thread::hardware_concurrency());
    }

    /// Runs body(i) for i in [0, count) on a small worker pool. Results must be
    /// written to per-index slots; the first exception is rethrown.
    template <class Body>
    void parallel_for(std::size_t count, unsigned threads, Body &&body)
    {
        const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));
        if (workers <= 1)
        {
            for (std::size_t i = 0; i < count; ++i)
            {
                body(i);
            }
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
        {
            pool.emplace_back([&]
                              {
                for (std::size_t i = next++; i < count; i = next++)
                {
                    try
                    {
                        body(i);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                        {
                            failure = std::current_exception();
                        }
                    }
                } });
        }
        for (auto &t : pool)
        {
            t.join();
        }
        if (failure)
        {
            std::rethrow_exception(failure);
        }
    }
} // namespace cascade
