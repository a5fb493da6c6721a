// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace beampred
{

// Worker count: BEAMPRED_THREADS if set to a positive integer, otherwise the
// hardware concurrency.
inline std::size_t thread_count()
{
    if (const char *env = std::getenv("BEAMPRED_THREADS"))
    {
        try
        {
            const long v = std::stol(env);
            if (v > 0)
                return static_cast<std::size_t>(v);
        }
        catch (const std::exception &)
        {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Calls fn(i) for i in [0, n) on up to `threads` workers, interleaved. The
// first exception thrown by any call is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t n, Fn &&fn, std::size_t threads = thread_count())
{
    threads = std::min(threads, n);
    if (threads <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += threads)
            {
                try
                {
                    fn(i);
                }
                catch (...)
                {
                    std::lock_guard lock(mu);
                    if (!error)
                        error = std::current_exception();
                    return;
                }
            }
        });
    for (auto &t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

} // namespace beampred
