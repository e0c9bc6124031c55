#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace stokpp {

/// Runs independent replicate jobs on a fixed number of threads.
///
/// Results are written by index, so the output of map() does not depend on
/// the width or on scheduling. The first exception thrown by a job is
/// rethrown on the calling thread after all workers have stopped.
class Executor {
public:
    explicit Executor(unsigned width = 1) : width_(std::max(1u, width)) {}

    unsigned width() const noexcept { return width_; }

    void for_each(std::size_t count, const std::function<void(std::size_t)>& job) const {
        if (width_ == 1 || count < 2) {
            for (std::size_t i = 0; i < count; ++i) job(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        };
        std::vector<std::jthread> pool;
        const auto threads = static_cast<std::size_t>(std::min<std::size_t>(width_, count));
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        pool.clear();
        if (error) std::rethrow_exception(error);
    }

    template <class Result, class Job>
    std::vector<Result> map(std::size_t count, Job&& job) const {
        std::vector<Result> out(count);
        for_each(count, [&](std::size_t i) { out[i] = job(i); });
        return out;
    }

private:
    unsigned width_;
};

} // namespace stokpp
