#pragma once

#include <chrono>
#include <mutex>

namespace dxq::node {

using TimePoint = std::chrono::steady_clock::time_point;

class Clock {
public:
    virtual ~Clock() = default;
    virtual TimePoint now() const = 0;
};

class SteadyClock final : public Clock {
public:
    TimePoint now() const override { return std::chrono::steady_clock::now(); }
};

/// Time only moves when told to.
class ManualClock final : public Clock {
public:
    TimePoint now() const override
    {
        std::lock_guard lock(mutex_);
        return now_;
    }

    void advance(std::chrono::steady_clock::duration d)
    {
        std::lock_guard lock(mutex_);
        now_ += d;
    }

private:
    mutable std::mutex mutex_;
    TimePoint now_{};
};

} // namespace dxq::node
