#pragma once

#include <chrono>
#include <mutex>
#include <thread>

namespace hwdock {

using Duration  = std::chrono::nanoseconds;
using TimePoint = std::chrono::time_point<std::chrono::system_clock, Duration>;

/// Wall clock plus sleep, injectable so rate budgets and retry backoff can
/// be tested without waiting.
class Clock {
public:
    virtual ~Clock() = default;

    virtual TimePoint now() const            = 0;
    virtual void      sleep_for(Duration d)  = 0;
};

class SystemClock : public Clock {
public:
    TimePoint now() const override { return std::chrono::time_point_cast<Duration>(std::chrono::system_clock::now()); }
    void      sleep_for(Duration d) override { std::this_thread::sleep_for(d); }
};

/// Time only moves through advance() and sleep_for().
class VirtualClock : public Clock {
public:
    explicit VirtualClock(TimePoint start = TimePoint{})
        : mNow(start)
    {
    }

    TimePoint now() const override
    {
        std::lock_guard lock(mMutex);
        return mNow;
    }

    void sleep_for(Duration d) override
    {
        std::lock_guard lock(mMutex);
        mNow += d;
        mSlept += d;
    }

    void advance(Duration d)
    {
        std::lock_guard lock(mMutex);
        mNow += d;
    }

    Duration total_slept() const
    {
        std::lock_guard lock(mMutex);
        return mSlept;
    }

private:
    mutable std::mutex mMutex;
    TimePoint          mNow;
    Duration           mSlept{0};
};

} // namespace hwdock
