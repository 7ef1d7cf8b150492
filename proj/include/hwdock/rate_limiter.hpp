#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>

#include "clock.hpp"

namespace hwdock {

/// The public hub's anonymous limit: 100 pulls per 6 hours.
struct RateBudget {
    std::size_t          maxPulls = 100;
    std::chrono::seconds perWindow{6 * 3600};
};

/// Sliding-window budget shared by every client that talks to one registry.
class RateLimiter {
public:
    RateLimiter(RateBudget budget, std::shared_ptr<Clock> clock);

    /// Grants one unit, or returns how long until the next unit frees up.
    std::optional<Duration> try_acquire();

    std::size_t       granted() const;
    std::size_t       in_window() const;
    const RateBudget& budget() const { return mBudget; }
    Clock&            clock() { return *mClock; }

private:
    void purge(TimePoint now) const;

    RateBudget                    mBudget;
    std::shared_ptr<Clock>        mClock;
    mutable std::mutex            mMutex;
    mutable std::deque<TimePoint> mGrants;
    std::size_t                   mTotal = 0;
};

} // namespace hwdock
