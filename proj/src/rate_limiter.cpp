#include "hwdock/rate_limiter.hpp"

namespace hwdock {

RateLimiter::RateLimiter(RateBudget budget, std::shared_ptr<Clock> clock)
    : mBudget(budget)
    , mClock(std::move(clock))
{
}

void RateLimiter::purge(TimePoint now) const
{
    while (!mGrants.empty() && mGrants.front() + mBudget.perWindow <= now)
        mGrants.pop_front();
}

std::optional<Duration> RateLimiter::try_acquire()
{
    std::lock_guard lock(mMutex);
    auto            now = mClock->now();
    purge(now);
    if (mGrants.size() >= mBudget.maxPulls) {
        if (mGrants.empty())
            return Duration(mBudget.perWindow);
        return mGrants.front() + mBudget.perWindow - now;
    }
    mGrants.push_back(now);
    ++mTotal;
    return std::nullopt;
}

std::size_t RateLimiter::granted() const
{
    std::lock_guard lock(mMutex);
    return mTotal;
}

std::size_t RateLimiter::in_window() const
{
    std::lock_guard lock(mMutex);
    purge(mClock->now());
    return mGrants.size();
}

} // namespace hwdock
