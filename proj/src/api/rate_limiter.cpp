#include "aa/api/rate_limiter.hpp"

namespace aa {

bool RateLimiter::allow(const NickName& nick, Timestamp now) {
    std::lock_guard lock(mutex_);
    auto& window = recent_[nick];
    while (!window.empty() && now - window.front() >= Seconds{60}) window.pop_front();
    if (static_cast<int>(window.size()) >= per_minute_) return false;
    window.push_back(now);
    return true;
}

}  // namespace aa
