#pragma once

#include "aa/core/model.hpp"
#include "aa/util/time.hpp"

#include <deque>
#include <map>
#include <mutex>

namespace aa {

/// Sliding one-minute window per developer.
class RateLimiter {
public:
    explicit RateLimiter(int per_minute) : per_minute_(per_minute) {}

    /// Records the attempt and returns true when it fits in the last 60 seconds.
    bool allow(const NickName& nick, Timestamp now);

private:
    int per_minute_;
    std::mutex mutex_;
    std::map<NickName, std::deque<Timestamp>> recent_;
};

}  // namespace aa
