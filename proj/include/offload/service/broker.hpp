#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "offload/wire/wire.hpp"

namespace offload::service {

// True when `topic` matches `pattern`; a '+' pattern segment matches
// exactly one topic segment (e.g. "client/+/experience/+/v1").
bool topic_matches(std::string_view pattern, std::string_view topic);

// In-process publish/subscribe hub. Publishing copies the frame into the
// queue of every matching subscription — exactly once each, in publish
// order, so per-topic delivery is FIFO. A publish matching no
// subscription is counted as dropped, never raised. Thread-safe.
class Broker {
public:
    using SubscriberId = uint64_t;

    SubscriberId subscribe(std::string pattern);
    void unsubscribe(SubscriberId id);

    // Returns how many subscribers received the frame.
    size_t publish(const wire::Frame& frame);

    // FIFO pop of the subscriber's next pending frame.
    std::optional<wire::Frame> poll(SubscriberId id);
    size_t pending(SubscriberId id) const;

    uint64_t published() const;
    uint64_t delivered() const;
    uint64_t dropped() const;

private:
    struct Subscription {
        std::string pattern;
        std::deque<wire::Frame> queue;
    };

    mutable std::mutex mu_;
    std::map<SubscriberId, Subscription> subs_;
    SubscriberId next_id_ = 1;
    uint64_t published_ = 0;
    uint64_t delivered_ = 0;
    uint64_t dropped_ = 0;
};

}  // namespace offload::service
