#include "offload/service/broker.hpp"

#include <stdexcept>

namespace offload::service {

bool topic_matches(std::string_view pattern, std::string_view topic) {
    while (true) {
        const size_t ps = pattern.find('/');
        const size_t ts = topic.find('/');
        const std::string_view pseg = pattern.substr(0, ps);
        const std::string_view tseg = topic.substr(0, ts);
        if (pseg != "+" && pseg != tseg) return false;
        const bool p_end = ps == std::string_view::npos;
        const bool t_end = ts == std::string_view::npos;
        if (p_end || t_end) return p_end && t_end;
        pattern.remove_prefix(ps + 1);
        topic.remove_prefix(ts + 1);
    }
}

Broker::SubscriberId Broker::subscribe(std::string pattern) {
    if (pattern.empty()) throw std::invalid_argument("broker: empty subscription pattern");
    std::lock_guard lock(mu_);
    const SubscriberId id = next_id_++;
    subs_[id].pattern = std::move(pattern);
    return id;
}

void Broker::unsubscribe(SubscriberId id) {
    std::lock_guard lock(mu_);
    subs_.erase(id);
}

size_t Broker::publish(const wire::Frame& frame) {
    std::lock_guard lock(mu_);
    ++published_;
    size_t receivers = 0;
    for (auto& [id, sub] : subs_) {
        if (topic_matches(sub.pattern, frame.topic)) {
            sub.queue.push_back(frame);
            ++receivers;
        }
    }
    if (receivers == 0)
        ++dropped_;
    else
        delivered_ += receivers;
    return receivers;
}

std::optional<wire::Frame> Broker::poll(SubscriberId id) {
    std::lock_guard lock(mu_);
    auto it = subs_.find(id);
    if (it == subs_.end() || it->second.queue.empty()) return std::nullopt;
    wire::Frame f = std::move(it->second.queue.front());
    it->second.queue.pop_front();
    return f;
}

size_t Broker::pending(SubscriberId id) const {
    std::lock_guard lock(mu_);
    auto it = subs_.find(id);
    return it == subs_.end() ? 0 : it->second.queue.size();
}

uint64_t Broker::published() const {
    std::lock_guard lock(mu_);
    return published_;
}

uint64_t Broker::delivered() const {
    std::lock_guard lock(mu_);
    return delivered_;
}

uint64_t Broker::dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
}

}  // namespace offload::service
