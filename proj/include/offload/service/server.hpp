#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "offload/agents/agents.hpp"
#include "offload/service/broker.hpp"
#include "offload/types.hpp"
#include "offload/wire/wire.hpp"

namespace offload::service {

struct LearnerConfig {
    agents::AcConfig ac;
    agents::DqnConfig dqn;
};

// One server-side trainer for one (device, model kind) stream. Keeps a
// replica agent and processes that device's experiences strictly in
// sequence order: out-of-order arrivals wait in a gap buffer, duplicates
// (and misrouted experiences) are counted and dropped. Conservation
// holds exactly: experiences offered = processed + buffered + dropped.
class ServerLearner {
public:
    ServerLearner(uint32_t device_id, ModelKind kind, const LearnerConfig& cfg);

    // Consumes one experience. Returns one weights payload per training
    // step actually performed — closing a gap can release several.
    // model_version increments exactly once per processed experience.
    std::vector<wire::WeightsPayload> on_experience(const Experience& e);

    // Replaces the replica's weights and restarts its optimizer (the
    // device-initiated upload path). Throws on kind/size mismatch.
    void install_model(const ModelParameters& p);

    uint32_t device_id() const { return device_id_; }
    ModelKind kind() const { return kind_; }
    uint64_t model_version() const { return version_; }
    uint64_t offered() const { return offered_; }
    uint64_t processed() const { return processed_; }
    size_t buffered() const { return pending_.size(); }
    uint64_t dropped() const { return dropped_; }
    uint64_t misrouted() const { return misrouted_; }
    uint64_t next_expected_sequence() const { return expected_seq_; }

    ModelParameters parameters() const;

private:
    wire::WeightsPayload train_one(const Experience& e);

    uint32_t device_id_;
    ModelKind kind_;
    std::variant<agents::AcAgent, agents::DqnAgent> replica_;
    std::map<uint64_t, Experience> pending_;  // sequence -> waiting experience
    uint64_t expected_seq_ = 0;
    uint64_t version_ = 0;
    uint64_t offered_ = 0;
    uint64_t processed_ = 0;
    uint64_t dropped_ = 0;     // duplicates + misrouted
    uint64_t misrouted_ = 0;   // subset of dropped_
};

// Reassembles chunked model uploads, keyed by (device, kind, upload_id),
// with an inactivity timeout. A completed assembly is validated (blob
// decodes as a weights payload of the right kind and parameter count)
// before it is handed over.
class ModelReceiver {
public:
    explicit ModelReceiver(double timeout_s = 30.0);

    struct ChunkOutcome {
        wire::AckStatus status = wire::AckStatus::incomplete;
        std::optional<ModelParameters> model;  // set only when status == ok
    };
    ChunkOutcome on_chunk(const wire::ModelChunkPayload& c, double now_s);

    // Reclaims assemblies idle past the timeout; returns one expired ack
    // per reclaimed buffer.
    std::vector<wire::ChunkAckPayload> expire(double now_s);

    size_t active() const { return buffers_.size(); }

private:
    struct Key {
        uint32_t device_id;
        uint8_t kind;
        uint64_t upload_id;
        auto operator<=>(const Key&) const = default;
    };
    struct Entry {
        wire::ChunkAssembler assembler;
        double last_activity_s = 0.0;
    };

    std::map<Key, Entry> buffers_;
    double timeout_s_;
};

struct ServerConfig {
    LearnerConfig learner;
    double upload_timeout_s = 30.0;
    // Cap on learners stepping at once in pump_concurrent (0 = no cap).
    int max_concurrent_learners = 0;
};

// Routes server-side traffic: subscribes to every device's experience and
// upload topics, creates one ServerLearner per (device, kind) on first
// sight, feeds the ModelReceiver, and publishes produced weights (and
// upload acks) back through the broker on server/{D}/weights/{M}/v1.
class ServerManager {
public:
    ServerManager(Broker& broker, ServerConfig cfg);

    // Drains everything pending, sequentially; returns frames consumed.
    size_t pump(double now_s);

    // Same per-topic results as pump(), with distinct (device, kind)
    // learners stepping in parallel. Weights publication happens in
    // learner-key order after the parallel section, so each weights topic
    // still carries exactly the sequential stream.
    size_t pump_concurrent(double now_s);

    ServerLearner* find_learner(uint32_t device_id, ModelKind kind);
    size_t learner_count() const { return learners_.size(); }

    // Calls fn(learner) for every learner, in key order.
    template <typename Fn>
    void for_each_learner(Fn&& fn) const {
        for (const auto& [key, l] : learners_) fn(*l);
    }

    uint64_t undecodable() const { return undecodable_; }
    uint64_t uploads_completed() const { return uploads_completed_; }

private:
    struct LearnerKey {
        uint32_t device_id;
        uint8_t kind;
        auto operator<=>(const LearnerKey&) const = default;
    };

    ServerLearner& learner_for(uint32_t device_id, ModelKind kind);
    void publish_weights(const wire::WeightsPayload& w);
    void publish_ack(uint32_t device_id, ModelKind kind, uint64_t upload_id,
                     wire::AckStatus status);
    void handle_upload_frame(const wire::Frame& f, double now_s);
    struct RoutedExperience {
        LearnerKey key;
        Experience exp;
    };
    // Topic decides the learner; undecodable frames are counted, dropped.
    std::optional<RoutedExperience> route_experience(const wire::Frame& f);
    void drain(Broker::SubscriberId sub, std::vector<wire::Frame>& out);

    Broker& broker_;
    ServerConfig cfg_;
    Broker::SubscriberId experience_sub_;
    Broker::SubscriberId upload_sub_;
    std::map<LearnerKey, std::unique_ptr<ServerLearner>> learners_;
    ModelReceiver receiver_;
    uint64_t undecodable_ = 0;
    uint64_t uploads_completed_ = 0;
};

}  // namespace offload::service
