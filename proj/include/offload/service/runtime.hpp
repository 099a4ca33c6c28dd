#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "offload/agents/agents.hpp"
#include "offload/env/env.hpp"
#include "offload/service/broker.hpp"
#include "offload/service/server.hpp"
#include "offload/taskgen/taskgen.hpp"
#include "offload/types.hpp"
#include "offload/wire/wire.hpp"

namespace offload::service {

// Simulated transport between device and server (the experience/weights
// path). Zero everything = instantaneous, which is the configuration the
// local/remote equivalence property assumes.
struct ServiceLinkConfig {
    double client_to_server_ms = 0.0;
    double server_to_client_ms = 0.0;
    // 0 = no per-byte serialization delay; otherwise frame bytes are
    // clocked through at this rate.
    double throughput_mbps = 0.0;
};

// One-way FIFO link: a frame becomes visible latency + serialization
// after it was sent, and never before an earlier frame (stream order).
class DelayedChannel {
public:
    DelayedChannel(double latency_ms, double throughput_mbps);

    void push(wire::Frame frame, double send_time_s);
    std::vector<wire::Frame> pop_due(double now_s);

    size_t in_flight() const { return q_.size(); }
    uint64_t frames_carried() const { return frames_; }
    uint64_t bytes_carried() const { return bytes_; }

private:
    double latency_s_;
    double throughput_mbps_;
    std::deque<std::pair<double, wire::Frame>> q_;  // (deliver_at, frame)
    double last_delivery_s_ = 0.0;
    uint64_t frames_ = 0;
    uint64_t bytes_ = 0;
};

// One simulated deployment: broker + server manager + delayed links.
// Client sends enter the uplink; advance(now) delivers what is due,
// pumps the server, and stages produced weights/acks on the per-device
// downlinks.
class Session {
public:
    Session(ServerConfig server_cfg, ServiceLinkConfig link_cfg,
            bool concurrent_pump = false);

    void client_send(const wire::Frame& f, double now_s);
    std::vector<wire::Frame> client_receive(uint32_t device_id, ModelKind kind, double now_s);
    void advance(double now_s);

    Broker& broker() { return broker_; }
    ServerManager& manager() { return manager_; }
    uint64_t uplink_bytes() const { return uplink_.bytes_carried(); }

private:
    DelayedChannel& downlink_for(uint32_t device_id, ModelKind kind);

    Broker broker_;
    ServerManager manager_;
    ServiceLinkConfig link_cfg_;
    bool concurrent_pump_;
    DelayedChannel uplink_;
    std::map<std::pair<uint32_t, uint8_t>, DelayedChannel> downlinks_;
    Broker::SubscriberId downlink_tap_;  // server/+/weights/+/v1
};

enum class TrainingMode { local, remote };

// Per-step compute/energy pricing of the training plane itself. Local
// steps charge the train_* pair, remote steps the publish_* pair; these
// enter the metrics ledger (not the reward, which prices only the task).
struct TrainCostModel {
    double train_time_ms = 0.0;
    double train_energy_j = 0.0;
    double publish_time_ms = 0.0;
    double publish_energy_j = 0.0;
};

struct ClientConfig {
    uint32_t device_id = 1;
    ModelKind kind = ModelKind::ac;
    TrainingMode mode = TrainingMode::local;
    agents::AcConfig ac;
    agents::DqnConfig dqn;
    TrainCostModel cost;
    size_t upload_chunk_bytes = wire::kDefaultChunkBytes;
    bool upload_initial_model = true;
    // Debug override: take this action every step, skipping the policy.
    std::optional<int> force_action;
};

// Everything observable about one executed task, for the metrics layer.
struct StepRecord {
    uint64_t step = 0;
    StateVec state{};
    int action = 0;
    double reward = 0.0;
    double energy_j = 0.0;  // task energy + charged training/publish energy
    double decision_ms = 0.0;
    double uplink_ms = 0.0;
    double processing_ms = 0.0;
    double downlink_ms = 0.0;
    double train_ms = 0.0;  // training (local) or publish (remote) charge
    double total_ms = 0.0;  // task latency + train_ms
    bool success = false;
    uint64_t staleness = 0;
    uint64_t weight_version = 0;  // version in force at decision time
};

// The device-side loop: observe, act, execute, then either train in
// place (local mode) or stream the experience to the server and apply
// whatever weights have arrived before the next decision (remote mode).
// Local mode never sends a frame; remote mode never trains.
class ClientRuntime {
public:
    explicit ClientRuntime(const ClientConfig& cfg);

    // session may be null in local mode; remote mode requires it.
    std::vector<StepRecord> run(env::Environment& environment,
                                const std::vector<taskgen::TaskSpec>& tasks,
                                Session* session);

    ModelParameters parameters() const;
    uint64_t applied_weight_version() const { return applied_version_; }
    uint64_t experiences_published() const { return experiences_published_; }
    uint64_t frames_sent() const { return frames_sent_; }
    uint64_t frames_received() const { return frames_received_; }
    uint64_t wire_bytes_sent() const { return bytes_sent_; }
    uint64_t wire_bytes_received() const { return bytes_received_; }

    const ClientConfig& config() const { return cfg_; }

private:
    int select_action(const StateVec& s);
    void train_in_place(const Experience& e);
    void apply_pending_weights();
    void send(Session& session, wire::Frame frame, double now_s);
    void upload_initial_model(Session& session, double now_s);

    ClientConfig cfg_;
    std::variant<agents::AcAgent, agents::DqnAgent> agent_;
    std::optional<wire::WeightsPayload> staged_weights_;
    uint64_t sequence_ = 0;
    uint64_t applied_version_ = 0;
    uint64_t staleness_ = 0;
    uint64_t experiences_published_ = 0;
    uint64_t frames_sent_ = 0;
    uint64_t frames_received_ = 0;
    uint64_t bytes_sent_ = 0;
    uint64_t bytes_received_ = 0;
};

}  // namespace offload::service
