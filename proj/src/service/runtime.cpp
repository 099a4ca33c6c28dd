#include "offload/service/runtime.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace offload::service {

// --- DelayedChannel --------------------------------------------------------

DelayedChannel::DelayedChannel(double latency_ms, double throughput_mbps)
    : latency_s_(latency_ms / 1000.0), throughput_mbps_(throughput_mbps) {
    if (latency_ms < 0) throw std::invalid_argument("link latency must be >= 0");
    if (throughput_mbps < 0) throw std::invalid_argument("link throughput must be >= 0");
}

void DelayedChannel::push(wire::Frame frame, double send_time_s) {
    double transit_s = latency_s_;
    if (throughput_mbps_ > 0) {
        transit_s += static_cast<double>(wire::frame_wire_size(frame)) * 8.0 /
                     (throughput_mbps_ * 1e6);
    }
    const double deliver_at = std::max(send_time_s + transit_s, last_delivery_s_);
    last_delivery_s_ = deliver_at;
    ++frames_;
    bytes_ += wire::frame_wire_size(frame);
    q_.emplace_back(deliver_at, std::move(frame));
}

std::vector<wire::Frame> DelayedChannel::pop_due(double now_s) {
    std::vector<wire::Frame> out;
    while (!q_.empty() && q_.front().first <= now_s) {
        out.push_back(std::move(q_.front().second));
        q_.pop_front();
    }
    return out;
}

// --- Session -----------------------------------------------------------------

Session::Session(ServerConfig server_cfg, ServiceLinkConfig link_cfg, bool concurrent_pump)
    : broker_(),
      manager_(broker_, std::move(server_cfg)),
      link_cfg_(link_cfg),
      concurrent_pump_(concurrent_pump),
      uplink_(link_cfg.client_to_server_ms, link_cfg.throughput_mbps),
      downlink_tap_(broker_.subscribe("server/+/weights/+/v1")) {}

DelayedChannel& Session::downlink_for(uint32_t device_id, ModelKind kind) {
    const auto key = std::make_pair(device_id, static_cast<uint8_t>(kind));
    auto it = downlinks_.find(key);
    if (it == downlinks_.end()) {
        it = downlinks_
                 .emplace(key, DelayedChannel(link_cfg_.server_to_client_ms,
                                              link_cfg_.throughput_mbps))
                 .first;
    }
    return it->second;
}

void Session::client_send(const wire::Frame& f, double now_s) { uplink_.push(f, now_s); }

void Session::advance(double now_s) {
    for (auto& f : uplink_.pop_due(now_s)) broker_.publish(f);
    if (concurrent_pump_)
        manager_.pump_concurrent(now_s);
    else
        manager_.pump(now_s);
    // Stage server output on the per-device downlinks.
    while (auto f = broker_.poll(downlink_tap_)) {
        auto topic = wire::parse_topic(f->topic);
        if (!topic) continue;  // unreachable for frames the manager emits
        downlink_for(topic->device_id, topic->kind).push(std::move(*f), now_s);
    }
}

std::vector<wire::Frame> Session::client_receive(uint32_t device_id, ModelKind kind,
                                                 double now_s) {
    return downlink_for(device_id, kind).pop_due(now_s);
}

// --- ClientRuntime -----------------------------------------------------------

namespace {

std::variant<agents::AcAgent, agents::DqnAgent> make_agent(const ClientConfig& cfg) {
    using V = std::variant<agents::AcAgent, agents::DqnAgent>;
    if (cfg.kind == ModelKind::ac) return V(std::in_place_type<agents::AcAgent>, cfg.ac);
    return V(std::in_place_type<agents::DqnAgent>, cfg.dqn);
}

}  // namespace

ClientRuntime::ClientRuntime(const ClientConfig& cfg) : cfg_(cfg), agent_(make_agent(cfg)) {
    if (cfg_.force_action && (*cfg_.force_action < 0 || *cfg_.force_action > 2))
        throw std::invalid_argument("force_action must be 0, 1 or 2");
}

int ClientRuntime::select_action(const StateVec& s) {
    return std::visit([&](auto& agent) { return agent.select_action(s).action; }, agent_);
}

void ClientRuntime::train_in_place(const Experience& e) {
    std::visit([&](auto& agent) { agent.train_step(e); }, agent_);
}

ModelParameters ClientRuntime::parameters() const {
    return std::visit([](const auto& agent) { return agent.parameters(); }, agent_);
}

void ClientRuntime::apply_pending_weights() {
    if (!staged_weights_) return;
    if (staged_weights_->model_version > applied_version_) {
        ModelParameters p{staged_weights_->kind, staged_weights_->model_version,
                          std::move(staged_weights_->weights)};
        std::visit([&](auto& agent) { agent.set_parameters(p); }, agent_);
        applied_version_ = p.version;
        staleness_ = 0;
    }
    staged_weights_.reset();
}

void ClientRuntime::send(Session& session, wire::Frame frame, double now_s) {
    ++frames_sent_;
    bytes_sent_ += wire::frame_wire_size(frame);
    session.client_send(frame, now_s);
}

void ClientRuntime::upload_initial_model(Session& session, double now_s) {
    wire::WeightsPayload w;
    w.device_id = cfg_.device_id;
    w.kind = cfg_.kind;
    w.model_version = 0;
    w.weights = parameters().weights;
    const auto blob = wire::model_to_blob(w);
    const auto chunks =
        wire::chunk_model(cfg_.device_id, cfg_.kind, /*upload_id=*/1, blob,
                          cfg_.upload_chunk_bytes);
    const std::string topic =
        wire::render_topic({wire::Channel::model_upload, cfg_.device_id, cfg_.kind});
    for (const auto& c : chunks) {
        wire::Frame f;
        f.msg_type = wire::MsgType::model_chunk;
        f.topic = topic;
        f.payload = wire::encode_model_chunk(c);
        send(session, std::move(f), now_s);
    }
}

std::vector<StepRecord> ClientRuntime::run(env::Environment& environment,
                                           const std::vector<taskgen::TaskSpec>& tasks,
                                           Session* session) {
    const bool remote = cfg_.mode == TrainingMode::remote;
    if (remote && session == nullptr)
        throw std::invalid_argument("remote training mode requires a session");

    std::vector<StepRecord> records;
    records.reserve(tasks.size());

    if (remote && cfg_.upload_initial_model && !tasks.empty())
        upload_initial_model(*session, tasks.front().arrival_time_s);

    const auto& bounds = environment.config().norm;
    for (size_t i = 0; i < tasks.size(); ++i) {
        const auto& task = tasks[i];
        const double now = task.arrival_time_s;

        if (remote) {
            // Let the server catch up, then apply the freshest weights
            // before this decision.
            session->advance(now);
            for (auto& f : session->client_receive(cfg_.device_id, cfg_.kind, now)) {
                ++frames_received_;
                bytes_received_ += wire::frame_wire_size(f);
                if (f.msg_type != wire::MsgType::weights) continue;  // acks: counted only
                auto w = wire::decode_weights(f.payload);
                if (!w || w->kind != cfg_.kind) continue;
                if (!staged_weights_ || w->model_version > staged_weights_->model_version)
                    staged_weights_ = std::move(*w);
            }
            apply_pending_weights();
        }

        const env::ObservedState obs = environment.observe(task);
        const StateVec state = env::normalize_state(obs, bounds);

        StepRecord rec;
        rec.step = i;
        rec.state = state;
        rec.staleness = staleness_;
        rec.weight_version = applied_version_;

        const int action = cfg_.force_action ? *cfg_.force_action : select_action(state);
        const env::StepOutcome out = environment.step(task, action);

        rec.action = action;
        rec.reward = out.reward;
        rec.decision_ms = out.decision_ms;
        rec.uplink_ms = out.uplink_ms;
        rec.processing_ms = out.processing_ms;
        rec.downlink_ms = out.downlink_ms;
        rec.success = out.success;

        Experience e;
        e.device_id = cfg_.device_id;
        e.kind = cfg_.kind;
        e.sequence = sequence_++;
        e.state = state;
        e.action = static_cast<uint8_t>(action);
        e.reward = static_cast<float>(out.reward);
        e.next_state = env::normalize_state(out.next_state, bounds);
        e.done = false;  // continuing task stream: no terminal states

        double charged_ms = 0.0, charged_j = 0.0;
        if (remote) {
            wire::Frame f;
            f.msg_type = wire::MsgType::experience;
            f.topic = wire::render_topic(
                {wire::Channel::experience, cfg_.device_id, cfg_.kind});
            f.payload = wire::encode_experience(e);
            send(*session, std::move(f), now);
            ++experiences_published_;
            ++staleness_;
            charged_ms = cfg_.cost.publish_time_ms;
            charged_j = cfg_.cost.publish_energy_j;
        } else {
            train_in_place(e);
            ++applied_version_;  // local weights advance with every step
            charged_ms = cfg_.cost.train_time_ms;
            charged_j = cfg_.cost.train_energy_j;
        }

        rec.train_ms = charged_ms;
        rec.total_ms = out.total_ms + charged_ms;
        rec.energy_j = out.energy_j + charged_j;
        records.push_back(rec);
    }
    return records;
}

}  // namespace offload::service
