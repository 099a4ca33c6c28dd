#include "offload/service/server.hpp"

#include <iterator>
#include <stdexcept>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace offload::service {

namespace {

std::variant<agents::AcAgent, agents::DqnAgent> make_replica(ModelKind kind,
                                                             const LearnerConfig& cfg) {
    using V = std::variant<agents::AcAgent, agents::DqnAgent>;
    if (kind == ModelKind::ac) return V(std::in_place_type<agents::AcAgent>, cfg.ac);
    return V(std::in_place_type<agents::DqnAgent>, cfg.dqn);
}

size_t kind_param_count(ModelKind k) {
    return k == ModelKind::ac ? agents::AcAgent::parameter_count()
                              : agents::DqnAgent::parameter_count();
}

}  // namespace

// --- ServerLearner -------------------------------------------------------

ServerLearner::ServerLearner(uint32_t device_id, ModelKind kind, const LearnerConfig& cfg)
    : device_id_(device_id), kind_(kind), replica_(make_replica(kind, cfg)) {}

wire::WeightsPayload ServerLearner::train_one(const Experience& e) {
    std::visit([&](auto& agent) { agent.train_step(e); }, replica_);
    ++processed_;
    ++version_;
    wire::WeightsPayload w;
    w.device_id = device_id_;
    w.kind = kind_;
    w.model_version = version_;
    w.weights = std::visit([](const auto& agent) { return agent.parameters().weights; }, replica_);
    return w;
}

std::vector<wire::WeightsPayload> ServerLearner::on_experience(const Experience& e) {
    ++offered_;
    std::vector<wire::WeightsPayload> out;
    if (e.device_id != device_id_ || e.kind != kind_) {
        ++misrouted_;
        ++dropped_;
        return out;
    }
    if (e.sequence < expected_seq_ || pending_.contains(e.sequence)) {
        ++dropped_;  // duplicate of something already seen or waiting
        return out;
    }
    if (e.sequence > expected_seq_) {
        pending_.emplace(e.sequence, e);
        return out;
    }
    out.push_back(train_one(e));
    ++expected_seq_;
    for (auto it = pending_.begin(); it != pending_.end() && it->first == expected_seq_;) {
        out.push_back(train_one(it->second));
        ++expected_seq_;
        it = pending_.erase(it);
    }
    return out;
}

void ServerLearner::install_model(const ModelParameters& p) {
    if (p.kind != kind_) throw std::invalid_argument("learner: installed model kind mismatch");
    std::visit(
        [&](auto& agent) {
            agent.set_parameters(p);
            agent.reset_optimizer();
        },
        replica_);
}

ModelParameters ServerLearner::parameters() const {
    return std::visit([](const auto& agent) { return agent.parameters(); }, replica_);
}

// --- ModelReceiver ---------------------------------------------------------

ModelReceiver::ModelReceiver(double timeout_s) : timeout_s_(timeout_s) {}

ModelReceiver::ChunkOutcome ModelReceiver::on_chunk(const wire::ModelChunkPayload& c,
                                                    double now_s) {
    const Key key{c.device_id, static_cast<uint8_t>(c.kind), c.upload_id};
    auto& entry = buffers_[key];
    entry.last_activity_s = now_s;

    ChunkOutcome out;
    switch (entry.assembler.add(c)) {
        case wire::AssemblyStatus::conflict:
            buffers_.erase(key);
            out.status = wire::AckStatus::integrity_error;
            return out;
        case wire::AssemblyStatus::incomplete:
            out.status = wire::AckStatus::incomplete;
            return out;
        case wire::AssemblyStatus::complete:
            break;
    }

    const auto blob = entry.assembler.assemble();
    buffers_.erase(key);
    auto model = wire::blob_to_model(*blob);
    if (!model || model->kind != c.kind || model->weights.size() != kind_param_count(c.kind)) {
        out.status = wire::AckStatus::integrity_error;
        return out;
    }
    out.status = wire::AckStatus::ok;
    out.model = ModelParameters{model->kind, model->model_version, std::move(model->weights)};
    return out;
}

std::vector<wire::ChunkAckPayload> ModelReceiver::expire(double now_s) {
    std::vector<wire::ChunkAckPayload> acks;
    for (auto it = buffers_.begin(); it != buffers_.end();) {
        if (now_s - it->second.last_activity_s > timeout_s_) {
            acks.push_back({it->first.device_id, static_cast<ModelKind>(it->first.kind),
                            it->first.upload_id, wire::AckStatus::expired});
            it = buffers_.erase(it);
        } else {
            ++it;
        }
    }
    return acks;
}

// --- ServerManager ---------------------------------------------------------

ServerManager::ServerManager(Broker& broker, ServerConfig cfg)
    : broker_(broker),
      cfg_(std::move(cfg)),
      experience_sub_(broker_.subscribe("client/+/experience/+/v1")),
      upload_sub_(broker_.subscribe("client/+/upload/+/v1")),
      receiver_(cfg_.upload_timeout_s) {}

ServerLearner* ServerManager::find_learner(uint32_t device_id, ModelKind kind) {
    auto it = learners_.find(LearnerKey{device_id, static_cast<uint8_t>(kind)});
    return it == learners_.end() ? nullptr : it->second.get();
}

ServerLearner& ServerManager::learner_for(uint32_t device_id, ModelKind kind) {
    const LearnerKey key{device_id, static_cast<uint8_t>(kind)};
    auto it = learners_.find(key);
    if (it == learners_.end()) {
        it = learners_
                 .emplace(key, std::make_unique<ServerLearner>(device_id, kind, cfg_.learner))
                 .first;
    }
    return *it->second;
}

void ServerManager::publish_weights(const wire::WeightsPayload& w) {
    wire::Frame f;
    f.msg_type = wire::MsgType::weights;
    f.topic = wire::render_topic({wire::Channel::weights, w.device_id, w.kind});
    f.payload = wire::encode_weights(w);
    broker_.publish(f);
}

void ServerManager::publish_ack(uint32_t device_id, ModelKind kind, uint64_t upload_id,
                                wire::AckStatus status) {
    // Acks ride the device's weights topic, distinguished by msg_type.
    wire::Frame f;
    f.msg_type = wire::MsgType::chunk_ack;
    f.topic = wire::render_topic({wire::Channel::weights, device_id, kind});
    f.payload = wire::encode_chunk_ack({device_id, kind, upload_id, status});
    broker_.publish(f);
}

void ServerManager::handle_upload_frame(const wire::Frame& f, double now_s) {
    auto topic = wire::parse_topic(f.topic);
    auto chunk = wire::decode_model_chunk(f.payload);
    if (f.msg_type != wire::MsgType::model_chunk || !topic ||
        topic->channel != wire::Channel::model_upload || !chunk ||
        chunk->device_id != topic->device_id || chunk->kind != topic->kind) {
        ++undecodable_;
        return;
    }
    auto outcome = receiver_.on_chunk(*chunk, now_s);
    if (outcome.status == wire::AckStatus::ok) {
        learner_for(chunk->device_id, chunk->kind).install_model(*outcome.model);
        ++uploads_completed_;
        publish_ack(chunk->device_id, chunk->kind, chunk->upload_id, wire::AckStatus::ok);
    } else if (outcome.status == wire::AckStatus::integrity_error) {
        publish_ack(chunk->device_id, chunk->kind, chunk->upload_id,
                    wire::AckStatus::integrity_error);
    }
}

std::optional<ServerManager::RoutedExperience> ServerManager::route_experience(
    const wire::Frame& f) {
    if (f.msg_type != wire::MsgType::experience) {
        ++undecodable_;
        return std::nullopt;
    }
    auto topic = wire::parse_topic(f.topic);
    if (!topic || topic->channel != wire::Channel::experience) {
        ++undecodable_;
        return std::nullopt;
    }
    auto e = wire::decode_experience(f.payload);
    if (!e) {
        ++undecodable_;
        return std::nullopt;
    }
    return RoutedExperience{LearnerKey{topic->device_id, static_cast<uint8_t>(topic->kind)},
                            std::move(*e)};
}

void ServerManager::drain(Broker::SubscriberId sub, std::vector<wire::Frame>& out) {
    while (auto f = broker_.poll(sub)) out.push_back(std::move(*f));
}

size_t ServerManager::pump(double now_s) {
    std::vector<wire::Frame> uploads, experiences;
    drain(upload_sub_, uploads);
    drain(experience_sub_, experiences);

    for (const auto& f : uploads) handle_upload_frame(f, now_s);
    for (const auto& ack : receiver_.expire(now_s))
        publish_ack(ack.device_id, ack.kind, ack.upload_id, ack.status);

    for (const auto& f : experiences) {
        auto routed = route_experience(f);
        if (!routed) continue;
        auto& learner =
            learner_for(routed->key.device_id, static_cast<ModelKind>(routed->key.kind));
        for (const auto& w : learner.on_experience(routed->exp)) publish_weights(w);
    }
    return uploads.size() + experiences.size();
}

size_t ServerManager::pump_concurrent(double now_s) {
    std::vector<wire::Frame> uploads, experiences;
    drain(upload_sub_, uploads);
    drain(experience_sub_, experiences);

    for (const auto& f : uploads) handle_upload_frame(f, now_s);
    for (const auto& ack : receiver_.expire(now_s))
        publish_ack(ack.device_id, ack.kind, ack.upload_id, ack.status);

    // Group per learner, preserving per-key arrival order, and create all
    // learners up front: the map must not mutate inside the parallel loop.
    std::map<LearnerKey, std::vector<Experience>> batches;
    for (const auto& f : experiences) {
        if (auto routed = route_experience(f)) batches[routed->key].push_back(std::move(routed->exp));
    }
    std::vector<std::pair<ServerLearner*, const std::vector<Experience>*>> work;
    work.reserve(batches.size());
    for (auto& [key, batch] : batches)
        work.emplace_back(&learner_for(key.device_id, static_cast<ModelKind>(key.kind)), &batch);

    std::vector<std::vector<wire::WeightsPayload>> produced(work.size());
#ifdef _OPENMP
    const int threads = cfg_.max_concurrent_learners > 0 ? cfg_.max_concurrent_learners
                                                         : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(work.size()); ++i) {
        auto& [learner, batch] = work[static_cast<size_t>(i)];
        std::vector<wire::WeightsPayload> ws;
        for (const auto& e : *batch) {
            auto produced_now = learner->on_experience(e);
            ws.insert(ws.end(), std::make_move_iterator(produced_now.begin()),
                      std::make_move_iterator(produced_now.end()));
        }
        produced[static_cast<size_t>(i)] = std::move(ws);
    }

    // Publish in learner-key order: per-topic streams match pump().
    for (const auto& ws : produced)
        for (const auto& w : ws) publish_weights(w);
    return uploads.size() + experiences.size();
}

}  // namespace offload::service
