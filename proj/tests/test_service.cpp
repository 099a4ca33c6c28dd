#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <thread>
#include <vector>

#include "offload/rng.hpp"
#include "offload/service/broker.hpp"
#include "offload/service/runtime.hpp"
#include "offload/service/server.hpp"
#include "offload/service/socket.hpp"
#include "offload/taskgen/taskgen.hpp"

using namespace offload;
using namespace offload::service;

namespace {

Experience make_exp(uint32_t device, ModelKind kind, uint64_t seq, Rng& rng) {
    Experience e;
    e.device_id = device;
    e.kind = kind;
    e.sequence = seq;
    for (auto& v : e.state) v = float(rng.uniform(0.0, 1.0));
    e.action = uint8_t(rng.below(3));
    e.reward = float(rng.uniform(-1.0, 0.0));
    for (auto& v : e.next_state) v = float(rng.uniform(0.0, 1.0));
    e.done = false;
    return e;
}

wire::Frame experience_frame(const Experience& e) {
    wire::Frame f;
    f.msg_type = wire::MsgType::experience;
    f.topic = wire::render_topic({wire::Channel::experience, e.device_id, e.kind});
    f.payload = wire::encode_experience(e);
    return f;
}

env::Environment make_env() {
    env::EnvConfig cfg;
    return env::Environment(cfg, env::SignalModel::constant(0.2),
                            env::SignalModel::constant(100.0));
}

std::vector<taskgen::TaskSpec> make_stream(size_t n, uint64_t seed = 7) {
    const auto tasks = taskgen::generate_taskset(taskgen::TaskSetConfig{});
    return taskgen::task_stream_n(tasks, n, seed, 1.0);
}

}  // namespace

TEST_CASE("topic patterns match segment-wise with single-level wildcards") {
    CHECK(topic_matches("client/1/experience/ac/v1", "client/1/experience/ac/v1"));
    CHECK(topic_matches("client/+/experience/+/v1", "client/9/experience/dqn/v1"));
    CHECK(topic_matches("+/+/+/+/+", "server/2/weights/ac/v1"));
    CHECK_FALSE(topic_matches("client/+/experience/+/v1", "server/9/weights/dqn/v1"));
    CHECK_FALSE(topic_matches("client/+/experience/v1", "client/9/experience/dqn/v1"));
    CHECK_FALSE(topic_matches("client/1/experience/ac/v1", "client/1/experience/ac/v2"));
    CHECK_FALSE(topic_matches("client/+", "client"));
}

TEST_CASE("broker delivers FIFO, exactly once per matching subscriber") {
    Broker broker;
    const auto all = broker.subscribe("client/+/experience/+/v1");
    const auto dev1 = broker.subscribe("client/1/experience/+/v1");

    Rng rng(1);
    for (uint64_t s = 0; s < 5; ++s) {
        CHECK(broker.publish(experience_frame(make_exp(1, ModelKind::ac, s, rng))) == 2);
        CHECK(broker.publish(experience_frame(make_exp(2, ModelKind::ac, s, rng))) == 1);
    }
    CHECK(broker.pending(all) == 10);
    CHECK(broker.pending(dev1) == 5);

    uint64_t expect1 = 0;
    while (auto f = broker.poll(dev1)) {
        const auto e = wire::decode_experience(f->payload);
        REQUIRE(e.ok());
        CHECK(e->device_id == 1);
        CHECK(e->sequence == expect1++);  // FIFO per subscriber
    }
    CHECK(expect1 == 5);
    CHECK(broker.delivered() == 15);
    CHECK(broker.published() == 10);
    CHECK(broker.dropped() == 0);
}

TEST_CASE("publishes that match nobody are counted as dropped") {
    Broker broker;
    const auto sub = broker.subscribe("server/+/weights/+/v1");
    Rng rng(2);
    (void)broker.publish(experience_frame(make_exp(1, ModelKind::ac, 0, rng)));
    CHECK(broker.dropped() == 1);
    CHECK(broker.pending(sub) == 0);

    broker.unsubscribe(sub);
    wire::Frame w;
    w.msg_type = wire::MsgType::weights;
    w.topic = "server/1/weights/ac/v1";
    w.payload = wire::encode_weights({});
    (void)broker.publish(w);
    CHECK(broker.dropped() == 2);
}

TEST_CASE("learner processes in sequence order through gaps and drops duplicates") {
    LearnerConfig cfg;
    ServerLearner learner(1, ModelKind::ac, cfg);
    Rng rng(3);
    auto e0 = make_exp(1, ModelKind::ac, 0, rng);
    auto e1 = make_exp(1, ModelKind::ac, 1, rng);
    auto e2 = make_exp(1, ModelKind::ac, 2, rng);
    auto e3 = make_exp(1, ModelKind::ac, 3, rng);

    CHECK(learner.on_experience(e2).empty());  // gap: buffered
    CHECK(learner.on_experience(e3).empty());
    CHECK(learner.buffered() == 2);

    auto out = learner.on_experience(e0);  // trains 0 only
    REQUIRE(out.size() == 1);
    CHECK(out[0].model_version == 1);

    out = learner.on_experience(e1);  // closes the gap: trains 1,2,3
    REQUIRE(out.size() == 3);
    CHECK(out[0].model_version == 2);
    CHECK(out[2].model_version == 4);
    CHECK(learner.buffered() == 0);
    CHECK(learner.next_expected_sequence() == 4);

    CHECK(learner.on_experience(e1).empty());  // duplicate: dropped
    CHECK(learner.dropped() == 1);

    auto alien = make_exp(2, ModelKind::ac, 9, rng);
    CHECK(learner.on_experience(alien).empty());
    CHECK(learner.misrouted() == 1);

    // conservation: offered = processed + buffered + dropped
    CHECK(learner.offered() == 6);
    CHECK(learner.processed() == 4);
    CHECK(learner.offered() == learner.processed() + learner.buffered() + learner.dropped());
}

TEST_CASE("server learner equals a local agent fed the same stream, bitwise") {
    LearnerConfig cfg;
    Rng rng(4);

    for (ModelKind kind : {ModelKind::ac, ModelKind::dqn}) {
        CAPTURE(int(kind));
        ServerLearner learner(1, kind, cfg);
        agents::AcAgent local_ac(cfg.ac);
        agents::DqnAgent local_dqn(cfg.dqn);
        for (uint64_t s = 0; s < 1000; ++s) {
            auto e = make_exp(1, kind, s, rng);
            const auto out = learner.on_experience(e);
            REQUIRE(out.size() == 1);
            if (kind == ModelKind::ac)
                (void)local_ac.train_step(e);
            else
                (void)local_dqn.train_step(e);
        }
        const auto local_w = kind == ModelKind::ac ? local_ac.parameters().weights
                                                   : local_dqn.parameters().weights;
        const auto server_w = learner.parameters().weights;
        REQUIRE(server_w.size() == local_w.size());
        CHECK(std::memcmp(server_w.data(), local_w.data(), 4 * local_w.size()) == 0);
        CHECK(learner.model_version() == 1000);
    }
}

TEST_CASE("manager keeps four interleaved streams fully separated") {
    Broker broker;
    ServerManager manager(broker, ServerConfig{});
    const auto tap = broker.subscribe("server/+/weights/+/v1");

    Rng rng(5);
    std::map<std::pair<uint32_t, int>, uint64_t> seq;
    std::vector<wire::Frame> traffic;
    for (int round = 0; round < 50; ++round) {
        for (uint32_t dev : {1u, 2u}) {
            for (ModelKind kind : {ModelKind::ac, ModelKind::dqn}) {
                auto& s = seq[{dev, int(kind)}];
                traffic.push_back(experience_frame(make_exp(dev, kind, s++, rng)));
            }
        }
    }
    for (const auto& f : traffic) broker.publish(f);
    // junk on a valid topic must not reach any learner
    wire::Frame junk;
    junk.msg_type = wire::MsgType::experience;
    junk.topic = "client/1/experience/ac/v1";
    junk.payload = {1, 2, 3};
    broker.publish(junk);

    (void)manager.pump(0.0);
    CHECK(manager.learner_count() == 4);
    CHECK(manager.undecodable() == 1);

    manager.for_each_learner([](const ServerLearner& l) {
        CHECK(l.offered() == 50);
        CHECK(l.processed() == 50);
        CHECK(l.buffered() == 0);
        CHECK(l.dropped() == 0);
        CHECK(l.misrouted() == 0);
        CHECK(l.offered() == l.processed() + l.buffered() + l.dropped());
    });

    // 200 weights frames, versioned 1..50 per stream, in stream order.
    std::map<std::string, uint64_t> last_version;
    size_t weights_frames = 0;
    while (auto f = broker.poll(tap)) {
        const auto w = wire::decode_weights(f->payload);
        REQUIRE(w.ok());
        CHECK(w->model_version == last_version[f->topic] + 1);
        last_version[f->topic] = w->model_version;
        ++weights_frames;
    }
    CHECK(weights_frames == 200);
    CHECK(last_version.size() == 4);
    for (const auto& [topic, v] : last_version) CHECK(v == 50);
}

TEST_CASE("concurrent pump produces the same learners and streams as sequential") {
    Rng rng(6);
    std::vector<wire::Frame> traffic;
    std::map<std::pair<uint32_t, int>, uint64_t> seq;
    for (int round = 0; round < 40; ++round)
        for (uint32_t dev : {1u, 2u, 3u})
            for (ModelKind kind : {ModelKind::ac, ModelKind::dqn}) {
                auto& s = seq[{dev, int(kind)}];
                traffic.push_back(experience_frame(make_exp(dev, kind, s++, rng)));
            }

    auto run = [&traffic](bool concurrent) {
        Broker broker;
        ServerManager manager(broker, ServerConfig{});
        const auto tap = broker.subscribe("server/+/weights/+/v1");
        for (const auto& f : traffic) broker.publish(f);
        if (concurrent)
            (void)manager.pump_concurrent(0.0);
        else
            (void)manager.pump(0.0);

        std::map<std::string, std::vector<wire::WeightsPayload>> streams;
        while (auto f = broker.poll(tap)) {
            auto w = wire::decode_weights(f->payload);
            REQUIRE(w.ok());
            streams[f->topic].push_back(std::move(*w));
        }
        std::vector<std::vector<float>> params;
        manager.for_each_learner(
            [&](const ServerLearner& l) { params.push_back(l.parameters().weights); });
        return std::make_pair(std::move(streams), std::move(params));
    };

    const auto a = run(false);
    const auto b = run(true);
    REQUIRE(a.first.size() == b.first.size());
    for (const auto& [topic, stream] : a.first) {
        REQUIRE(b.first.count(topic) == 1);
        const auto& other = b.first.at(topic);
        REQUIRE(other.size() == stream.size());
        for (size_t i = 0; i < stream.size(); ++i) REQUIRE(stream[i] == other[i]);
    }
    REQUIRE(a.second.size() == b.second.size());
    for (size_t i = 0; i < a.second.size(); ++i) REQUIRE(a.second[i] == b.second[i]);
}

TEST_CASE("a shuffled chunked upload installs the exact model and acks ok") {
    Broker broker;
    ServerManager manager(broker, ServerConfig{});
    const auto tap = broker.subscribe("server/+/weights/+/v1");

    // A model the server could never have derived: constant weights.
    agents::AcAgent donor(agents::AcConfig{.init_seed = 99});
    wire::WeightsPayload blob_payload;
    blob_payload.device_id = 7;
    blob_payload.kind = ModelKind::ac;
    blob_payload.model_version = 0;
    blob_payload.weights = donor.parameters().weights;
    const auto blob = wire::model_to_blob(blob_payload);
    auto chunks = wire::chunk_model(7, ModelKind::ac, 1, blob, 10000);
    REQUIRE(chunks.size() > 3);
    std::swap(chunks.front(), chunks.back());
    std::swap(chunks[1], chunks[chunks.size() / 2]);

    const std::string topic = wire::render_topic({wire::Channel::model_upload, 7, ModelKind::ac});
    for (const auto& c : chunks) {
        wire::Frame f;
        f.msg_type = wire::MsgType::model_chunk;
        f.topic = topic;
        f.payload = wire::encode_model_chunk(c);
        broker.publish(f);
    }
    (void)manager.pump(0.0);

    CHECK(manager.uploads_completed() == 1);
    auto* learner = manager.find_learner(7, ModelKind::ac);
    REQUIRE(learner != nullptr);
    CHECK(learner->parameters().weights == blob_payload.weights);

    bool saw_ok_ack = false;
    while (auto f = broker.poll(tap)) {
        if (f->msg_type != wire::MsgType::chunk_ack) continue;
        const auto a = wire::decode_chunk_ack(f->payload);
        REQUIRE(a.ok());
        CHECK(a->upload_id == 1);
        CHECK(a->status == wire::AckStatus::ok);
        saw_ok_ack = true;
    }
    CHECK(saw_ok_ack);
}

TEST_CASE("stalled uploads expire after the timeout and ack expired") {
    Broker broker;
    ServerConfig cfg;
    cfg.upload_timeout_s = 30.0;
    ServerManager manager(broker, cfg);
    const auto tap = broker.subscribe("server/+/weights/+/v1");

    wire::ModelChunkPayload c;
    c.device_id = 3;
    c.kind = ModelKind::dqn;
    c.upload_id = 12;
    c.chunk_index = 0;
    c.chunk_total = 2;  // second chunk never arrives
    c.bytes = {1, 2, 3};
    wire::Frame f;
    f.msg_type = wire::MsgType::model_chunk;
    f.topic = wire::render_topic({wire::Channel::model_upload, 3, ModelKind::dqn});
    f.payload = wire::encode_model_chunk(c);
    broker.publish(f);
    (void)manager.pump(0.0);
    CHECK(manager.uploads_completed() == 0);

    (void)manager.pump(31.0);  // past the inactivity timeout
    bool saw_expired = false;
    while (auto fr = broker.poll(tap)) {
        if (fr->msg_type != wire::MsgType::chunk_ack) continue;
        const auto a = wire::decode_chunk_ack(fr->payload);
        REQUIRE(a.ok());
        CHECK(a->status == wire::AckStatus::expired);
        CHECK(a->upload_id == 12);
        saw_expired = true;
    }
    CHECK(saw_expired);
}

TEST_CASE("delayed channels hold frames for latency plus serialization, in order") {
    DelayedChannel ch(100.0, 8.0);  // 100 ms, 8 Mbps -> 1 us per byte
    Rng rng(7);
    auto f = experience_frame(make_exp(1, ModelKind::ac, 0, rng));
    const double ser_s = double(wire::frame_wire_size(f)) * 8.0 / (8.0 * 1e6);
    ch.push(f, 0.0);
    CHECK(ch.pop_due(0.05).empty());
    CHECK(ch.pop_due(0.1 + ser_s - 1e-9).empty());
    CHECK(ch.pop_due(0.1 + ser_s + 1e-9).size() == 1);

    // stream order: a later frame never overtakes an earlier one
    DelayedChannel fifo(0.0, 0.0);
    fifo.push(experience_frame(make_exp(1, ModelKind::ac, 1, rng)), 5.0);
    fifo.push(experience_frame(make_exp(1, ModelKind::ac, 2, rng)), 1.0);  // sent "earlier"
    const auto due = fifo.pop_due(10.0);
    REQUIRE(due.size() == 2);
    const auto e1 = wire::decode_experience(due[0].payload);
    REQUIRE(e1.ok());
    CHECK(e1->sequence == 1);
    CHECK(fifo.frames_carried() == 2);
}

TEST_CASE("local mode never touches the wire") {
    auto environment = make_env();
    ClientConfig cfg;
    cfg.mode = TrainingMode::local;
    ClientRuntime client(cfg);
    const auto records = client.run(environment, make_stream(50), nullptr);
    CHECK(records.size() == 50);
    CHECK(client.frames_sent() == 0);
    CHECK(client.frames_received() == 0);
    CHECK(client.wire_bytes_sent() == 0);
    CHECK(client.experiences_published() == 0);
    CHECK(client.applied_weight_version() == 50);
}

TEST_CASE("remote mode requires a session") {
    auto environment = make_env();
    ClientConfig cfg;
    cfg.mode = TrainingMode::remote;
    ClientRuntime client(cfg);
    CHECK_THROWS_AS((void)client.run(environment, make_stream(5), nullptr),
                    std::invalid_argument);
}

TEST_CASE("remote training over a zero-latency link equals local training bitwise") {
    for (ModelKind kind : {ModelKind::ac, ModelKind::dqn}) {
        CAPTURE(int(kind));
        const auto stream = make_stream(300, 11);

        auto env_local = make_env();
        ClientConfig local_cfg;
        local_cfg.kind = kind;
        local_cfg.mode = TrainingMode::local;
        ClientRuntime local_client(local_cfg);
        const auto local_records = local_client.run(env_local, stream, nullptr);

        auto env_remote = make_env();
        ClientConfig remote_cfg;
        remote_cfg.kind = kind;
        remote_cfg.mode = TrainingMode::remote;
        ClientRuntime remote_client(remote_cfg);
        Session session(ServerConfig{}, ServiceLinkConfig{}, false);
        const auto remote_records = remote_client.run(env_remote, stream, &session);

        REQUIRE(local_records.size() == remote_records.size());
        for (size_t i = 0; i < local_records.size(); ++i) {
            REQUIRE(local_records[i].action == remote_records[i].action);
            REQUIRE(local_records[i].reward == remote_records[i].reward);
            REQUIRE(remote_records[i].staleness <= 1);
        }

        // Flush the final in-flight experience, then the server replica
        // must equal the locally trained agent bit for bit.
        session.advance(stream.back().arrival_time_s + 1.0);
        auto* learner = session.manager().find_learner(remote_cfg.device_id, kind);
        REQUIRE(learner != nullptr);
        CHECK(learner->processed() == stream.size());
        const auto lw = local_client.parameters().weights;
        const auto sw = learner->parameters().weights;
        REQUIRE(lw.size() == sw.size());
        CHECK(std::memcmp(lw.data(), sw.data(), 4 * lw.size()) == 0);
    }
}

TEST_CASE("a slow downlink shows up as nonzero staleness") {
    const auto stream = make_stream(40, 13);
    auto environment = make_env();
    ClientConfig cfg;
    cfg.mode = TrainingMode::remote;
    ClientRuntime client(cfg);
    ServiceLinkConfig link;
    link.client_to_server_ms = 1800.0;  // ~2 decisions in flight at 1/s arrivals
    Session session(ServerConfig{}, link, false);
    const auto records = client.run(environment, stream, &session);

    uint64_t max_staleness = 0;
    for (const auto& r : records) max_staleness = std::max(max_staleness, r.staleness);
    CHECK(max_staleness >= 1);
}

TEST_CASE("forced actions bypass the policy and costs land in the ledger") {
    auto environment = make_env();
    ClientConfig cfg;
    cfg.mode = TrainingMode::local;
    cfg.force_action = 1;
    cfg.cost.train_time_ms = 3.5;
    cfg.cost.train_energy_j = 0.25;
    ClientRuntime client(cfg);
    const auto records = client.run(environment, make_stream(20), nullptr);
    for (const auto& r : records) {
        CHECK(r.action == 1);
        CHECK(r.train_ms == 3.5);
        CHECK(r.total_ms ==
              r.decision_ms + r.uplink_ms + r.processing_ms + r.downlink_ms + 3.5);
    }

    ClientConfig bad;
    bad.force_action = 5;
    CHECK_THROWS_AS(ClientRuntime{bad}, std::invalid_argument);
}

TEST_CASE("frame sockets carry framed streams across a local pair") {
    auto [a, b] = FrameSocket::local_pair();
    Rng rng(8);
    std::vector<wire::Frame> sent;
    for (int i = 0; i < 10; ++i) sent.push_back(experience_frame(make_exp(1, ModelKind::ac, i, rng)));

    std::thread sender([&a, &sent] {
        for (const auto& f : sent) a.send_frame(f);
    });
    std::vector<wire::Frame> got;
    while (got.size() < sent.size()) {
        auto frames = b.receive_some();
        REQUIRE_FALSE(frames.empty());
        got.insert(got.end(), frames.begin(), frames.end());
    }
    sender.join();
    REQUIRE(got.size() == sent.size());
    for (size_t i = 0; i < got.size(); ++i) REQUIRE(got[i] == sent[i]);
}
