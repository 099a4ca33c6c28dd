// Command-line front end: run one experiment, compare training modes,
// emit a taskset, or pretty-print a binary frame capture.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "offload/metrics/metrics.hpp"
#include "offload/taskgen/taskgen.hpp"
#include "offload/wire/wire.hpp"

namespace {

using namespace offload;

int cmd_run(const std::string& config_path) {
    const auto cfg = metrics::load_experiment_config(config_path);
    const auto result = metrics::run_experiment(cfg);
    std::cout << metrics::render_summary(result.summary);
    return 0;
}

int cmd_compare(const std::string& config_path) {
    const auto cfg = metrics::load_experiment_config(config_path);
    const auto result = metrics::compare_modes(cfg);
    std::cout << metrics::render_compare(result);
    return 0;
}

int cmd_taskgen(const std::string& config_path, const std::string& out_path) {
    const auto cfg = metrics::load_experiment_config(config_path);
    const auto tasks = taskgen::generate_taskset(cfg.taskgen);
    taskgen::write_taskset(tasks, out_path);
    double u = 0.0;
    for (const auto& t : tasks)
        u += t.compute_megacycles / (cfg.taskgen.cpu_speed_mhz * t.period_us * 1e-6);
    std::printf("tasks %zu\n", tasks.size());
    std::printf("total_utilization %.17g\n", u);
    std::printf("out %s\n", out_path.c_str());
    return 0;
}

const char* ack_status_name(wire::AckStatus s) {
    switch (s) {
        case wire::AckStatus::ok: return "ok";
        case wire::AckStatus::incomplete: return "incomplete";
        case wire::AckStatus::integrity_error: return "integrity_error";
        case wire::AckStatus::expired: return "expired";
    }
    return "?";
}

void print_frame(size_t index, const wire::Frame& f) {
    std::printf("frame %zu type %u topic %s payload %zu bytes", index,
                static_cast<unsigned>(f.msg_type), f.topic.c_str(), f.payload.size());
    const auto body = wire::decode_payload(f.msg_type, f.payload);
    if (!body) {
        std::printf("  [payload error: %s]\n", wire::to_string(body.error()));
        return;
    }
    if (const auto* e = std::get_if<Experience>(&*body)) {
        std::printf("  experience dev=%u kind=%s seq=%llu action=%u reward=%.9g done=%d\n",
                    e->device_id, kind_token(e->kind),
                    static_cast<unsigned long long>(e->sequence), e->action,
                    static_cast<double>(e->reward), e->done ? 1 : 0);
    } else if (const auto* w = std::get_if<wire::WeightsPayload>(&*body)) {
        std::printf("  weights dev=%u kind=%s version=%llu count=%zu\n", w->device_id,
                    kind_token(w->kind), static_cast<unsigned long long>(w->model_version),
                    w->weights.size());
    } else if (const auto* c = std::get_if<wire::ModelChunkPayload>(&*body)) {
        std::printf("  chunk dev=%u kind=%s upload=%llu index=%u/%u bytes=%zu\n", c->device_id,
                    kind_token(c->kind), static_cast<unsigned long long>(c->upload_id),
                    c->chunk_index, c->chunk_total, c->bytes.size());
    } else if (const auto* a = std::get_if<wire::ChunkAckPayload>(&*body)) {
        std::printf("  ack dev=%u kind=%s upload=%llu status=%s\n", a->device_id,
                    kind_token(a->kind), static_cast<unsigned long long>(a->upload_id),
                    ack_status_name(a->status));
    }
}

int cmd_wire_dump(const std::string& capture_path) {
    std::ifstream f(capture_path, std::ios::binary);
    if (!f) {
        std::cerr << "wire-dump: cannot open " << capture_path << "\n";
        return 1;
    }
    std::vector<uint8_t> bytes{std::istreambuf_iterator<char>(f),
                               std::istreambuf_iterator<char>()};
    wire::FrameStreamParser parser;
    const auto frames = parser.feed(bytes);
    for (size_t i = 0; i < frames.size(); ++i) print_frame(i, frames[i]);
    if (parser.failed()) {
        std::cerr << "wire-dump: stream error after " << frames.size()
                  << " frames: " << wire::to_string(parser.error()) << "\n";
        return 1;
    }
    if (parser.buffered() > 0) {
        std::cerr << "wire-dump: " << parser.buffered() << " trailing bytes (partial frame)\n";
        return 1;
    }
    std::printf("frames %zu\n", frames.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"task-offloading simulator"};
    app.require_subcommand(1);

    std::string run_config;
    auto* run = app.add_subcommand("run", "run one experiment and print its summary");
    run->add_option("--config", run_config, "experiment config (JSON)")->required();

    std::string cmp_config;
    auto* cmp = app.add_subcommand("compare", "run local and remote training on one workload");
    cmp->add_option("--config", cmp_config, "experiment config (JSON)")->required();

    std::string tg_config, tg_out;
    auto* tg = app.add_subcommand("taskgen", "generate a taskset file");
    tg->add_option("--config", tg_config, "experiment config (JSON)")->required();
    tg->add_option("--out", tg_out, "taskset output path")->required();

    std::string dump_path;
    auto* dump = app.add_subcommand("wire-dump", "pretty-print a binary frame capture");
    dump->add_option("capture", dump_path, "capture file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_config);
        if (cmp->parsed()) return cmd_compare(cmp_config);
        if (tg->parsed()) return cmd_taskgen(tg_config, tg_out);
        if (dump->parsed()) return cmd_wire_dump(dump_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
