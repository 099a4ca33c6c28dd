#include "offload/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace offload::metrics {

namespace {

using nlohmann::json;

[[noreturn]] void fail_field(const std::string& path, const std::string& msg) {
    throw std::runtime_error("config: " + path + ": " + msg);
}

const json* child(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return nullptr;
    return &*it;
}

json section(const json& j, const char* key) {
    const json* c = child(j, key);
    if (!c) return json::object();
    if (!c->is_object()) fail_field(key, "expected an object");
    return *c;
}

double get_num(const json& j, const std::string& sect, const char* key, double def) {
    const json* c = child(j, key);
    if (!c) return def;
    if (!c->is_number()) fail_field(sect + "." + key, "expected a number");
    return c->get<double>();
}

int64_t get_int(const json& j, const std::string& sect, const char* key, int64_t def) {
    const json* c = child(j, key);
    if (!c) return def;
    if (!c->is_number_integer()) fail_field(sect + "." + key, "expected an integer");
    return c->get<int64_t>();
}

uint64_t get_uint(const json& j, const std::string& sect, const char* key, uint64_t def) {
    const json* c = child(j, key);
    if (!c) return def;
    if (!c->is_number_unsigned() && !(c->is_number_integer() && c->get<int64_t>() >= 0))
        fail_field(sect + "." + key, "expected a nonnegative integer");
    return c->get<uint64_t>();
}

bool get_bool(const json& j, const std::string& sect, const char* key, bool def) {
    const json* c = child(j, key);
    if (!c) return def;
    if (!c->is_boolean()) fail_field(sect + "." + key, "expected true or false");
    return c->get<bool>();
}

std::string get_str(const json& j, const std::string& sect, const char* key,
                    const std::string& def) {
    const json* c = child(j, key);
    if (!c) return def;
    if (!c->is_string()) fail_field(sect + "." + key, "expected a string");
    return c->get<std::string>();
}

netem::NetemConfig parse_netem(const json& j, const std::string& sect) {
    netem::NetemConfig n;
    n.base_latency_ms = get_num(j, sect, "base_latency_ms", n.base_latency_ms);
    n.jitter_ms = get_num(j, sect, "jitter_ms", n.jitter_ms);
    n.loss_rate = get_num(j, sect, "loss_rate", n.loss_rate);
    n.corruption_rate = get_num(j, sect, "corruption_rate", n.corruption_rate);
    n.reorder_rate = get_num(j, sect, "reorder_rate", n.reorder_rate);
    n.duplicate_rate = get_num(j, sect, "duplicate_rate", n.duplicate_rate);
    n.seed = get_uint(j, sect, "seed", n.seed);
    if (const json* b = child(j, "burst")) {
        if (!b->is_object()) fail_field(sect + ".burst", "expected an object");
        netem::GilbertElliott ge;
        const std::string bs = sect + ".burst";
        ge.p_good_to_bad = get_num(*b, bs, "p_good_to_bad", ge.p_good_to_bad);
        ge.p_bad_to_good = get_num(*b, bs, "p_bad_to_good", ge.p_bad_to_good);
        ge.loss_in_bad = get_num(*b, bs, "loss_in_bad", ge.loss_in_bad);
        ge.loss_in_good = get_num(*b, bs, "loss_in_good", ge.loss_in_good);
        n.burst = ge;
    }
    return n;
}

SignalSpec parse_signal(const json& j, const std::string& sect, SignalSpec spec) {
    if (j.empty()) return spec;
    const std::string mode = get_str(j, sect, "mode", "constant");
    if (mode == "constant") {
        spec.mode = SignalSpec::Mode::constant;
        spec.value = get_num(j, sect, "value", spec.value);
    } else if (mode == "trace") {
        spec.mode = SignalSpec::Mode::trace;
        spec.trace_path = get_str(j, sect, "path", "");
        spec.points.clear();
        if (const json* pts = child(j, "points")) {
            if (!pts->is_array()) fail_field(sect + ".points", "expected an array");
            for (const auto& p : *pts) {
                if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                    fail_field(sect + ".points", "expected [time_s, value] pairs");
                spec.points.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
        }
        if (spec.trace_path.empty() && spec.points.empty())
            fail_field(sect, "trace mode needs a path or inline points");
    } else if (mode == "walk") {
        spec.mode = SignalSpec::Mode::walk;
        spec.walk.lo = get_num(j, sect, "lo", spec.walk.lo);
        spec.walk.hi = get_num(j, sect, "hi", spec.walk.hi);
        spec.walk.step_size = get_num(j, sect, "step_size", spec.walk.step_size);
        spec.walk.start = get_num(j, sect, "start", spec.walk.start);
        spec.walk.seed = get_uint(j, sect, "seed", spec.walk.seed);
    } else {
        fail_field(sect + ".mode", "expected constant, trace or walk");
    }
    return spec;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmtf(float v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
    return buf;
}

void write_file(const std::string& path, const std::string& content, bool binary = false) {
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string suffixed(const std::string& path, const char* suffix) {
    if (path.empty()) return path;
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

}  // namespace

env::SignalModel build_signal(const SignalSpec& spec) {
    switch (spec.mode) {
        case SignalSpec::Mode::constant:
            return env::SignalModel::constant(spec.value);
        case SignalSpec::Mode::trace:
            return env::SignalModel::from_trace(
                spec.trace_path.empty() ? spec.points : env::load_trace_file(spec.trace_path));
        case SignalSpec::Mode::walk:
            return env::SignalModel::random_walk(spec.walk);
    }
    throw std::logic_error("unreachable signal mode");
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config " + origin + ": " + e.what());
    }
    if (!j.is_object())
        throw std::runtime_error("config " + origin + ": top level must be an object");

    ExperimentConfig cfg;

    const json exp = section(j, "experiment");
    cfg.horizon = get_uint(exp, "experiment", "horizon", cfg.horizon);
    cfg.mean_interarrival_s =
        get_num(exp, "experiment", "mean_interarrival_s", cfg.mean_interarrival_s);
    cfg.stream_seed = get_uint(exp, "experiment", "stream_seed", cfg.stream_seed);
    cfg.client.device_id =
        static_cast<uint32_t>(get_uint(exp, "experiment", "device_id", cfg.client.device_id));
    const std::string mode = get_str(exp, "experiment", "training_mode", "local");
    if (mode == "local")
        cfg.client.mode = service::TrainingMode::local;
    else if (mode == "remote")
        cfg.client.mode = service::TrainingMode::remote;
    else
        fail_field("experiment.training_mode", "expected local or remote");
    const std::string model = get_str(exp, "experiment", "model", "ac");
    const auto kind = kind_from_token(model);
    if (!kind) fail_field("experiment.model", "expected ac or dqn");
    cfg.client.kind = *kind;

    const json agent = section(j, "agent");
    const auto gamma = static_cast<float>(get_num(agent, "agent", "gamma", 0.99));
    const auto lr = static_cast<float>(get_num(agent, "agent", "learning_rate", 1e-5));
    const uint64_t init_seed = get_uint(agent, "agent", "init_seed", 1);
    const uint64_t policy_seed = get_uint(agent, "agent", "policy_seed", 2);
    cfg.client.ac.gamma = gamma;
    cfg.client.ac.learning_rate = lr;
    cfg.client.ac.init_seed = init_seed;
    cfg.client.ac.policy_seed = policy_seed;
    cfg.client.dqn.gamma = gamma;
    cfg.client.dqn.learning_rate = lr;
    cfg.client.dqn.init_seed = init_seed;
    cfg.client.dqn.explore_seed = policy_seed;
    cfg.client.dqn.epsilon_start =
        static_cast<float>(get_num(agent, "agent", "epsilon_start", 1.0));
    cfg.client.dqn.epsilon_decay =
        static_cast<float>(get_num(agent, "agent", "epsilon_decay", 0.999));
    cfg.client.dqn.epsilon_min = static_cast<float>(get_num(agent, "agent", "epsilon_min", 0.05));
    cfg.server.learner.ac = cfg.client.ac;
    cfg.server.learner.dqn = cfg.client.dqn;

    const json env_j = section(j, "env");
    const json dev = section(env_j, "device");
    cfg.env.device.cpu_mhz = get_num(dev, "env.device", "cpu_mhz", cfg.env.device.cpu_mhz);
    cfg.env.device.power_compute_w =
        get_num(dev, "env.device", "power_compute_w", cfg.env.device.power_compute_w);
    cfg.env.device.power_tx_w = get_num(dev, "env.device", "power_tx_w", cfg.env.device.power_tx_w);
    cfg.env.device.power_idle_w =
        get_num(dev, "env.device", "power_idle_w", cfg.env.device.power_idle_w);
    cfg.env.device.decision_time_ms =
        get_num(dev, "env.device", "decision_time_ms", cfg.env.device.decision_time_ms);
    cfg.env.mec_cpu_mhz = get_num(env_j, "env", "mec_cpu_mhz", cfg.env.mec_cpu_mhz);
    cfg.env.cloud_cpu_mhz = get_num(env_j, "env", "cloud_cpu_mhz", cfg.env.cloud_cpu_mhz);
    cfg.env.eta = get_num(env_j, "env", "eta", cfg.env.eta);
    cfg.env.result_payload_bytes =
        get_int(env_j, "env", "result_payload_bytes", cfg.env.result_payload_bytes);
    cfg.env.r_floor = get_num(env_j, "env", "r_floor", cfg.env.r_floor);
    cfg.env.mec_query_delay_ms =
        get_num(env_j, "env", "mec_query_delay_ms", cfg.env.mec_query_delay_ms);
    cfg.env.cloud_retries =
        static_cast<int>(get_int(env_j, "env", "cloud_retries", cfg.env.cloud_retries));
    cfg.env.local_task_share = get_num(env_j, "env", "local_task_share", cfg.env.local_task_share);
    const json norm = section(env_j, "norm");
    cfg.env.norm.throughput_max =
        get_num(norm, "env.norm", "throughput_max", cfg.env.norm.throughput_max);
    cfg.env.norm.compute_max = get_num(norm, "env.norm", "compute_max", cfg.env.norm.compute_max);
    cfg.env.norm.deadline_max =
        get_num(norm, "env.norm", "deadline_max", cfg.env.norm.deadline_max);
    if (const json* en = child(env_j, "energy_norm_j")) {
        if (en->is_string() && en->get<std::string>() == "auto") {
            cfg.energy_norm_auto = true;
        } else if (en->is_number()) {
            cfg.energy_norm_auto = false;
            cfg.env.energy_norm_j = en->get<double>();
        } else {
            fail_field("env.energy_norm_j", "expected a number or \"auto\"");
        }
    }
    cfg.env.cloud_netem = parse_netem(section(env_j, "netem"), "env.netem");

    const json tg = section(j, "taskgen");
    cfg.taskgen.total_utilization =
        get_num(tg, "taskgen", "total_utilization", cfg.taskgen.total_utilization);
    cfg.taskgen.n_tasks = static_cast<int>(get_int(tg, "taskgen", "n_tasks", cfg.taskgen.n_tasks));
    cfg.taskgen.min_period_us = get_num(tg, "taskgen", "min_period_us", cfg.taskgen.min_period_us);
    cfg.taskgen.max_period_us = get_num(tg, "taskgen", "max_period_us", cfg.taskgen.max_period_us);
    cfg.taskgen.period_step_us =
        get_num(tg, "taskgen", "period_step_us", cfg.taskgen.period_step_us);
    cfg.taskgen.seed = get_uint(tg, "taskgen", "seed", cfg.taskgen.seed);
    cfg.taskgen.cpu_speed_mhz =
        get_num(tg, "taskgen", "cpu_speed_mhz", cfg.env.device.cpu_mhz);
    cfg.taskgen.cores = static_cast<int>(get_int(tg, "taskgen", "cores", cfg.taskgen.cores));
    cfg.taskgen.beta_low = get_num(tg, "taskgen", "beta_low", cfg.taskgen.beta_low);
    cfg.taskgen.beta_high = get_num(tg, "taskgen", "beta_high", cfg.taskgen.beta_high);
    cfg.taskgen.payload_bytes_per_megacycle = get_num(
        tg, "taskgen", "payload_bytes_per_megacycle", cfg.taskgen.payload_bytes_per_megacycle);

    const json sig = section(j, "signals");
    cfg.mec_load = parse_signal(section(sig, "mec_load"), "signals.mec_load", cfg.mec_load);
    cfg.link_throughput = parse_signal(section(sig, "link_throughput"),
                                       "signals.link_throughput", cfg.link_throughput);

    const json svc = section(j, "service");
    const json link = section(svc, "link");
    cfg.link.client_to_server_ms =
        get_num(link, "service.link", "client_to_server_ms", cfg.link.client_to_server_ms);
    cfg.link.server_to_client_ms =
        get_num(link, "service.link", "server_to_client_ms", cfg.link.server_to_client_ms);
    cfg.link.throughput_mbps =
        get_num(link, "service.link", "throughput_mbps", cfg.link.throughput_mbps);
    const json cost = section(svc, "cost");
    cfg.client.cost.train_time_ms =
        get_num(cost, "service.cost", "train_time_ms", cfg.client.cost.train_time_ms);
    cfg.client.cost.train_energy_j =
        get_num(cost, "service.cost", "train_energy_j", cfg.client.cost.train_energy_j);
    cfg.client.cost.publish_time_ms =
        get_num(cost, "service.cost", "publish_time_ms", cfg.client.cost.publish_time_ms);
    cfg.client.cost.publish_energy_j =
        get_num(cost, "service.cost", "publish_energy_j", cfg.client.cost.publish_energy_j);
    cfg.client.upload_chunk_bytes = static_cast<size_t>(
        get_uint(svc, "service", "chunk_bytes", cfg.client.upload_chunk_bytes));
    cfg.client.upload_initial_model =
        get_bool(svc, "service", "upload_initial_model", cfg.client.upload_initial_model);
    cfg.server.upload_timeout_s =
        get_num(svc, "service", "upload_timeout_s", cfg.server.upload_timeout_s);
    cfg.server.max_concurrent_learners = static_cast<int>(
        get_int(svc, "service", "max_concurrent_learners", cfg.server.max_concurrent_learners));
    cfg.concurrent_pump = get_bool(svc, "service", "concurrent_pump", cfg.concurrent_pump);

    const json debug = section(j, "debug");
    if (const json* fa = child(debug, "force_action")) {
        if (!fa->is_number_integer()) fail_field("debug.force_action", "expected an integer");
        cfg.client.force_action = static_cast<int>(fa->get<int64_t>());
    }

    const json out = section(j, "output");
    cfg.output.records_path = get_str(out, "output", "records", "");
    cfg.output.summary_path = get_str(out, "output", "summary", "");
    cfg.output.capture_path = get_str(out, "output", "capture", "");
    cfg.output.taskset_path = get_str(out, "output", "taskset", "");

    validate(cfg);
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_file(path), path);
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.mean_interarrival_s <= 0)
        fail_field("experiment.mean_interarrival_s", "must be positive");
    env::validate(cfg.env);
    if (cfg.client.force_action &&
        (*cfg.client.force_action < 0 || *cfg.client.force_action > 2))
        fail_field("debug.force_action", "must be 0, 1 or 2");
    if (cfg.link.client_to_server_ms < 0 || cfg.link.server_to_client_ms < 0)
        fail_field("service.link", "latencies must be >= 0");
    if (cfg.link.throughput_mbps < 0)
        fail_field("service.link.throughput_mbps", "must be >= 0");
    if (cfg.client.upload_chunk_bytes == 0)
        fail_field("service.chunk_bytes", "must be positive");
    if (cfg.client.cost.train_time_ms < 0 || cfg.client.cost.train_energy_j < 0 ||
        cfg.client.cost.publish_time_ms < 0 || cfg.client.cost.publish_energy_j < 0)
        fail_field("service.cost", "costs must be >= 0");
    if (cfg.server.upload_timeout_s <= 0)
        fail_field("service.upload_timeout_s", "must be positive");
}

double worst_case_local_energy(const env::EnvConfig& cfg,
                               const std::vector<taskgen::TaskSpec>& tasks) {
    // Slowest case: availability at the floor. C [megacycles] over
    // cpu [MHz] is already seconds.
    double worst = 0.0;
    for (const auto& t : tasks) {
        const double proc_s = t.compute_megacycles / (cfg.device.cpu_mhz * cfg.r_floor);
        const double e = cfg.device.power_compute_w * proc_s +
                         cfg.device.power_idle_w * cfg.device.decision_time_ms / 1000.0;
        worst = std::max(worst, e);
    }
    return worst > 0 ? worst : 1.0;
}

const char* const kRecordsHeader =
    "step,state_ue,state_mec,state_throughput,state_compute,state_deadline,action,reward,"
    "energy_j,decision_ms,uplink_ms,processing_ms,downlink_ms,train_ms,total_ms,success,"
    "staleness,weight_version";

RunSummary records_to_summary(const std::vector<StepRecord>& records) {
    RunSummary s;
    s.steps = records.size();
    if (records.empty()) return s;
    double reward = 0, energy = 0, latency = 0, stale = 0, train = 0;
    size_t successes = 0;
    std::vector<double> totals;
    totals.reserve(records.size());
    for (const auto& r : records) {
        reward += r.reward;
        energy += r.energy_j;
        latency += r.total_ms;
        stale += static_cast<double>(r.staleness);
        train += r.train_ms;
        successes += r.success ? 1 : 0;
        totals.push_back(r.total_ms);
    }
    const double n = static_cast<double>(records.size());
    s.cumulative_reward = reward;
    s.success_rate = static_cast<double>(successes) / n;
    s.mean_energy_j = energy / n;
    s.mean_latency_ms = latency / n;
    s.mean_staleness = stale / n;
    s.train_ms_total = train;
    std::sort(totals.begin(), totals.end());
    const size_t rank = static_cast<size_t>(std::ceil(0.95 * n));  // nearest-rank p95
    s.p95_latency_ms = totals[std::min(totals.size() - 1, rank == 0 ? 0 : rank - 1)];
    return s;
}

std::string render_records_csv(const std::vector<StepRecord>& records) {
    std::string out(kRecordsHeader);
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.step);
        for (float v : r.state) {
            out += ',';
            out += fmtf(v);
        }
        out += ',';
        out += std::to_string(r.action);
        out += ',';
        out += fmt(r.reward);
        out += ',';
        out += fmt(r.energy_j);
        out += ',';
        out += fmt(r.decision_ms);
        out += ',';
        out += fmt(r.uplink_ms);
        out += ',';
        out += fmt(r.processing_ms);
        out += ',';
        out += fmt(r.downlink_ms);
        out += ',';
        out += fmt(r.train_ms);
        out += ',';
        out += fmt(r.total_ms);
        out += ',';
        out += r.success ? '1' : '0';
        out += ',';
        out += std::to_string(r.staleness);
        out += ',';
        out += std::to_string(r.weight_version);
        out += '\n';
    }
    return out;
}

void emit_records(const std::vector<StepRecord>& records, const std::string& path) {
    write_file(path, render_records_csv(records));
}

std::vector<StepRecord> parse_records_csv(const std::string& text) {
    std::vector<StepRecord> records;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kRecordsHeader)
        throw std::runtime_error("records: unexpected header line");
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            const size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 18)
            throw std::runtime_error("records line " + std::to_string(lineno) +
                                     ": expected 18 fields");
        StepRecord r;
        size_t k = 0;
        r.step = std::strtoull(fields[k++].c_str(), nullptr, 10);
        for (float& v : r.state) v = std::strtof(fields[k++].c_str(), nullptr);
        r.action = static_cast<int>(std::strtol(fields[k++].c_str(), nullptr, 10));
        r.reward = std::strtod(fields[k++].c_str(), nullptr);
        r.energy_j = std::strtod(fields[k++].c_str(), nullptr);
        r.decision_ms = std::strtod(fields[k++].c_str(), nullptr);
        r.uplink_ms = std::strtod(fields[k++].c_str(), nullptr);
        r.processing_ms = std::strtod(fields[k++].c_str(), nullptr);
        r.downlink_ms = std::strtod(fields[k++].c_str(), nullptr);
        r.train_ms = std::strtod(fields[k++].c_str(), nullptr);
        r.total_ms = std::strtod(fields[k++].c_str(), nullptr);
        r.success = fields[k++] == "1";
        r.staleness = std::strtoull(fields[k++].c_str(), nullptr, 10);
        r.weight_version = std::strtoull(fields[k++].c_str(), nullptr, 10);
        records.push_back(r);
    }
    return records;
}

std::vector<StepRecord> load_records(const std::string& path) {
    return parse_records_csv(read_file(path));
}

std::string render_summary(const RunSummary& s) {
    std::string out;
    auto kv = [&out](const char* key, const std::string& value) {
        out += key;
        out += ' ';
        out += value;
        out += '\n';
    };
    kv("steps", std::to_string(s.steps));
    kv("mode", s.mode);
    kv("model", s.model);
    kv("cumulative_reward", fmt(s.cumulative_reward));
    kv("success_rate", fmt(s.success_rate));
    kv("mean_energy_j", fmt(s.mean_energy_j));
    kv("mean_latency_ms", fmt(s.mean_latency_ms));
    kv("p95_latency_ms", fmt(s.p95_latency_ms));
    kv("mean_staleness", fmt(s.mean_staleness));
    kv("train_ms_total", fmt(s.train_ms_total));
    kv("wire_bytes_sent", std::to_string(s.wire_bytes_sent));
    kv("wire_bytes_received", std::to_string(s.wire_bytes_received));
    kv("frames_sent", std::to_string(s.frames_sent));
    kv("frames_received", std::to_string(s.frames_received));
    return out;
}

void emit_summary(const RunSummary& s, const std::string& path) {
    write_file(path, render_summary(s));
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    ExperimentConfig c = cfg;

    const auto base_tasks = taskgen::generate_taskset(c.taskgen);
    const auto stream = taskgen::task_stream_n(base_tasks, c.horizon, c.stream_seed,
                                               c.mean_interarrival_s);
    if (c.energy_norm_auto)
        c.env.energy_norm_j = worst_case_local_energy(c.env, base_tasks);

    env::Environment environment(c.env, build_signal(c.mec_load),
                                 build_signal(c.link_throughput));
    service::ClientRuntime client(c.client);

    const bool remote = c.client.mode == service::TrainingMode::remote;
    std::optional<service::Session> session;
    std::optional<service::Broker::SubscriberId> capture_tap;
    if (remote) {
        session.emplace(c.server, c.link, c.concurrent_pump);
        if (!c.output.capture_path.empty())
            capture_tap = session->broker().subscribe("+/+/+/+/+");
    }

    RunResult result;
    result.records = client.run(environment, stream, session ? &*session : nullptr);
    result.summary = records_to_summary(result.records);
    result.summary.mode = remote ? "remote" : "local";
    result.summary.model = kind_token(c.client.kind);
    result.summary.wire_bytes_sent = client.wire_bytes_sent();
    result.summary.wire_bytes_received = client.wire_bytes_received();
    result.summary.frames_sent = client.frames_sent();
    result.summary.frames_received = client.frames_received();

    if (!c.output.taskset_path.empty()) taskgen::write_taskset(base_tasks, c.output.taskset_path);
    if (!c.output.records_path.empty()) emit_records(result.records, c.output.records_path);
    if (!c.output.summary_path.empty()) emit_summary(result.summary, c.output.summary_path);
    if (capture_tap) {
        std::string bytes;
        while (auto f = session->broker().poll(*capture_tap)) {
            const auto encoded = wire::encode_frame(*f);
            bytes.append(reinterpret_cast<const char*>(encoded.data()), encoded.size());
        }
        write_file(c.output.capture_path, bytes, /*binary=*/true);
    }
    return result;
}

CompareResult compare_modes(const ExperimentConfig& cfg) {
    auto with_mode = [&cfg](service::TrainingMode mode, const char* suffix) {
        ExperimentConfig c = cfg;
        c.client.mode = mode;
        c.output.records_path = suffixed(cfg.output.records_path, suffix);
        c.output.summary_path = suffixed(cfg.output.summary_path, suffix);
        c.output.capture_path = suffixed(cfg.output.capture_path, suffix);
        c.output.taskset_path = suffixed(cfg.output.taskset_path, suffix);
        return c;
    };
    CompareResult result;
    result.local = run_experiment(with_mode(service::TrainingMode::local, "_local")).summary;
    result.remote = run_experiment(with_mode(service::TrainingMode::remote, "_remote")).summary;
    return result;
}

std::string render_compare(const CompareResult& c) {
    std::string out = "# metric local remote delta\n";
    auto row = [&out](const char* name, double l, double r) {
        out += name;
        out += ' ';
        out += fmt(l);
        out += ' ';
        out += fmt(r);
        out += ' ';
        out += fmt(r - l);
        out += '\n';
    };
    row("cumulative_reward", c.local.cumulative_reward, c.remote.cumulative_reward);
    row("success_rate", c.local.success_rate, c.remote.success_rate);
    row("mean_energy_j", c.local.mean_energy_j, c.remote.mean_energy_j);
    row("mean_latency_ms", c.local.mean_latency_ms, c.remote.mean_latency_ms);
    row("p95_latency_ms", c.local.p95_latency_ms, c.remote.p95_latency_ms);
    row("mean_staleness", c.local.mean_staleness, c.remote.mean_staleness);
    row("train_ms_total", c.local.train_ms_total, c.remote.train_ms_total);
    row("wire_bytes_sent", static_cast<double>(c.local.wire_bytes_sent),
        static_cast<double>(c.remote.wire_bytes_sent));
    row("wire_bytes_received", static_cast<double>(c.local.wire_bytes_received),
        static_cast<double>(c.remote.wire_bytes_received));
    return out;
}

}  // namespace offload::metrics
