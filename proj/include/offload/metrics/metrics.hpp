#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "offload/env/env.hpp"
#include "offload/env/signal.hpp"
#include "offload/service/runtime.hpp"
#include "offload/taskgen/taskgen.hpp"

namespace offload::metrics {

// How a background signal (MEC load, link throughput) is configured.
struct SignalSpec {
    enum class Mode { constant, trace, walk };
    Mode mode = Mode::constant;
    double value = 0.0;                             // constant
    std::string trace_path;                         // trace from file...
    std::vector<std::pair<double, double>> points;  // ...or inline points
    env::SignalModel::WalkParams walk;              // bounded random walk
};

env::SignalModel build_signal(const SignalSpec& spec);

struct OutputConfig {
    std::string records_path;
    std::string summary_path;
    std::string capture_path;  // binary frame capture (remote mode traffic)
    std::string taskset_path;  // the generated base taskset, as text
};

// Everything one experiment needs, loadable from a JSON document. Every
// random decision traces back to a seed stored here; defaults are fixed
// constants, so two loads of one file behave identically.
struct ExperimentConfig {
    uint64_t horizon = 1000;            // number of tasks to run
    double mean_interarrival_s = 1.0;   // task arrival process mean
    uint64_t stream_seed = 7;           // arrival sampling seed
    taskgen::TaskSetConfig taskgen;
    env::EnvConfig env;
    bool energy_norm_auto = true;  // derive energy_norm_j from the taskset
    SignalSpec mec_load;  // constant 0 load unless configured
    SignalSpec link_throughput{SignalSpec::Mode::constant, 100.0};
    service::ClientConfig client;
    service::ServerConfig server;
    service::ServiceLinkConfig link;
    bool concurrent_pump = false;
    OutputConfig output;
};

// Parse/load with field-level diagnostics ("config: env.eta: ...").
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& origin);
ExperimentConfig load_experiment_config(const std::string& path);
void validate(const ExperimentConfig& cfg);

// Worst-case single-task local-execution energy (availability floored),
// the default normalizer that keeps success rewards above the failure
// penalty of -1.
double worst_case_local_energy(const env::EnvConfig& cfg,
                               const std::vector<taskgen::TaskSpec>& tasks);

using StepRecord = service::StepRecord;

struct RunSummary {
    uint64_t steps = 0;
    double cumulative_reward = 0.0;
    double success_rate = 0.0;
    double mean_energy_j = 0.0;
    double mean_latency_ms = 0.0;
    double p95_latency_ms = 0.0;
    double mean_staleness = 0.0;
    double train_ms_total = 0.0;
    uint64_t wire_bytes_sent = 0;
    uint64_t wire_bytes_received = 0;
    uint64_t frames_sent = 0;
    uint64_t frames_received = 0;
    std::string mode = "local";
    std::string model = "ac";
};

// The fixed CSV header emitted before the records.
extern const char* const kRecordsHeader;

// Aggregates the record-derived summary fields (wire/frame counters and
// the mode/model echo are the runner's to fill).
RunSummary records_to_summary(const std::vector<StepRecord>& records);

std::string render_records_csv(const std::vector<StepRecord>& records);
void emit_records(const std::vector<StepRecord>& records, const std::string& path);
std::vector<StepRecord> parse_records_csv(const std::string& text);
std::vector<StepRecord> load_records(const std::string& path);

std::string render_summary(const RunSummary& s);
void emit_summary(const RunSummary& s, const std::string& path);

struct RunResult {
    std::vector<StepRecord> records;
    RunSummary summary;
};

// Generates the workload, wires taskgen -> env -> agent (-> service when
// remote), runs `horizon` steps, writes any configured outputs.
// Bitwise reproducible per config.
RunResult run_experiment(const ExperimentConfig& cfg);

struct CompareResult {
    RunSummary local;
    RunSummary remote;
};

// Runs both training modes on identical seeds and workload. Any
// configured output paths gain a _local/_remote suffix.
CompareResult compare_modes(const ExperimentConfig& cfg);
std::string render_compare(const CompareResult& c);

}  // namespace offload::metrics
