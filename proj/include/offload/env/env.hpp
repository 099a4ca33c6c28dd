#pragma once

#include <cstdint>
#include <vector>

#include "offload/env/signal.hpp"
#include "offload/netem/netem.hpp"
#include "offload/taskgen/taskgen.hpp"
#include "offload/types.hpp"

namespace offload::env {

// The raw 5-tuple the agent observes for one incoming task:
// UE availability, MEC availability, link throughput, task compute size,
// task deadline.
struct ObservedState {
    double r_ue = 1.0;
    double r_mec = 1.0;
    double throughput_mbps = 0.0;
    double compute_megacycles = 0.0;
    double deadline_ms = 0.0;
};

struct DeviceProfile {
    double cpu_mhz = 1200.048;
    double power_compute_w = 4.0;
    double power_tx_w = 2.5;
    double power_idle_w = 1.2;
    double decision_time_ms = 1.0;
};

struct NormBounds {
    double throughput_max = 200.0;
    double compute_max = 2000.0;
    double deadline_max = 500.0;
};

struct EnvConfig {
    DeviceProfile device;
    double mec_cpu_mhz = 2000.0;
    double cloud_cpu_mhz = 2500.0;
    double eta = -1.0;                  // penalty on deadline miss / failed delivery
    long long result_payload_bytes = 1024;
    NormBounds norm;
    double r_floor = 0.05;              // availability floor guarding division
    double mec_query_delay_ms = 0.0;    // staleness of the MEC load reading
    double energy_norm_j = 1.0;         // divides energy before entering the reward
    int cloud_retries = 1;              // extra attempts after a lost/corrupted transfer
    double local_task_share = 0.25;     // UE fraction a running local task occupies
    netem::NetemConfig cloud_netem;
};

// Latency/energy outcome of one execution route. delivered=false marks a
// transfer that never made it (no link, or loss beyond the retry budget);
// its latency fields cover only what actually happened.
struct ExecResult {
    double uplink_ms = 0.0;
    double processing_ms = 0.0;
    double downlink_ms = 0.0;
    double energy_j = 0.0;
    bool delivered = true;
};

struct StepOutcome {
    int action = 0;
    double decision_ms = 0.0;
    double uplink_ms = 0.0;
    double processing_ms = 0.0;
    double downlink_ms = 0.0;
    double total_ms = 0.0;  // sum of the four parts
    double energy_j = 0.0;
    bool success = false;
    double reward = 0.0;
    ObservedState next_state;
};

// Scales an observation into the [0,1]^5 vector the networks consume.
StateVec normalize_state(const ObservedState& s, const NormBounds& b);

// The offloading MDP: one logical timeline, one task per step. observe()
// snapshots the state an arriving task sees; step() executes the chosen
// route, prices it in latency and energy, applies the reward dichotomy
// (-normalized energy on success, eta on failure), advances the
// background load/link models one tick, and reports the next snapshot.
//
// next_state keeps the just-executed task's compute/deadline fields; the
// resource fields are the post-step values.
class Environment {
public:
    explicit Environment(EnvConfig cfg, SignalModel mec_load, SignalModel link_throughput);

    ObservedState observe(const taskgen::TaskSpec& task);

    // action: 0 local, 1 MEC, 2 cloud. Throws std::invalid_argument on
    // any other value, leaving the environment untouched.
    StepOutcome step(const taskgen::TaskSpec& task, int action);

    ExecResult execute_local(const taskgen::TaskSpec& task);
    ExecResult execute_mec(const taskgen::TaskSpec& task);
    ExecResult execute_cloud(const taskgen::TaskSpec& task);

    // One tick of the background models (also called by step()).
    void advance_background();

    double now_s() const { return now_s_; }
    const EnvConfig& config() const { return cfg_; }
    netem::Netem& cloud_netem() { return netem_; }

private:
    struct LocalRun {
        double finish_s;
        double share;
    };

    double ue_availability() const;
    double mec_availability() const;
    double current_throughput() const;
    void advance_to(double t);

    EnvConfig cfg_;
    SignalModel mec_load_;
    SignalModel link_;
    netem::Netem netem_;
    std::vector<LocalRun> local_runs_;
    double now_s_ = 0.0;
    uint64_t transfer_counter_ = 0;
};

void validate(const EnvConfig& cfg);

}  // namespace offload::env
