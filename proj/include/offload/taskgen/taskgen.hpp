#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace offload::taskgen {

struct TaskSetConfig {
    double total_utilization = 3.9;
    int n_tasks = 500;
    double min_period_us = 1e5;
    double max_period_us = 1e8;
    double period_step_us = 1000;
    uint64_t seed = 50;
    double cpu_speed_mhz = 1200.048;
    int cores = 4;
    double beta_low = 9.0;
    double beta_high = 11.0;
    double payload_bytes_per_megacycle = 2048.0;
};

struct TaskSpec {
    int task_id = 0;
    double compute_megacycles = 0.0;  // C
    double period_us = 0.0;
    double deadline_ms = 0.0;  // delta = C / beta, beta ~ U[beta_low, beta_high]
    long long payload_bytes = 0;
    double arrival_time_s = 0.0;
};

// Synthetic taskset with the aggregate parameters of a periodic-task
// generator: per-task utilizations from UUniFast-Discard (redraw whole
// sets containing any u_i > 1), periods uniform on the configured grid,
// C_i = u_i * period_i(s) * cpu_speed_mhz, deadline C_i / beta_i.
// Deterministic under cfg.seed. Throws std::invalid_argument on an
// infeasible config (utilization above core count, bad bounds).
std::vector<TaskSpec> generate_taskset(const TaskSetConfig& cfg);

// Arrival sequence over a time horizon: exponential inter-arrival times
// (given mean), task specs chosen uniformly. Arrival times strictly
// increase; deterministic under seed.
std::vector<TaskSpec> task_stream(const std::vector<TaskSpec>& tasks, double horizon_s,
                                  uint64_t seed, double mean_interarrival_s = 1.0);

// Same process, but emits exactly n arrivals.
std::vector<TaskSpec> task_stream_n(const std::vector<TaskSpec>& tasks, size_t n, uint64_t seed,
                                    double mean_interarrival_s = 1.0);

// Text persistence, one task per line:
//   id compute_megacycles period_us deadline_ms payload_bytes arrival_s
// Numbers carry round-trip precision; '#' starts a comment line.
void write_taskset(const std::vector<TaskSpec>& tasks, const std::string& path);
std::vector<TaskSpec> read_taskset(const std::string& path);

}  // namespace offload::taskgen
