#include "offload/taskgen/taskgen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "offload/rng.hpp"

namespace offload::taskgen {

namespace {

void validate(const TaskSetConfig& cfg) {
    if (cfg.n_tasks <= 0) throw std::invalid_argument("taskgen: n_tasks must be positive");
    if (!(cfg.min_period_us > 0) || cfg.min_period_us > cfg.max_period_us) {
        throw std::invalid_argument("taskgen: require 0 < min_period <= max_period");
    }
    if (!(cfg.period_step_us > 0)) throw std::invalid_argument("taskgen: period_step must be positive");
    if (!(cfg.beta_low < cfg.beta_high) || cfg.beta_low <= 0) {
        throw std::invalid_argument("taskgen: require 0 < beta_low < beta_high");
    }
    if (cfg.total_utilization > cfg.cores) {
        throw std::invalid_argument("taskgen: total utilization exceeds core count");
    }
    if (!(cfg.total_utilization > 0)) {
        throw std::invalid_argument("taskgen: total utilization must be positive");
    }
    if (!(cfg.cpu_speed_mhz > 0)) throw std::invalid_argument("taskgen: cpu speed must be positive");
}

// One UUniFast pass. Returns per-task utilizations summing to total.
std::vector<double> uunifast(int n, double total, Rng& rng) {
    std::vector<double> u(n);
    double sum = total;
    for (int i = 0; i < n - 1; ++i) {
        const double next = sum * std::pow(rng.u01(), 1.0 / (n - 1 - i));
        u[i] = sum - next;
        sum = next;
    }
    u[n - 1] = sum;
    return u;
}

}  // namespace

std::vector<TaskSpec> generate_taskset(const TaskSetConfig& cfg) {
    validate(cfg);
    Rng rng(cfg.seed);

    // UUniFast-Discard: redraw the whole set whenever any task exceeds
    // full-core utilization.
    std::vector<double> utils;
    for (int attempt = 0; attempt < 10000; ++attempt) {
        utils = uunifast(cfg.n_tasks, cfg.total_utilization, rng);
        bool ok = true;
        for (double u : utils) {
            if (u > 1.0) {
                ok = false;
                break;
            }
        }
        if (ok) break;
        utils.clear();
    }
    if (utils.empty()) {
        throw std::runtime_error("taskgen: UUniFast-Discard failed to produce a feasible set");
    }

    const uint64_t grid_slots =
        static_cast<uint64_t>(std::floor((cfg.max_period_us - cfg.min_period_us) /
                                         cfg.period_step_us)) + 1;

    std::vector<TaskSpec> tasks(cfg.n_tasks);
    for (int i = 0; i < cfg.n_tasks; ++i) {
        TaskSpec& t = tasks[i];
        t.task_id = i;
        t.period_us = cfg.min_period_us + static_cast<double>(rng.below(grid_slots)) *
                                              cfg.period_step_us;
        // WCET in seconds times MHz gives megacycles.
        t.compute_megacycles = utils[i] * t.period_us * 1e-6 * cfg.cpu_speed_mhz;
        const double beta = rng.uniform(cfg.beta_low, cfg.beta_high);
        t.deadline_ms = t.compute_megacycles / beta;
        t.payload_bytes = std::max<long long>(
            1, static_cast<long long>(std::llround(t.compute_megacycles *
                                                   cfg.payload_bytes_per_megacycle)));
        t.arrival_time_s = 0.0;
    }
    return tasks;
}

std::vector<TaskSpec> task_stream(const std::vector<TaskSpec>& tasks, double horizon_s,
                                  uint64_t seed, double mean_interarrival_s) {
    if (tasks.empty()) throw std::invalid_argument("task_stream: empty task list");
    std::vector<TaskSpec> out;
    Rng rng(seed);
    double t = 0.0;
    for (;;) {
        t += std::max(rng.exponential(mean_interarrival_s), 1e-12);
        if (t >= horizon_s) break;
        TaskSpec task = tasks[rng.below(tasks.size())];
        task.arrival_time_s = t;
        out.push_back(task);
    }
    return out;
}

std::vector<TaskSpec> task_stream_n(const std::vector<TaskSpec>& tasks, size_t n, uint64_t seed,
                                    double mean_interarrival_s) {
    if (tasks.empty()) throw std::invalid_argument("task_stream: empty task list");
    std::vector<TaskSpec> out;
    out.reserve(n);
    Rng rng(seed);
    double t = 0.0;
    while (out.size() < n) {
        t += std::max(rng.exponential(mean_interarrival_s), 1e-12);
        TaskSpec task = tasks[rng.below(tasks.size())];
        task.arrival_time_s = t;
        out.push_back(task);
    }
    return out;
}

void write_taskset(const std::vector<TaskSpec>& tasks, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_taskset: cannot open " + path);
    f << "# id compute_megacycles period_us deadline_ms payload_bytes arrival_s\n";
    char line[256];
    for (const auto& t : tasks) {
        std::snprintf(line, sizeof(line), "%d %.17g %.17g %.17g %lld %.17g\n", t.task_id,
                      t.compute_megacycles, t.period_us, t.deadline_ms, t.payload_bytes,
                      t.arrival_time_s);
        f << line;
    }
    if (!f) throw std::runtime_error("write_taskset: write failed for " + path);
}

std::vector<TaskSpec> read_taskset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_taskset: cannot open " + path);
    std::vector<TaskSpec> tasks;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        TaskSpec t;
        if (!(is >> t.task_id >> t.compute_megacycles >> t.period_us >> t.deadline_ms >>
              t.payload_bytes >> t.arrival_time_s)) {
            throw std::runtime_error("read_taskset: malformed line: " + line);
        }
        tasks.push_back(t);
    }
    return tasks;
}

}  // namespace offload::taskgen
