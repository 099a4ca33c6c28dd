#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "offload/rng.hpp"

namespace offload::env {

// A scalar background signal (MEC load, link throughput) evolving over
// simulated time. Two modes:
//  - trace: piecewise-constant over user-supplied (time, value) points;
//  - walk:  bounded random walk, reflected at the bounds, advancing one
//    step per tick(); deterministic under its seed.
// Walk history is recorded per tick so a query at (t - delay) sees the
// value that held at that earlier time.
class SignalModel {
public:
    struct WalkParams {
        double lo = 0.0;
        double hi = 1.0;
        double step_size = 0.0;
        double start = 1.0;
        uint64_t seed = 0;
    };

    static SignalModel constant(double v);
    static SignalModel from_trace(std::vector<std::pair<double, double>> points);
    static SignalModel random_walk(const WalkParams& p);

    double value(double t) const;
    double delayed_value(double t, double delay_s) const;

    // Advance one step at simulated time now_s (no-op for traces).
    void tick(double now_s);

private:
    SignalModel() : rng_(0) {}

    enum class Mode { trace, walk };
    Mode mode_ = Mode::trace;
    std::vector<std::pair<double, double>> trace_;    // sorted by time
    std::vector<std::pair<double, double>> history_;  // walk samples
    WalkParams walk_;
    double current_ = 0.0;
    Rng rng_;
};

// Parses a line-delimited "time_s value" trace file ('#' comments allowed).
std::vector<std::pair<double, double>> load_trace_file(const std::string& path);

}  // namespace offload::env
