#include "offload/env/signal.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace offload::env {

SignalModel SignalModel::constant(double v) {
    return from_trace({{0.0, v}});
}

SignalModel SignalModel::from_trace(std::vector<std::pair<double, double>> points) {
    if (points.empty()) throw std::invalid_argument("SignalModel: empty trace");
    std::sort(points.begin(), points.end());
    SignalModel m;
    m.mode_ = Mode::trace;
    m.trace_ = std::move(points);
    return m;
}

SignalModel SignalModel::random_walk(const WalkParams& p) {
    if (!(p.lo <= p.hi)) throw std::invalid_argument("SignalModel: walk bounds inverted");
    if (p.step_size < 0) throw std::invalid_argument("SignalModel: negative step size");
    SignalModel m;
    m.mode_ = Mode::walk;
    m.walk_ = p;
    m.current_ = std::clamp(p.start, p.lo, p.hi);
    m.rng_ = Rng(p.seed);
    m.history_.push_back({-1e300, m.current_});
    return m;
}

double SignalModel::value(double t) const {
    if (mode_ == Mode::walk) return current_;
    // last trace point with time <= t; before the first point, its value
    auto it = std::upper_bound(trace_.begin(), trace_.end(), std::make_pair(t, 1e300));
    if (it == trace_.begin()) return trace_.front().second;
    return std::prev(it)->second;
}

double SignalModel::delayed_value(double t, double delay_s) const {
    const double q = t - delay_s;
    if (mode_ == Mode::trace) return value(q);
    auto it = std::upper_bound(history_.begin(), history_.end(), std::make_pair(q, 1e300));
    if (it == history_.begin()) return history_.front().second;
    return std::prev(it)->second;
}

void SignalModel::tick(double now_s) {
    if (mode_ != Mode::walk || walk_.step_size == 0.0) return;
    double v = current_ + rng_.uniform(-walk_.step_size, walk_.step_size);
    // reflect at the bounds
    for (int guard = 0; guard < 64 && (v < walk_.lo || v > walk_.hi); ++guard) {
        if (v > walk_.hi) v = 2.0 * walk_.hi - v;
        if (v < walk_.lo) v = 2.0 * walk_.lo - v;
    }
    current_ = std::clamp(v, walk_.lo, walk_.hi);
    history_.push_back({now_s, current_});
}

std::vector<std::pair<double, double>> load_trace_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_trace_file: cannot open " + path);
    std::vector<std::pair<double, double>> pts;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        double t, v;
        if (!(is >> t >> v)) {
            throw std::runtime_error("load_trace_file: malformed line: " + line);
        }
        pts.push_back({t, v});
    }
    if (pts.empty()) throw std::runtime_error("load_trace_file: no samples in " + path);
    return pts;
}

}  // namespace offload::env
