#include "offload/env/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace offload::env {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("env config: " + what);
}

double ms_to_s(double ms) { return ms / 1000.0; }

// Serialization time of a payload over the radio link.
double serialize_ms(long long bytes, double throughput_mbps) {
    return static_cast<double>(bytes) * 8.0 / (throughput_mbps * 1000.0);
}

}  // namespace

void validate(const EnvConfig& cfg) {
    require(cfg.device.cpu_mhz > 0, "device cpu_mhz must be positive");
    require(cfg.device.power_compute_w > 0, "power_compute_w must be positive");
    require(cfg.device.power_tx_w > 0, "power_tx_w must be positive");
    require(cfg.device.power_idle_w > 0, "power_idle_w must be positive");
    require(cfg.device.decision_time_ms >= 0, "decision_time_ms must be >= 0");
    require(cfg.mec_cpu_mhz > 0, "mec_cpu_mhz must be positive");
    require(cfg.cloud_cpu_mhz > 0, "cloud_cpu_mhz must be positive");
    require(cfg.eta < 0, "eta must be strictly negative");
    require(cfg.result_payload_bytes >= 0, "result_payload_bytes must be >= 0");
    require(cfg.norm.throughput_max > 0, "throughput_max must be positive");
    require(cfg.norm.compute_max > 0, "compute_max must be positive");
    require(cfg.norm.deadline_max > 0, "deadline_max must be positive");
    require(cfg.r_floor > 0 && cfg.r_floor <= 1, "r_floor must be in (0,1]");
    require(cfg.mec_query_delay_ms >= 0, "mec_query_delay_ms must be >= 0");
    require(cfg.energy_norm_j > 0, "energy_norm_j must be positive");
    require(cfg.cloud_retries >= 0, "cloud_retries must be >= 0");
    require(cfg.local_task_share >= 0 && cfg.local_task_share <= 1,
            "local_task_share must be in [0,1]");
    netem::validate(cfg.cloud_netem);
}

StateVec normalize_state(const ObservedState& s, const NormBounds& b) {
    auto unit = [](double x) {
        return static_cast<float>(std::clamp(x, 0.0, 1.0));
    };
    return StateVec{
        unit(s.r_ue),
        unit(s.r_mec),
        unit(s.throughput_mbps / b.throughput_max),
        unit(s.compute_megacycles / b.compute_max),
        unit(s.deadline_ms / b.deadline_max),
    };
}

Environment::Environment(EnvConfig cfg, SignalModel mec_load, SignalModel link_throughput)
    : cfg_(std::move(cfg)),
      mec_load_(std::move(mec_load)),
      link_(std::move(link_throughput)),
      netem_(cfg_.cloud_netem) {
    validate(cfg_);
}

double Environment::ue_availability() const {
    double busy = 0.0;
    for (const auto& run : local_runs_)
        if (run.finish_s > now_s_) busy += run.share;
    return std::clamp(1.0 - busy, 0.0, 1.0);
}

double Environment::mec_availability() const {
    double load = mec_load_.delayed_value(now_s_, ms_to_s(cfg_.mec_query_delay_ms));
    return std::clamp(1.0 - load, 0.0, 1.0);
}

double Environment::current_throughput() const {
    return std::max(0.0, link_.value(now_s_));
}

void Environment::advance_to(double t) {
    now_s_ = std::max(now_s_, t);
    std::erase_if(local_runs_, [&](const LocalRun& r) { return r.finish_s <= now_s_; });
}

ObservedState Environment::observe(const taskgen::TaskSpec& task) {
    advance_to(task.arrival_time_s);
    ObservedState s;
    s.r_ue = ue_availability();
    s.r_mec = mec_availability();
    s.throughput_mbps = current_throughput();
    s.compute_megacycles = task.compute_megacycles;
    s.deadline_ms = task.deadline_ms;
    return s;
}

ExecResult Environment::execute_local(const taskgen::TaskSpec& task) {
    const double r = std::max(ue_availability(), cfg_.r_floor);
    ExecResult out;
    out.processing_ms = task.compute_megacycles / (cfg_.device.cpu_mhz * r) * 1000.0;
    out.energy_j = cfg_.device.power_compute_w * ms_to_s(out.processing_ms) +
                   cfg_.device.power_idle_w * ms_to_s(cfg_.device.decision_time_ms);
    return out;
}

ExecResult Environment::execute_mec(const taskgen::TaskSpec& task) {
    const double thr = current_throughput();
    ExecResult out;
    if (thr <= 0.0) {
        // No link at all: nothing leaves the device.
        out.delivered = false;
        out.energy_j = cfg_.device.power_idle_w * ms_to_s(cfg_.device.decision_time_ms);
        return out;
    }
    const double r = std::max(mec_availability(), cfg_.r_floor);
    out.uplink_ms = serialize_ms(task.payload_bytes, thr);
    out.processing_ms = task.compute_megacycles / (cfg_.mec_cpu_mhz * r) * 1000.0;
    out.downlink_ms = serialize_ms(cfg_.result_payload_bytes, thr);
    out.energy_j =
        cfg_.device.power_tx_w * ms_to_s(out.uplink_ms) +
        cfg_.device.power_idle_w * ms_to_s(out.processing_ms + out.downlink_ms +
                                           cfg_.device.decision_time_ms);
    return out;
}

ExecResult Environment::execute_cloud(const taskgen::TaskSpec& task) {
    const double thr = current_throughput();
    ExecResult out;
    if (thr <= 0.0) {
        out.delivered = false;
        out.energy_j = cfg_.device.power_idle_w * ms_to_s(cfg_.device.decision_time_ms);
        return out;
    }

    const int attempts = 1 + cfg_.cloud_retries;
    const double up_one_ms = serialize_ms(task.payload_bytes, thr);
    const double down_one_ms = serialize_ms(cfg_.result_payload_bytes, thr);

    // A corrupted arrival counts as a failed attempt. A lost attempt still
    // spends the send time; its in-flight delay never materializes on the
    // device's clock.
    double tx_s = 0.0;
    bool up_ok = false;
    for (int a = 0; a < attempts && !up_ok; ++a) {
        auto t = netem_.transit(now_s_ + ms_to_s(out.uplink_ms), transfer_counter_++);
        tx_s += ms_to_s(up_one_ms);
        out.uplink_ms += up_one_ms + (t.delivered ? t.delay_ms : 0.0);
        up_ok = t.delivered && !t.corrupted;
    }

    bool down_ok = false;
    if (up_ok) {
        // "Sufficient compute resources in any scenario": full availability.
        out.processing_ms = task.compute_megacycles / cfg_.cloud_cpu_mhz * 1000.0;
        for (int a = 0; a < attempts && !down_ok; ++a) {
            auto t = netem_.transit(now_s_ + ms_to_s(out.uplink_ms + out.processing_ms +
                                                     out.downlink_ms),
                                    transfer_counter_++);
            out.downlink_ms += down_one_ms + (t.delivered ? t.delay_ms : 0.0);
            down_ok = t.delivered && !t.corrupted;
        }
    }

    // The radio is transmitting only during uplink serialization; the rest
    // of the step (decision, in-flight waits, remote processing, downlink)
    // is idle time. With zero impairments this reduces to the MEC pricing.
    const double phase_s =
        ms_to_s(out.uplink_ms + out.processing_ms + out.downlink_ms +
                cfg_.device.decision_time_ms);
    out.energy_j = cfg_.device.power_tx_w * tx_s +
                   cfg_.device.power_idle_w * (phase_s - tx_s);
    out.delivered = up_ok && down_ok;
    return out;
}

StepOutcome Environment::step(const taskgen::TaskSpec& task, int action) {
    if (action < 0 || action > 2)
        throw std::invalid_argument("action must be 0 (local), 1 (MEC) or 2 (cloud), got " +
                                    std::to_string(action));
    advance_to(task.arrival_time_s);

    ExecResult ex;
    switch (action) {
        case 0: ex = execute_local(task); break;
        case 1: ex = execute_mec(task); break;
        default: ex = execute_cloud(task); break;
    }

    StepOutcome out;
    out.action = action;
    out.decision_ms = cfg_.device.decision_time_ms;
    out.uplink_ms = ex.uplink_ms;
    out.processing_ms = ex.processing_ms;
    out.downlink_ms = ex.downlink_ms;
    out.total_ms = out.decision_ms + out.uplink_ms + out.processing_ms + out.downlink_ms;
    out.energy_j = ex.energy_j;
    out.success = ex.delivered && out.total_ms <= task.deadline_ms;
    out.reward = out.success ? -(out.energy_j / cfg_.energy_norm_j) : cfg_.eta;

    if (action == 0)
        local_runs_.push_back({now_s_ + ms_to_s(out.total_ms), cfg_.local_task_share});

    advance_background();

    out.next_state.r_ue = ue_availability();
    out.next_state.r_mec = mec_availability();
    out.next_state.throughput_mbps = current_throughput();
    out.next_state.compute_megacycles = task.compute_megacycles;
    out.next_state.deadline_ms = task.deadline_ms;
    return out;
}

void Environment::advance_background() {
    mec_load_.tick(now_s_);
    link_.tick(now_s_);
}

}  // namespace offload::env
