#include "offload/netem/netem.hpp"

#include <algorithm>
#include <stdexcept>

namespace offload::netem {

namespace {

void check_prob(double p, const char* name) {
    if (p < 0.0 || p > 1.0) {
        throw std::invalid_argument(std::string("netem: ") + name + " must be in [0,1]");
    }
}

}  // namespace

void validate(const NetemConfig& cfg) {
    check_prob(cfg.loss_rate, "loss_rate");
    check_prob(cfg.corruption_rate, "corruption_rate");
    check_prob(cfg.reorder_rate, "reorder_rate");
    check_prob(cfg.duplicate_rate, "duplicate_rate");
    if (cfg.burst) {
        check_prob(cfg.burst->p_good_to_bad, "p_good_to_bad");
        check_prob(cfg.burst->p_bad_to_good, "p_bad_to_good");
        check_prob(cfg.burst->loss_in_bad, "loss_in_bad");
        check_prob(cfg.burst->loss_in_good, "loss_in_good");
    }
    if (cfg.base_latency_ms < 0 || cfg.jitter_ms < 0) {
        throw std::invalid_argument("netem: latency and jitter must be nonnegative");
    }
}

Netem::Netem(const NetemConfig& cfg) : cfg_(cfg), chain_rng_(mix_seed(cfg.seed, 0xC4A1)) {
    validate(cfg_);
}

bool Netem::ge_step() {
    if (!cfg_.burst) return bad_;
    const double u = chain_rng_.u01();
    if (bad_) {
        if (u < cfg_.burst->p_bad_to_good) bad_ = false;
    } else {
        if (u < cfg_.burst->p_good_to_bad) bad_ = true;
    }
    return bad_;
}

TransitResult Netem::transit(double /*send_time_s*/, uint64_t transfer_id) {
    Rng rng(mix_seed(cfg_.seed, transfer_id));
    TransitResult r;

    if (cfg_.burst) {
        ge_step();
        const double p = bad_ ? cfg_.burst->loss_in_bad : cfg_.burst->loss_in_good;
        r.delivered = !rng.bernoulli(p);
    } else {
        r.delivered = !rng.bernoulli(cfg_.loss_rate);
    }

    double delay = cfg_.base_latency_ms + cfg_.jitter_ms * rng.normal();
    r.corrupted = rng.bernoulli(cfg_.corruption_rate);
    r.duplicated = rng.bernoulli(cfg_.duplicate_rate);
    r.reordered = rng.bernoulli(cfg_.reorder_rate);
    if (r.reordered) delay += cfg_.jitter_ms;
    r.delay_ms = std::max(0.0, delay);
    return r;
}

}  // namespace offload::netem
