#pragma once

#include <cstdint>
#include <optional>

#include "offload/rng.hpp"

namespace offload::netem {

// Two-state Markov loss model for bursty (correlated) loss.
struct GilbertElliott {
    double p_good_to_bad = 0.0;
    double p_bad_to_good = 0.0;
    double loss_in_bad = 1.0;
    double loss_in_good = 0.0;
};

struct NetemConfig {
    double base_latency_ms = 0.0;
    double jitter_ms = 0.0;
    double loss_rate = 0.0;                 // Bernoulli loss when burst is unset
    std::optional<GilbertElliott> burst;    // set -> Gilbert-Elliott loss
    double corruption_rate = 0.0;
    double reorder_rate = 0.0;
    double duplicate_rate = 0.0;
    uint64_t seed = 0;
};

// Throws std::invalid_argument naming the offending field.
void validate(const NetemConfig& cfg);

struct TransitResult {
    bool delivered = true;
    bool corrupted = false;
    bool duplicated = false;
    bool reordered = false;
    double delay_ms = 0.0;  // meaningless when not delivered
};

// Network impairment model for one link. The Gilbert-Elliott chain
// advances once per transit in call order; everything else about a
// transfer (loss draw, jitter, corruption, duplication, reordering) is
// drawn from a sub-generator seeded by (seed, transfer_id), so a given
// transfer's fate is independent of unrelated traffic.
//
// Per-transfer draw order: loss, jitter, corruption, duplication,
// reorder. Delay = max(0, base + jitter_ms * N(0,1)); a reordered
// transfer is charged one extra jitter quantum (jitter_ms) of delay,
// since the consumer sees whole transfers rather than packets.
class Netem {
public:
    explicit Netem(const NetemConfig& cfg);

    TransitResult transit(double send_time_s, uint64_t transfer_id);

    // Advance the Gilbert-Elliott chain one step; returns the new state
    // (true = bad). Also used internally by transit() in burst mode.
    bool ge_step();
    bool in_bad_state() const { return bad_; }
    void set_bad_state(bool bad) { bad_ = bad; }

    const NetemConfig& config() const { return cfg_; }

private:
    NetemConfig cfg_;
    Rng chain_rng_;
    bool bad_ = false;
};

}  // namespace offload::netem
