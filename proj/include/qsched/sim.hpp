#pragma once

#include <cstdint>
#include <vector>

#include "qsched/markov.hpp"

namespace qsched {

struct SimConfig {
    std::int64_t n_slots = 10'000'000;
    std::uint64_t seed = 1;
    std::int64_t warmup = 10'000; // slots discarded from the statistics window
    bool track_sojourn = false;   // per-packet FIFO delay, diagnostics only
};

struct SimResult {
    double empirical_delay = 0.0; // mean queue / accepted arrival rate
    double empirical_power = 0.0;
    double loss_rate = 0.0; // packets dropped / packets arrived (window)
    double mean_queue = 0.0;
    std::int64_t slots_run = 0;
    double sojourn_delay = -1.0; // -1 unless track_sojourn

    // whole-run counters; accepted == departed + final_queue exactly
    std::int64_t arrived = 0;
    std::int64_t accepted = 0;
    std::int64_t departed = 0;
    std::int64_t final_queue = 0;
};

/// Slot-level Monte Carlo of the queue recursion under the policy.
/// Draw order per slot: arrival batch, channel state, then the transmit coin
/// (only when 1 <= q + a <= K; an overflowing slot cannot transmit).
/// Bit-reproducible for fixed (config, policy, sim config).
SimResult simulate(const SystemConfig& config, const Policy& policy, const SimConfig& sc);

struct Confidence {
    double mean = 0.0;
    double half_width = 0.0; // Student-t, 95%
};

/// Batch-means estimate over >= 10 independent batches.
Confidence confidence(const std::vector<double>& batch_values);

} // namespace qsched
