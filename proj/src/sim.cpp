#include "qsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "qsched/rng.hpp"

namespace qsched {

namespace {

/// Inverse-CDF draw from a small discrete distribution (cumulative table).
int draw(const std::vector<double>& cumulative, double u) {
    for (size_t i = 0; i + 1 < cumulative.size(); ++i)
        if (u < cumulative[i])
            return static_cast<int>(i);
    return static_cast<int>(cumulative.size()) - 1;
}

// two-sided 97.5% Student-t quantiles, df 1..30, then 40/60/120
constexpr double kT975[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                            2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                            2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                            2.060,  2.056, 2.052, 2.048, 2.045, 2.042};

double t_quantile_975(int df) {
    if (df <= 30)
        return kT975[df - 1];
    if (df <= 40)
        return 2.021;
    if (df <= 60)
        return 2.000;
    if (df <= 120)
        return 1.980;
    return 1.960;
}

} // namespace

SimResult simulate(const SystemConfig& config, const Policy& policy, const SimConfig& sc) {
    if (sc.warmup < 0 || sc.n_slots <= sc.warmup)
        throw Error(Errc::IndexOutOfRange, "need n_slots > warmup >= 0");
    if (policy.queue_levels() != config.buffer_capacity() + 1 ||
        policy.num_channel_states() != config.num_channel_states())
        throw Error(Errc::DimensionMismatch, "policy dimensions do not match config");

    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();

    std::vector<double> arrival_cdf, channel_cdf;
    double acc = 0.0;
    for (int m = 0; m <= config.max_batch(); ++m)
        arrival_cdf.push_back(acc += config.arrival().theta(m));
    acc = 0.0;
    for (int w = 0; w < states; ++w)
        channel_cdf.push_back(acc += config.channel().eta(w));

    SplitMix64 rng(sc.seed);
    int queue = 0;

    long double queue_sum = 0.0L, power_sum = 0.0L, sojourn_sum = 0.0L;
    std::int64_t win_arrived = 0, win_accepted = 0, win_lost = 0, win_departed = 0;
    std::int64_t win_slots = 0;
    SimResult res;
    std::deque<std::int64_t> fifo; // arrival slot per queued packet

    for (std::int64_t n = 0; n < sc.n_slots; ++n) {
        const bool in_window = n >= sc.warmup;
        int a = draw(arrival_cdf, rng.next_double());
        int w = draw(channel_cdf, rng.next_double());

        res.arrived += a;
        int lost = std::max(0, queue + a - cap);
        int admitted = a - lost;
        res.accepted += admitted;
        int post = queue + admitted;

        if (sc.track_sojourn)
            for (int i = 0; i < admitted; ++i)
                fifo.push_back(n);

        int sent = 0;
        if (queue + a <= cap && post >= 1) { // an overflowing slot cannot transmit
            if (rng.next_double() < policy(post, w))
                sent = 1;
        }
        queue = post - sent;
        res.departed += sent;

        if (in_window) {
            ++win_slots;
            win_arrived += a;
            win_accepted += admitted;
            win_lost += lost;
            win_departed += sent;
            queue_sum += queue;
            if (sent)
                power_sum += config.channel().power(w);
        }
        if (sent && sc.track_sojourn) {
            if (in_window)
                sojourn_sum += static_cast<long double>(n - fifo.front());
            fifo.pop_front();
        }
    }

    res.final_queue = queue;
    res.slots_run = sc.n_slots;
    res.mean_queue = static_cast<double>(queue_sum / win_slots);
    res.empirical_power = static_cast<double>(power_sum / win_slots);
    res.loss_rate =
        win_arrived > 0 ? static_cast<double>(win_lost) / static_cast<double>(win_arrived) : 0.0;
    double accepted_rate = static_cast<double>(win_accepted) / static_cast<double>(win_slots);
    res.empirical_delay = accepted_rate > 0.0 ? res.mean_queue / accepted_rate : 0.0;
    if (sc.track_sojourn)
        res.sojourn_delay = win_departed > 0
                                ? static_cast<double>(sojourn_sum / win_departed)
                                : 0.0;
    return res;
}

Confidence confidence(const std::vector<double>& batch_values) {
    const int n = static_cast<int>(batch_values.size());
    if (n < 10)
        throw Error(Errc::TooFewBatches,
                    "batch-means needs >= 10 batches, got " + std::to_string(n));
    double mean = 0.0;
    for (double v : batch_values)
        mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : batch_values)
        ss += (v - mean) * (v - mean);
    double s = std::sqrt(ss / (n - 1));
    return Confidence{mean, t_quantile_975(n - 1) * s / std::sqrt(static_cast<double>(n))};
}

} // namespace qsched
