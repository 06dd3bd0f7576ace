#pragma once

#include <vector>

#include "qsched/errors.hpp"

namespace qsched {

/// Per-slot packet arrival distribution: theta[m] = Pr{a = m}, m = 0..M.
/// Trailing zero entries are trimmed on construction so M is tight.
class ArrivalSpec {
  public:
    explicit ArrivalSpec(std::vector<double> theta);

    const std::vector<double>& theta() const { return theta_; }
    double theta(int m) const { return theta_[static_cast<size_t>(m)]; }
    int max_batch() const { return static_cast<int>(theta_.size()) - 1; }

  private:
    std::vector<double> theta_;
};

/// i.i.d. block-fading channel: eta[w] = Pr{state w}, power[w] = per-packet
/// transmit power in state w. State 0 is the best channel; powers strictly increase.
class ChannelSpec {
  public:
    ChannelSpec(std::vector<double> eta, std::vector<double> power);

    const std::vector<double>& eta() const { return eta_; }
    const std::vector<double>& power() const { return power_; }
    double eta(int w) const { return eta_[static_cast<size_t>(w)]; }
    double power(int w) const { return power_[static_cast<size_t>(w)]; }
    int num_states() const { return static_cast<int>(eta_.size()); }

  private:
    std::vector<double> eta_;
    std::vector<double> power_;
};

/// Validated system: arrivals, channel and buffer capacity K.
/// Immutable after construction; safe to share across threads.
class SystemConfig {
  public:
    SystemConfig(ArrivalSpec arrival, ChannelSpec channel, int buffer_capacity);

    const ArrivalSpec& arrival() const { return arrival_; }
    const ChannelSpec& channel() const { return channel_; }
    int buffer_capacity() const { return buffer_capacity_; }

    int max_batch() const { return arrival_.max_batch(); }
    int num_channel_states() const { return channel_.num_states(); }

  private:
    ArrivalSpec arrival_;
    ChannelSpec channel_;
    int buffer_capacity_;
};

/// Validates raw sequences and assembles a SystemConfig.
/// Throws NonNormalized, NonIncreasingPower, Unstable, BufferTooSmall.
SystemConfig validate(const std::vector<double>& theta, const std::vector<double>& eta,
                      const std::vector<double>& power, int buffer_capacity);

/// Mean arrival rate per slot. a_bar = sum_m m * theta_m.
double mean_rate(const ArrivalSpec& arrival);

/// xi = sum_{m=1}^{M-1} m(m+1)/2 * theta_{m+1}; equals (E[a^2] - E[a]) / 2.
double xi_constant(const ArrivalSpec& arrival);

/// Upper-tail mass r_i = sum_{m=i+1}^{M} theta_m for 0 <= i <= M-1.
double tail_mass(const ArrivalSpec& arrival, int i);

} // namespace qsched
