#include "qsched/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace qsched {

namespace {

constexpr double kNormTol = 1e-9;

void check_probabilities(const std::vector<double>& p, const char* name) {
    if (p.empty())
        throw Error(Errc::NonNormalized, std::string(name) + " is empty");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || v > 1.0 + kNormTol)
            throw Error(Errc::NonNormalized, std::string(name) + " entry outside [0,1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kNormTol)
        throw Error(Errc::NonNormalized,
                    std::string(name) + " sums to " + std::to_string(sum));
}

void renormalize(std::vector<double>& p) {
    double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p)
        v /= sum;
}

} // namespace

ArrivalSpec::ArrivalSpec(std::vector<double> theta) : theta_(std::move(theta)) {
    check_probabilities(theta_, "theta");
    while (theta_.size() > 1 && theta_.back() == 0.0)
        theta_.pop_back();
    renormalize(theta_);
}

ChannelSpec::ChannelSpec(std::vector<double> eta, std::vector<double> power)
    : eta_(std::move(eta)), power_(std::move(power)) {
    check_probabilities(eta_, "eta");
    if (power_.size() != eta_.size())
        throw Error(Errc::NonIncreasingPower, "power and eta lengths differ");
    double prev = 0.0;
    for (double p : power_) {
        if (!(p > prev))
            throw Error(Errc::NonIncreasingPower,
                        "powers must be positive and strictly increasing");
        prev = p;
    }
    renormalize(eta_);
}

SystemConfig::SystemConfig(ArrivalSpec arrival, ChannelSpec channel, int buffer_capacity)
    : arrival_(std::move(arrival)), channel_(std::move(channel)),
      buffer_capacity_(buffer_capacity) {
    double abar = mean_rate(arrival_);
    if (abar >= 1.0)
        throw Error(Errc::Unstable, "arrival rate " + std::to_string(abar) +
                                        " >= 1 packet/slot service capacity");
    if (buffer_capacity_ < arrival_.max_batch() || buffer_capacity_ < 1)
        throw Error(Errc::BufferTooSmall, "buffer K=" + std::to_string(buffer_capacity_) +
                                              " cannot hold one arrival batch");
}

SystemConfig validate(const std::vector<double>& theta, const std::vector<double>& eta,
                      const std::vector<double>& power, int buffer_capacity) {
    return SystemConfig(ArrivalSpec(theta), ChannelSpec(eta, power), buffer_capacity);
}

double mean_rate(const ArrivalSpec& arrival) {
    double abar = 0.0;
    for (int m = 1; m <= arrival.max_batch(); ++m)
        abar += m * arrival.theta(m);
    return abar;
}

double xi_constant(const ArrivalSpec& arrival) {
    double xi = 0.0;
    for (int m = 1; m <= arrival.max_batch() - 1; ++m)
        xi += 0.5 * m * (m + 1) * arrival.theta(m + 1);
    return xi;
}

double tail_mass(const ArrivalSpec& arrival, int i) {
    if (i < 0 || i > arrival.max_batch() - 1)
        throw Error(Errc::IndexOutOfRange,
                    "tail index " + std::to_string(i) + " outside [0, M-1]");
    double r = 0.0;
    for (int m = i + 1; m <= arrival.max_batch(); ++m)
        r += arrival.theta(m);
    return r;
}

} // namespace qsched
