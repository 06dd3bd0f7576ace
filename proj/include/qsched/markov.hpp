#pragma once

#include <Eigen/Dense>

#include "qsched/model.hpp"

namespace qsched {

/// Transmission probabilities f(q, w): row q is the post-arrival queue length
/// 0..K, column w the channel state. Row 0 is identically zero (nothing to send).
class Policy {
  public:
    Policy(Eigen::MatrixXd f);

    /// Constant policy: f(q, w) = value for q >= 1, zero at q = 0.
    static Policy constant(const SystemConfig& config, double value);

    double operator()(int q, int w) const { return f_(q, w); }
    const Eigen::MatrixXd& matrix() const { return f_; }
    int queue_levels() const { return static_cast<int>(f_.rows()); } // K + 1
    int num_channel_states() const { return static_cast<int>(f_.cols()); }

  private:
    Eigen::MatrixXd f_;
};

/// Row-stochastic one-step matrix tau(k, l) = Pr{q[n] = l | q[n-1] = k}.
/// Banded: tau(k, l) = 0 unless k - 1 <= l <= k + M (arrivals clipped at K).
class TransitionMatrix {
  public:
    TransitionMatrix(Eigen::MatrixXd tau, int max_batch);

    double operator()(int k, int l) const { return tau_(k, l); }
    const Eigen::MatrixXd& matrix() const { return tau_; }
    int size() const { return static_cast<int>(tau_.rows()); }
    int max_batch() const { return max_batch_; }

  private:
    Eigen::MatrixXd tau_;
    int max_batch_;
};

struct StationaryDistribution {
    Eigen::VectorXd pi;

    double mean_queue() const;
    double operator[](int k) const { return pi(k); }
    int size() const { return static_cast<int>(pi.size()); }
};

struct PolicyMetrics {
    double delay = 0.0;
    double power = 0.0;
    StationaryDistribution stationary;
};

/// Builds the queue-length Markov chain for a policy. A slot plays out as:
/// arrival batch a, post-arrival level q+ = min(q + a, K); if q + a <= K one
/// packet is transmitted with probability f(q+, w), otherwise the overflow
/// slot cannot transmit and the excess packets are lost.
TransitionMatrix build_transition(const SystemConfig& config, const Policy& policy);

/// Stationary distribution via dense LU on (Lambda^T - I) with one balance row
/// replaced by normalization, restricted to the single recurrent class.
/// Throws SingularSystem when the chain has several recurrent classes or
/// deadlocks above the empty state (e.g. a policy that never transmits).
StationaryDistribution stationary(const TransitionMatrix& t);

/// psi_{k,w} = Pr{transmit over state w | q[n-1] = k} = sum_m theta_m f(k+m, w),
/// indices past K contributing zero. w = -1 returns the idle probability.
double transmit_prob(const SystemConfig& config, const Policy& policy, int k, int w);

/// Little's law: D = mean queue length / mean arrival rate.
double average_delay(const StationaryDistribution& pi, double arrival_rate);

/// P_bar = sum_k pi_k sum_w eta_w P_w psi_{k,w}.
double average_power(const SystemConfig& config, const Policy& policy,
                     const StationaryDistribution& pi);

/// build_transition -> stationary -> delay/power in one call.
PolicyMetrics evaluate_policy(const SystemConfig& config, const Policy& policy);

/// Expected packets lost per slot: sum_k pi_k sum_m theta_m max(0, k + m - K).
double loss_rate(const SystemConfig& config, const StationaryDistribution& pi);

/// Probability that an arrival batch overflows the buffer:
/// sum_k pi_k Pr{k + a > K}.
double overflow_probability(const SystemConfig& config, const StationaryDistribution& pi);

} // namespace qsched
