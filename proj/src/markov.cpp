#include "qsched/markov.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace qsched {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kResidualTol = 1e-10;
constexpr double kClampTol = 1e-12;

/// Strongly connected components by Tarjan, iterative. Returns component id
/// per node; ids are assigned in reverse topological order of the condensation.
std::vector<int> scc_ids(const Eigen::MatrixXd& tau, int& n_components) {
    const int n = static_cast<int>(tau.rows());
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    int next_index = 0;
    n_components = 0;

    struct Frame {
        int v;
        int next_child;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1)
            continue;
        std::vector<Frame> call_stack{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call_stack.empty()) {
            Frame& f = call_stack.back();
            bool descended = false;
            while (f.next_child < n) {
                int w = f.next_child++;
                if (tau(f.v, w) <= 0.0)
                    continue;
                if (index[w] == -1) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call_stack.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w])
                    low[f.v] = std::min(low[f.v], index[w]);
            }
            if (descended)
                continue;
            int v = f.v;
            if (low[v] == index[v]) {
                while (true) {
                    int w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = n_components;
                    if (w == v)
                        break;
                }
                ++n_components;
            }
            call_stack.pop_back();
            if (!call_stack.empty())
                low[call_stack.back().v] = std::min(low[call_stack.back().v], low[v]);
        }
    }
    return comp;
}

} // namespace

Policy::Policy(Eigen::MatrixXd f) : f_(std::move(f)) {
    for (Eigen::Index q = 0; q < f_.rows(); ++q)
        for (Eigen::Index w = 0; w < f_.cols(); ++w)
            if (!(f_(q, w) >= 0.0 && f_(q, w) <= 1.0))
                throw Error(Errc::PolicyParse, "transmission probability outside [0,1]");
    f_.row(0).setZero();
}

Policy Policy::constant(const SystemConfig& config, double value) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Constant(config.buffer_capacity() + 1,
                                                  config.num_channel_states(), value);
    f.row(0).setZero();
    return Policy(std::move(f));
}

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd tau, int max_batch)
    : tau_(std::move(tau)), max_batch_(max_batch) {
    if (tau_.rows() != tau_.cols() || tau_.rows() < 1)
        throw Error(Errc::DimensionMismatch, "transition matrix must be square");
    const int n = static_cast<int>(tau_.rows());
    for (int k = 0; k < n; ++k) {
        double sum = 0.0;
        for (int l = 0; l < n; ++l) {
            double v = tau_(k, l);
            if (v < 0.0)
                throw Error(Errc::NonNormalized, "negative transition probability");
            if ((l < k - 1 || l > k + max_batch_) && v != 0.0)
                throw Error(Errc::NonNormalized, "transition outside the queue band");
            sum += v;
        }
        if (std::abs(sum - 1.0) > kRowSumTol)
            throw Error(Errc::NonNormalized,
                        "row " + std::to_string(k) + " sums to " + std::to_string(sum));
    }
}

double StationaryDistribution::mean_queue() const {
    double s = 0.0;
    for (Eigen::Index k = 0; k < pi.size(); ++k)
        s += static_cast<double>(k) * pi(k);
    return s;
}

TransitionMatrix build_transition(const SystemConfig& config, const Policy& policy) {
    const int cap = config.buffer_capacity();
    const int max_batch = config.max_batch();
    const int states = config.num_channel_states();
    if (policy.queue_levels() != cap + 1 || policy.num_channel_states() != states)
        throw Error(Errc::DimensionMismatch, "policy dimensions do not match config");

    // unconditional transmit probability by post-arrival level
    Eigen::VectorXd tx = Eigen::VectorXd::Zero(cap + 1);
    for (int q = 0; q <= cap; ++q)
        for (int w = 0; w < states; ++w)
            tx(q) += config.channel().eta(w) * policy(q, w);

    Eigen::MatrixXd tau = Eigen::MatrixXd::Zero(cap + 1, cap + 1);
    for (int k = 0; k <= cap; ++k) {
        for (int m = 0; m <= max_batch; ++m) {
            double p = config.arrival().theta(m);
            if (p == 0.0)
                continue;
            if (k + m > cap) {
                tau(k, cap) += p; // overflow parks at K; the slot cannot transmit
            } else {
                int q = k + m;
                tau(k, q) += p * (1.0 - tx(q));
                if (q >= 1)
                    tau(k, q - 1) += p * tx(q);
            }
        }
    }
    return TransitionMatrix(std::move(tau), max_batch);
}

StationaryDistribution stationary(const TransitionMatrix& t) {
    const int n = t.size();
    const Eigen::MatrixXd& tau = t.matrix();

    int n_components = 0;
    std::vector<int> comp = scc_ids(tau, n_components);

    // recurrent components have no edge leaving them
    std::vector<bool> is_recurrent(static_cast<size_t>(n_components), true);
    for (int v = 0; v < n; ++v)
        for (int w = 0; w < n; ++w)
            if (tau(v, w) > 0.0 && comp[w] != comp[v])
                is_recurrent[static_cast<size_t>(comp[v])] = false;

    std::vector<int> recurrent_class;
    int n_recurrent = 0;
    for (int c = 0; c < n_components; ++c) {
        if (!is_recurrent[static_cast<size_t>(c)])
            continue;
        ++n_recurrent;
        recurrent_class.clear();
        for (int v = 0; v < n; ++v)
            if (comp[v] == c)
                recurrent_class.push_back(v);
    }
    if (n_recurrent != 1)
        throw Error(Errc::SingularSystem, std::to_string(n_recurrent) +
                                              " recurrent classes; stationary "
                                              "distribution is not unique");
    if (recurrent_class.size() == 1 && recurrent_class[0] != 0)
        throw Error(Errc::SingularSystem,
                    "chain deadlocks at queue length " + std::to_string(recurrent_class[0]) +
                        " with no service");

    const int m = static_cast<int>(recurrent_class.size());
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            a(i, j) = tau(recurrent_class[j], recurrent_class[i]) - (i == j ? 1.0 : 0.0);
    a.row(m - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    b(m - 1) = 1.0;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::VectorXd x = lu.solve(b);
    if (!x.allFinite())
        throw Error(Errc::SingularSystem, "LU solve failed on the balance system");

    Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
        pi(recurrent_class[i]) = x(i);

    for (int k = 0; k < n; ++k) {
        if (pi(k) < -kClampTol)
            throw Error(Errc::SingularSystem,
                        "negative stationary mass beyond round-off at state " +
                            std::to_string(k));
        if (pi(k) < 0.0)
            pi(k) = 0.0;
    }
    pi /= pi.sum();

    double residual = (tau.transpose() * pi - pi).cwiseAbs().maxCoeff();
    if (residual > kResidualTol)
        throw Error(Errc::SingularSystem,
                    "balance residual " + std::to_string(residual) + " exceeds tolerance");
    return StationaryDistribution{std::move(pi)};
}

double transmit_prob(const SystemConfig& config, const Policy& policy, int k, int w) {
    const int cap = config.buffer_capacity();
    if (k < 0 || k > cap || w < -1 || w >= config.num_channel_states())
        throw Error(Errc::IndexOutOfRange, "transmit_prob(k=" + std::to_string(k) +
                                               ", w=" + std::to_string(w) + ")");
    if (w == -1) {
        double total = 0.0;
        for (int s = 0; s < config.num_channel_states(); ++s)
            total += transmit_prob(config, policy, k, s);
        return 1.0 - total;
    }
    double psi = 0.0;
    for (int m = 0; m <= config.max_batch(); ++m)
        if (k + m <= cap)
            psi += config.arrival().theta(m) * policy(k + m, w);
    return psi;
}

double average_delay(const StationaryDistribution& pi, double arrival_rate) {
    if (!(arrival_rate > 0.0))
        throw Error(Errc::ZeroArrivalRate, "Little's law needs a positive arrival rate");
    return pi.mean_queue() / arrival_rate;
}

double average_power(const SystemConfig& config, const Policy& policy,
                     const StationaryDistribution& pi) {
    if (pi.size() != config.buffer_capacity() + 1 ||
        policy.queue_levels() != config.buffer_capacity() + 1)
        throw Error(Errc::DimensionMismatch, "pi/policy dimensions do not match config");
    double total = 0.0;
    for (int k = 0; k < pi.size(); ++k) {
        if (pi[k] == 0.0)
            continue;
        double per_state = 0.0;
        for (int w = 0; w < config.num_channel_states(); ++w)
            per_state += config.channel().eta(w) * config.channel().power(w) *
                         transmit_prob(config, policy, k, w);
        total += pi[k] * per_state;
    }
    return total;
}

PolicyMetrics evaluate_policy(const SystemConfig& config, const Policy& policy) {
    TransitionMatrix t = build_transition(config, policy);
    StationaryDistribution pi = stationary(t);
    double abar = mean_rate(config.arrival());
    PolicyMetrics metrics;
    metrics.delay = abar > 0.0 ? average_delay(pi, abar) : 0.0;
    metrics.power = average_power(config, policy, pi);
    metrics.stationary = std::move(pi);
    return metrics;
}

double loss_rate(const SystemConfig& config, const StationaryDistribution& pi) {
    const int cap = config.buffer_capacity();
    double loss = 0.0;
    for (int k = 0; k <= cap; ++k)
        for (int m = 0; m <= config.max_batch(); ++m)
            if (k + m > cap)
                loss += pi[k] * config.arrival().theta(m) * (k + m - cap);
    return loss;
}

double overflow_probability(const SystemConfig& config, const StationaryDistribution& pi) {
    const int cap = config.buffer_capacity();
    double v = 0.0;
    for (int k = 0; k <= cap; ++k)
        for (int m = 0; m <= config.max_batch(); ++m)
            if (k + m > cap)
                v += pi[k] * config.arrival().theta(m);
    return v;
}

} // namespace qsched
