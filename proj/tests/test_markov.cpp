#include <doctest.h>

#include "qsched/markov.hpp"
#include "qsched/oracle.hpp"
#include "qsched/rng.hpp"

using namespace qsched;

namespace {

const std::vector<double> kEta{0.135, 0.232, 0.239, 0.394};
const std::vector<double> kPower{0.04, 0.08, 0.16, 10.14};

SystemConfig table1_rate030(int cap = 40) {
    return validate({0.78, 0.14, 0.08}, kEta, kPower, cap);
}

/// Independent oracle: stationary distribution by power iteration.
Eigen::VectorXd power_iteration(const TransitionMatrix& t, double tol = 1e-13) {
    const int n = t.size();
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (int iter = 0; iter < 2'000'000; ++iter) {
        Eigen::VectorXd next = t.matrix().transpose() * pi;
        next /= next.sum();
        if ((next - pi).cwiseAbs().maxCoeff() < tol)
            return next;
        pi = next;
    }
    return pi;
}

Policy threshold_policy(const SystemConfig& cfg, std::vector<int> thresholds) {
    return threshold_to_policy(
        ThresholdPolicy{std::move(thresholds),
                        std::vector<double>(static_cast<size_t>(cfg.num_channel_states()), 1.0)},
        cfg);
}

} // namespace

TEST_CASE("transition probabilities match the closed forms in the interior") {
    SystemConfig cfg = table1_rate030(12);
    SplitMix64 rng(7);
    Policy f = random_policy(cfg, rng);
    TransitionMatrix t = build_transition(cfg, f);

    const auto& theta = cfg.arrival().theta();
    auto tx = [&](int q) {
        double s = 0.0;
        for (int w = 0; w < cfg.num_channel_states(); ++w)
            s += cfg.channel().eta(w) * f(q, w);
        return s;
    };
    for (int k = 0; k <= 12; ++k) {
        if (k >= 1) // mu_k = theta_0 sum_w eta_w f(k, w)
            CHECK(t(k, k - 1) == doctest::Approx(theta[0] * tx(k)).epsilon(1e-13));
        for (int m = 1; m <= 2 && k + m + 1 <= 12; ++m) {
            double expect = theta[static_cast<size_t>(m)] * (1.0 - tx(k + m));
            if (m + 1 <= 2)
                expect += theta[static_cast<size_t>(m + 1)] * tx(k + m + 1);
            CHECK(t(k, k + m) == doctest::Approx(expect).epsilon(1e-13));
        }
    }
}

TEST_CASE("transition rows are stochastic and banded for random policies") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        int cap = 4 + static_cast<int>(rng.next_u64() % 8);
        SystemConfig cfg = validate({0.6, 0.25, 0.15}, {0.5, 0.5}, {1.0, 3.0}, cap);
        Policy f = random_policy(cfg, rng);
        TransitionMatrix t = build_transition(cfg, f); // ctor asserts both invariants
        double sum = 0.0;
        for (int l = 0; l <= cap; ++l)
            sum += t(0, l);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("greedy policy with single arrivals keeps the queue empty") {
    SystemConfig cfg = validate({0.7, 0.3}, kEta, kPower, 10);
    Policy greedy = Policy::constant(cfg, 1.0);
    StationaryDistribution pi = stationary(build_transition(cfg, greedy));
    CHECK(pi[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (int k = 1; k <= 10; ++k)
        CHECK(pi[k] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("never-transmit policy deadlocks at the buffer cap") {
    SystemConfig cfg = table1_rate030(8);
    Policy idle = Policy::constant(cfg, 0.0);
    CHECK_THROWS_AS(stationary(build_transition(cfg, idle)), Error);
    try {
        stationary(build_transition(cfg, idle));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::SingularSystem);
    }
}

TEST_CASE("stationary of a symmetric two-state chain") {
    Eigen::MatrixXd tau(2, 2);
    tau << 0.5, 0.5, 0.5, 0.5;
    StationaryDistribution pi = stationary(TransitionMatrix(tau, 1));
    CHECK(pi[0] == doctest::Approx(0.5));
    CHECK(pi[1] == doctest::Approx(0.5));
}

TEST_CASE("stationary rejects a chain with two recurrent classes") {
    Eigen::MatrixXd tau = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(stationary(TransitionMatrix(tau, 1)), Error);
}

TEST_CASE("stationary agrees with the power-iteration oracle") {
    SystemConfig cfg = table1_rate030();
    Policy f = threshold_policy(cfg, {2, 2, 2, 2});
    TransitionMatrix t = build_transition(cfg, f);
    StationaryDistribution pi = stationary(t);
    Eigen::VectorXd oracle = power_iteration(t);
    CHECK((pi.pi - oracle).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("transmit probabilities") {
    SystemConfig cfg = table1_rate030(10);
    Policy greedy = Policy::constant(cfg, 1.0);
    Policy idle = Policy::constant(cfg, 0.0);

    // k=0 under greedy: transmit iff at least one packet arrives
    for (int w = 0; w < 4; ++w)
        CHECK(transmit_prob(cfg, greedy, 0, w) == doctest::Approx(0.22).epsilon(1e-14));
    // idle policy never transmits, idle probability is 1
    CHECK(transmit_prob(cfg, idle, 3, 1) == 0.0);
    CHECK(transmit_prob(cfg, idle, 3, -1) == doctest::Approx(1.0));
    // k=K: only the zero-arrival slot can still transmit
    for (int w = 0; w < 4; ++w)
        CHECK(transmit_prob(cfg, greedy, 10, w) ==
              doctest::Approx(0.78 * greedy(10, w)).epsilon(1e-14));
    // psi sums to one with the idle state included
    SplitMix64 rng(3);
    Policy f = random_policy(cfg, rng);
    for (int k = 0; k <= 10; ++k) {
        double total = transmit_prob(cfg, f, k, -1);
        for (int w = 0; w < 4; ++w)
            total += transmit_prob(cfg, f, k, w);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    }
    CHECK_THROWS_AS(transmit_prob(cfg, f, 11, 0), Error);
}

TEST_CASE("average delay via Little's law") {
    StationaryDistribution empty{Eigen::VectorXd::Zero(5)};
    empty.pi(0) = 1.0;
    CHECK(average_delay(empty, 0.3) == 0.0);

    StationaryDistribution uniform{Eigen::VectorXd::Constant(5, 0.2)};
    CHECK(average_delay(uniform, 0.5) == doctest::Approx(4.0));

    CHECK_THROWS_AS(average_delay(uniform, 0.0), Error);
}

TEST_CASE("average power closed form for greedy single-arrival traffic") {
    SystemConfig cfg = validate({0.7, 0.3}, kEta, kPower, 10);
    Policy greedy = Policy::constant(cfg, 1.0);
    PolicyMetrics m = evaluate_policy(cfg, greedy);
    // queue stays empty; transmission happens exactly when a packet arrives
    CHECK(m.delay == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.power == doctest::Approx(1.217208).epsilon(1e-12));
    CHECK(average_power(cfg, Policy::constant(cfg, 0.0), m.stationary) == 0.0);
}

TEST_CASE("throughput accounting is exact including buffer loss") {
    SplitMix64 rng(23);
    SystemConfig cfg = validate({0.55, 0.3, 0.15}, {0.5, 0.5}, {1.0, 3.0}, 7);
    double abar = mean_rate(cfg.arrival());
    for (int trial = 0; trial < 30; ++trial) {
        Policy f = random_policy(cfg, rng);
        StationaryDistribution pi = stationary(build_transition(cfg, f));
        double served = 0.0;
        for (int k = 0; k <= 7; ++k)
            for (int w = 0; w < 2; ++w)
                served += pi[k] * cfg.channel().eta(w) * transmit_prob(cfg, f, k, w);
        CHECK(served == doctest::Approx(abar - loss_rate(cfg, pi)).epsilon(1e-12));
    }
}

TEST_CASE("flow conservation holds when the buffer never fills") {
    SystemConfig cfg = table1_rate030();
    Policy f = threshold_policy(cfg, {1, 2, 3, 6});
    PolicyMetrics m = evaluate_policy(cfg, f);
    REQUIRE(m.stationary[40] < 1e-9);
    double served = 0.0;
    for (int k = 0; k <= 40; ++k)
        for (int w = 0; w < 4; ++w)
            served += m.stationary[k] * cfg.channel().eta(w) * transmit_prob(cfg, f, k, w);
    CHECK(served == doctest::Approx(0.30).epsilon(1e-10));
}

TEST_CASE("raising any transmit probability does not lengthen the queue") {
    SystemConfig cfg = validate({0.7, 0.2, 0.1}, {0.6, 0.4}, {1.0, 4.0}, 9);
    SplitMix64 rng(31);
    Policy base = random_policy(cfg, rng);
    double base_q = stationary(build_transition(cfg, base)).mean_queue();
    for (int trial = 0; trial < 20; ++trial) {
        int q = 1 + static_cast<int>(rng.next_u64() % 9);
        int w = static_cast<int>(rng.next_u64() % 2);
        Eigen::MatrixXd f = base.matrix();
        f(q, w) = f(q, w) + (1.0 - f(q, w)) * rng.next_double();
        double perturbed_q = stationary(build_transition(cfg, Policy(f))).mean_queue();
        CHECK(perturbed_q <= base_q + 1e-9);
    }
}

TEST_CASE("evaluate_policy composes the pipeline") {
    SystemConfig cfg = validate({0.7, 0.3}, kEta, kPower, 6);
    PolicyMetrics m = evaluate_policy(cfg, Policy::constant(cfg, 1.0));
    CHECK(m.delay == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.stationary[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(evaluate_policy(cfg, Policy::constant(cfg, 0.0)), Error);
}
