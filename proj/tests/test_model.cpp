#include <doctest.h>

#include "qsched/model.hpp"
#include "qsched/rng.hpp"

using namespace qsched;

namespace {

// Table I, BER 1e-3 row
const std::vector<double> kEta{0.135, 0.232, 0.239, 0.394};
const std::vector<double> kPower{0.04, 0.08, 0.16, 10.14};

} // namespace

TEST_CASE("validate accepts the reference configuration") {
    SystemConfig cfg = validate({0.80, 0.15, 0.05}, kEta, kPower, 40);
    CHECK(cfg.max_batch() == 2);
    CHECK(cfg.buffer_capacity() == 40);
    CHECK(cfg.num_channel_states() == 4);
    CHECK(mean_rate(cfg.arrival()) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("validate trims trailing zero arrival mass") {
    SystemConfig cfg = validate({0.5, 0.5, 0.0}, kEta, kPower, 10);
    CHECK(cfg.max_batch() == 1);
}

TEST_CASE("validate rejects bad inputs") {
    CHECK_THROWS_WITH_AS(validate({0.2, 0.9}, kEta, kPower, 10), doctest::Contains("sums to"),
                         Error);
    CHECK_THROWS_AS(validate({0.5, 0.5}, kEta, {0.16, 0.08, 0.04, 10.14}, 10), Error);
    CHECK_THROWS_AS(validate({0.5, 0.5}, kEta, {0.04, 0.04, 0.16, 10.14}, 10), Error);
    CHECK_THROWS_AS(validate({0.0, 0.0, 1.0}, kEta, kPower, 10), Error); // abar = 2
    CHECK_THROWS_AS(validate({0.8, 0.1, 0.1}, kEta, kPower, 1), Error);  // K < M

    try {
        validate({0.8, 0.1, 0.1}, kEta, kPower, 1);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BufferTooSmall);
    }
}

TEST_CASE("mean rate") {
    CHECK(mean_rate(ArrivalSpec({1.0})) == 0.0);
    CHECK(mean_rate(ArrivalSpec({0.78, 0.14, 0.08})) == doctest::Approx(0.30).epsilon(1e-14));
    CHECK(mean_rate(ArrivalSpec({0.74, 0.17, 0.09})) == doctest::Approx(0.35).epsilon(1e-14));
}

TEST_CASE("xi constant") {
    CHECK(xi_constant(ArrivalSpec({0.7, 0.3})) == 0.0); // M = 1: empty sum
    CHECK(xi_constant(ArrivalSpec({0.80, 0.15, 0.05})) == doctest::Approx(0.05));
    // M = 3: theta_2 + 3 theta_3
    CHECK(xi_constant(ArrivalSpec({0.7, 0.1, 0.1, 0.1})) == doctest::Approx(0.4));
}

TEST_CASE("tail mass") {
    ArrivalSpec a({0.78, 0.14, 0.08});
    CHECK(tail_mass(a, 0) == doctest::Approx(0.22).epsilon(1e-14));
    CHECK(tail_mass(a, 1) == doctest::Approx(0.08).epsilon(1e-14));
    CHECK_THROWS_AS(tail_mass(a, 2), Error); // i = M is out of range
    CHECK_THROWS_AS(tail_mass(a, -1), Error);
}

TEST_CASE("tail masses are monotone and sum to the mean rate") {
    SplitMix64 rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        int m_max = 1 + static_cast<int>(rng.next_u64() % 4);
        std::vector<double> theta(static_cast<size_t>(m_max) + 1);
        double sum = 0.0;
        for (double& v : theta)
            sum += (v = rng.next_double() + 0.01);
        for (double& v : theta)
            v /= sum;
        ArrivalSpec a(theta);
        double abar = mean_rate(a);
        double total = 0.0, prev = 1.1;
        for (int i = 0; i <= a.max_batch() - 1; ++i) {
            double r = tail_mass(a, i);
            CHECK(r <= prev + 1e-15);
            CHECK(r > 0.0);
            prev = r;
            total += r;
        }
        CHECK(total == doctest::Approx(abar).epsilon(1e-12));
    }
}

TEST_CASE("point mass arrivals have mean m") {
    for (int m = 1; m <= 4; ++m) {
        std::vector<double> theta(static_cast<size_t>(m) + 1, 0.0);
        theta.back() = 1.0;
        CHECK(mean_rate(ArrivalSpec(theta)) == doctest::Approx(m));
    }
}

TEST_CASE("validation is idempotent") {
    SystemConfig once = validate({0.5, 0.25, 0.25, 0.0}, kEta, kPower, 12);
    SystemConfig twice = validate(once.arrival().theta(), once.channel().eta(),
                                  once.channel().power(), once.buffer_capacity());
    CHECK(once.arrival().theta() == twice.arrival().theta());
    CHECK(once.channel().eta() == twice.channel().eta());
    CHECK(once.max_batch() == twice.max_batch());
}
