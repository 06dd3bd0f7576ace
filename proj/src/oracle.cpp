#include "qsched/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

namespace qsched {

namespace {

constexpr double kIdentityTol = 1e-8;
constexpr double kPowerIdentityTol = 1e-10;

} // namespace

PolicyAtlas enumerate_pure(const SystemConfig& config) {
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    double count = std::pow(static_cast<double>(cap + 1), states);
    if (count > 1e5)
        throw Error(Errc::TooLarge, "threshold enumeration would visit " +
                                        std::to_string(count) + " policies");
    const long total = static_cast<long>(std::llround(count));

    PolicyAtlas atlas;
    atlas.entries.resize(static_cast<size_t>(total));

    std::atomic<long> next{0};
    auto worker = [&]() {
        for (long idx = next.fetch_add(1); idx < total; idx = next.fetch_add(1)) {
            AtlasEntry& entry = atlas.entries[static_cast<size_t>(idx)];
            entry.policy.threshold.resize(static_cast<size_t>(states));
            entry.policy.frac.assign(static_cast<size_t>(states), 1.0);
            long rem = idx;
            for (int w = states - 1; w >= 0; --w) {
                entry.policy.threshold[static_cast<size_t>(w)] =
                    1 + static_cast<int>(rem % (cap + 1));
                rem /= (cap + 1);
            }
            try {
                Policy f = threshold_to_policy(entry.policy, config);
                PolicyMetrics m = evaluate_policy(config, f);
                entry.stable = true;
                entry.delay = m.delay;
                entry.power = m.power;
                entry.overflow = overflow_probability(config, m.stationary);
            } catch (const Error& e) {
                if (e.code() != Errc::SingularSystem)
                    throw;
                entry.stable = false;
            }
        }
    };
    unsigned workers = std::max(1u, std::min(std::thread::hardware_concurrency(),
                                             static_cast<unsigned>(total)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t)
        pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool)
        t.join();
    return atlas;
}

TradeoffCurve::TradeoffCurve(std::vector<std::pair<double, double>> vertices)
    : vertices_(std::move(vertices)) {
    if (vertices_.empty())
        throw Error(Errc::Empty, "tradeoff curve needs at least one vertex");
}

std::optional<double> TradeoffCurve::operator()(double budget) const {
    if (budget < vertices_.front().first - 1e-12)
        return std::nullopt;
    if (budget >= vertices_.back().first)
        return vertices_.back().second;
    for (size_t i = 1; i < vertices_.size(); ++i) {
        const auto& [x1, y1] = vertices_[i - 1];
        const auto& [x2, y2] = vertices_[i];
        if (budget <= x2) {
            double t = (budget - x1) / (x2 - x1);
            return y1 + t * (y2 - y1);
        }
    }
    return vertices_.back().second;
}

TradeoffCurve lower_hull(const PolicyAtlas& atlas) {
    std::vector<std::pair<double, double>> pts;
    for (const AtlasEntry& e : atlas.entries)
        if (e.stable)
            pts.emplace_back(e.power, e.delay);
    if (pts.empty())
        throw Error(Errc::Empty, "no stable policy in the atlas");
    std::sort(pts.begin(), pts.end());

    std::vector<std::pair<double, double>> hull;
    for (const auto& p : pts) {
        if (!hull.empty() && p.first == hull.back().first)
            continue; // same power: the earlier (lower-delay) point wins
        while (hull.size() >= 2) {
            const auto& [x1, y1] = hull[hull.size() - 2];
            const auto& [x2, y2] = hull.back();
            // drop when the middle vertex is on or above the new chord
            if ((x2 - x1) * (p.second - y1) - (y2 - y1) * (p.first - x1) <= 0.0)
                hull.pop_back();
            else
                break;
        }
        hull.push_back(p);
    }
    // keep the strictly decreasing part: past the delay minimum more power buys nothing
    std::vector<std::pair<double, double>> curve;
    for (const auto& p : hull) {
        if (!curve.empty() && p.second >= curve.back().second)
            break;
        curve.push_back(p);
    }
    return TradeoffCurve(std::move(curve));
}

std::optional<std::pair<double, double>> no_overflow_metrics(const SystemConfig& config,
                                                             const Policy& policy) {
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    const int max_batch = config.max_batch();
    const double abar = mean_rate(config.arrival());
    if (abar <= 0.0)
        return std::nullopt;

    Eigen::VectorXd tx = Eigen::VectorXd::Zero(cap + 1);
    for (int q = 0; q <= cap; ++q)
        for (int w = 0; w < states; ++w)
            tx(q) += config.channel().eta(w) * policy(q, w);

    // cut balance for levels 0..K-1 plus normalization
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cap + 1, cap + 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(cap + 1);
    for (int k = 0; k < cap; ++k) {
        for (int i = 0; i <= std::min(max_batch - 1, k); ++i)
            a(k, k - i) += tail_mass(config.arrival(), i);
        for (int m = 0; m <= std::min(max_batch, k + 1); ++m)
            a(k, k + 1 - m) -= tx(k + 1) * config.arrival().theta(m);
    }
    a.row(cap).setOnes();
    b(cap) = 1.0;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::VectorXd pi = lu.solve(b);
    if (!pi.allFinite() || pi.minCoeff() < -1e-10)
        return std::nullopt;
    if ((a * pi - b).cwiseAbs().maxCoeff() > 1e-9)
        return std::nullopt;

    double throughput = 0.0, power = 0.0, mean_q = 0.0;
    for (int k = 0; k < cap; ++k) {
        double reach = 0.0;
        for (int m = 0; m <= std::min(max_batch, k + 1); ++m)
            reach += config.arrival().theta(m) * pi(k + 1 - m);
        for (int w = 0; w < states; ++w) {
            double ykw = policy(k + 1, w) * reach;
            throughput += config.channel().eta(w) * ykw;
            power += config.channel().eta(w) * config.channel().power(w) * ykw;
        }
    }
    // the model is only self-consistent when nothing would have overflowed
    if (std::abs(throughput - abar) > 1e-10)
        return std::nullopt;
    for (int k = 0; k <= cap; ++k)
        mean_q += k * pi(k);
    return std::make_pair(mean_q / abar, power);
}

Policy random_policy(const SystemConfig& config, SplitMix64& rng) {
    Eigen::MatrixXd f(config.buffer_capacity() + 1, config.num_channel_states());
    for (Eigen::Index q = 0; q < f.rows(); ++q)
        for (Eigen::Index w = 0; w < f.cols(); ++w)
            f(q, w) = rng.next_double();
    f.row(0).setZero();
    return Policy(std::move(f));
}

bool TransformReport::pass() const {
    return cut_balance_max < kIdentityTol && throughput_max < kIdentityTol &&
           y_bounds_violation < kIdentityTol && reconstruction_max < kIdentityTol &&
           reconstruction_top_max < kIdentityTol && power_identity_max < kPowerIdentityTol &&
           delay_identity_max < kIdentityTol && std::abs(affine_slope - 1.0) < 1e-6 &&
           std::abs(affine_intercept) < kIdentityTol && affine_residual_max < kIdentityTol;
}

std::string TransformReport::to_text() const {
    char buf[4096];
    std::snprintf(
        buf, sizeof(buf),
        "transformation identities over %d random policies (seed %llu, %d skipped)\n"
        "  cut balance (per-level flow)        max residual %.3e\n"
        "  throughput, loss-corrected          max residual %.3e\n"
        "  throughput, idealized form          max gap      %.3e  (= buffer loss)\n"
        "  y upper/lower bounds                max violation %.3e\n"
        "  pi reconstruction, rows 0..K-1      max residual %.3e\n"
        "  pi reconstruction, row K corrected  max residual %.3e\n"
        "  pi reconstruction, row K idealized  max gap      %.3e\n"
        "  power expression vs chain power     max residual %.3e\n"
        "  delay expression, trunc.-corrected  max residual %.3e\n"
        "  delay expression, idealized form    max gap      %.3e\n"
        "  delay affine fit                    slope %.9f  intercept %.3e  resid %.3e\n"
        "  buffer overflow caveat              max loss rate %.3e packets/slot\n"
        "  verdict                             %s\n",
        n_policies, static_cast<unsigned long long>(seed), skipped, cut_balance_max,
        throughput_max, throughput_raw_max, y_bounds_violation, reconstruction_max,
        reconstruction_top_max, reconstruction_top_raw_max, power_identity_max,
        delay_identity_max, delay_identity_raw_max, affine_slope, affine_intercept,
        affine_residual_max, max_loss_rate, pass() ? "PASS" : "FAIL");
    return std::string(buf);
}

int max_fractional_per_column(const DelaySolution& sol, const SystemConfig& config) {
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    const double tol = 1e-7;
    int worst = 0;
    for (int w = 0; w < states; ++w) {
        int count = 0;
        for (int k = 0; k < cap; ++k) {
            double bound = 0.0;
            for (int m = 0; m <= std::min(config.max_batch(), k + 1); ++m)
                bound += config.arrival().theta(m) * sol.pi(k + 1 - m);
            if (bound > tol && sol.y.y(k, w) > tol && sol.y.y(k, w) < bound - tol)
                ++count;
        }
        worst = std::max(worst, count);
    }
    return worst;
}

HullCheck hull_vs_lp(const SystemConfig& config, int n_budgets, double tol, double screen_tol) {
    PolicyAtlas atlas = enumerate_pure(config);
    TradeoffCurve exact = lower_hull(atlas);

    // same enumeration through the no-overflow model
    PolicyAtlas ideal_atlas;
    ideal_atlas.entries.reserve(atlas.entries.size());
    for (const AtlasEntry& e : atlas.entries) {
        auto m = no_overflow_metrics(config, threshold_to_policy(e.policy, config));
        if (!m)
            continue;
        AtlasEntry ie = e;
        ie.stable = true;
        ie.delay = m->first;
        ie.power = m->second;
        ideal_atlas.entries.push_back(std::move(ie));
    }
    TradeoffCurve ideal = lower_hull(ideal_atlas);

    double lo = std::max({exact.min_power(), ideal.min_power(), min_feasible_power(config)}) *
                (1.0 + 1e-9);
    double hi = std::min(exact.max_power(), ideal.max_power());
    if (!(hi > lo))
        throw Error(Errc::Empty, "no budget range shared by the two chain models");

    std::vector<double> agreed;
    const int n_candidates = 80;
    for (int i = 0; i < n_candidates; ++i) {
        double b = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i /
                                               (n_candidates - 1));
        auto de = exact(b);
        auto di = ideal(b);
        if (de && di && std::abs(*de - *di) < screen_tol)
            agreed.push_back(b);
    }
    if (static_cast<int>(agreed.size()) < n_budgets)
        throw Error(Errc::Empty, "truncation-free budget range too narrow (" +
                                     std::to_string(agreed.size()) + " candidates)");

    HullCheck check;
    check.tol = tol;
    for (int i = 0; i < n_budgets; ++i) {
        size_t idx = agreed.size() == 1
                         ? 0
                         : static_cast<size_t>(i) * (agreed.size() - 1) / (n_budgets - 1);
        check.budgets.push_back(agreed[idx]);
    }
    for (double b : check.budgets) {
        DelaySolution sol;
        SolveResult res;
        try {
            res = solve_for_policy(config, b, &sol);
        } catch (const Error& e) {
            if (e.code() != Errc::NotThresholdStructured)
                throw;
            check.threshold_structured = false;
            continue;
        }
        if (res.status != LpStatus::Optimal) {
            check.max_gap = std::numeric_limits<double>::infinity();
            continue;
        }
        check.max_fractional =
            std::max(check.max_fractional, max_fractional_per_column(sol, config));
        double hull_delay = exact(b).value_or(std::numeric_limits<double>::infinity());
        check.max_gap = std::max(check.max_gap, std::abs(res.delay - hull_delay));
    }
    return check;
}

DominanceCheck dominance_check(const SystemConfig& config, double budget, int n_feasible,
                               std::uint64_t seed) {
    DominanceCheck check;
    check.budget = budget;
    SolveResult lp = solve_for_policy(config, budget);
    if (lp.status != LpStatus::Optimal)
        throw Error(Errc::Empty, "LP infeasible at the dominance budget");
    check.lp_delay = lp.delay;
    check.min_margin = std::numeric_limits<double>::infinity();

    SplitMix64 rng(seed);
    const int sample_cap = 100 * n_feasible;
    while (check.n_feasible < n_feasible && check.n_sampled < sample_cap) {
        ++check.n_sampled;
        Policy f = random_policy(config, rng);
        PolicyMetrics m;
        try {
            m = evaluate_policy(config, f);
        } catch (const Error&) {
            continue;
        }
        if (m.power > budget)
            continue;
        ++check.n_feasible;
        check.min_margin = std::min(check.min_margin, m.delay - lp.delay);
    }
    return check;
}

TransformReport verify_transformations(const SystemConfig& config, int n_random,
                                       std::uint64_t seed) {
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    const int max_batch = config.max_batch();
    const double abar = mean_rate(config.arrival());
    const double xi = xi_constant(config.arrival());
    const double r0 = tail_mass(config.arrival(), 0);
    double ea2 = 0.0;
    for (int m = 1; m <= max_batch; ++m)
        ea2 += m * m * config.arrival().theta(m);

    GMatrix g = build_g(config);
    SplitMix64 rng(seed);

    TransformReport rep;
    rep.n_policies = n_random;
    rep.seed = seed;

    // affine fit accumulators: Eq.10 delay against the corrected expression
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::vector<std::pair<double, double>> fit_pts;
    fit_pts.reserve(static_cast<size_t>(n_random));

    for (int trial = 0; trial < n_random; ++trial) {
        Policy f = random_policy(config, rng);
        StationaryDistribution pi;
        try {
            pi = stationary(build_transition(config, f));
        } catch (const Error&) {
            ++rep.skipped;
            continue;
        }
        YVariables y = substitute_y(config, f, pi);

        // finite-buffer bookkeeping
        double loss = loss_rate(config, pi);
        double overflow = overflow_probability(config, pi);
        double clip2 = 0.0; // E[(q+a)^2 - min(q+a,K)^2]
        for (int k = 0; k <= cap; ++k)
            for (int m = 0; m <= max_batch; ++m)
                if (k + m > cap)
                    clip2 += pi[k] * config.arrival().theta(m) *
                             (static_cast<double>(k + m) * (k + m) -
                              static_cast<double>(cap) * cap);
        rep.max_loss_rate = std::max(rep.max_loss_rate, loss);

        // Lemma 3(a): upward flow across each cut equals departures landing there
        for (int k = 0; k < cap; ++k) {
            double up = 0.0;
            for (int i = 0; i <= std::min(max_batch - 1, k); ++i)
                up += tail_mass(config.arrival(), i) * pi[k - i];
            double down = 0.0;
            for (int w = 0; w < states; ++w)
                down += config.channel().eta(w) * y.y(k, w);
            rep.cut_balance_max = std::max(rep.cut_balance_max, std::abs(up - down));
        }

        // Lemma 3(b): departures equal accepted arrivals
        double throughput = 0.0;
        for (int k = 0; k < cap; ++k)
            for (int w = 0; w < states; ++w)
                throughput += config.channel().eta(w) * y.y(k, w);
        rep.throughput_max =
            std::max(rep.throughput_max, std::abs(throughput - (abar - loss)));
        rep.throughput_raw_max =
            std::max(rep.throughput_raw_max, std::abs(throughput - abar));

        // Lemma 3(c): 0 <= y <= sum_m theta_m pi_{k+1-m}
        for (int k = 0; k < cap; ++k) {
            double reach = 0.0;
            for (int m = 0; m <= std::min(max_batch, k + 1); ++m)
                reach += config.arrival().theta(m) * pi[k + 1 - m];
            for (int w = 0; w < states; ++w) {
                rep.y_bounds_violation =
                    std::max(rep.y_bounds_violation, y.y(k, w) - reach);
                rep.y_bounds_violation = std::max(rep.y_bounds_violation, -y.y(k, w));
            }
        }

        // Eq. 17: pi = G y, with the known overflow defect in the last row
        Eigen::VectorXd pihat = pi_from_y(g, y);
        for (int k = 0; k < cap; ++k)
            rep.reconstruction_max =
                std::max(rep.reconstruction_max, std::abs(pihat(k) - pi[k]));
        double top_gap = pi[cap] - pihat(cap);
        rep.reconstruction_top_raw_max =
            std::max(rep.reconstruction_top_raw_max, std::abs(top_gap));
        rep.reconstruction_top_max =
            std::max(rep.reconstruction_top_max, std::abs(top_gap - overflow / r0));

        // Lemma 2: power expression is exact, delay picks up the clipping terms
        double p_y = 0.0, ky = 0.0;
        for (int k = 0; k < cap; ++k)
            for (int w = 0; w < states; ++w) {
                p_y += config.channel().eta(w) * config.channel().power(w) * y.y(k, w);
                ky += k * config.channel().eta(w) * y.y(k, w);
            }
        double p_chain = average_power(config, f, pi);
        rep.power_identity_max =
            std::max(rep.power_identity_max, std::abs(p_y - p_chain));

        double d_chain = average_delay(pi, abar);
        double d_y = (ky - xi) / (abar * abar);
        double correction = (loss - clip2) / (2.0 * abar * abar);
        rep.delay_identity_max =
            std::max(rep.delay_identity_max, std::abs(d_y - d_chain + correction));
        rep.delay_identity_raw_max =
            std::max(rep.delay_identity_raw_max, std::abs(d_y - d_chain));

        double x = d_y + correction;
        sx += x;
        sy += d_chain;
        sxx += x * x;
        sxy += x * d_chain;
        fit_pts.emplace_back(x, d_chain);
    }

    const double n_fit = static_cast<double>(fit_pts.size());
    if (n_fit >= 2.0) {
        double var = sxx - sx * sx / n_fit;
        if (var > 1e-20) {
            rep.affine_slope = (sxy - sx * sy / n_fit) / var;
            rep.affine_intercept = (sy - rep.affine_slope * sx) / n_fit;
        } else {
            rep.affine_slope = 1.0;
            rep.affine_intercept = (sy - sx) / n_fit;
        }
        for (const auto& [x, d] : fit_pts)
            rep.affine_residual_max =
                std::max(rep.affine_residual_max,
                         std::abs(d - rep.affine_slope * x - rep.affine_intercept));
    }
    return rep;
}

} // namespace qsched
