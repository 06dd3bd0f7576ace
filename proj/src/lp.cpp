#include "qsched/lp.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <string>
#include <thread>

namespace qsched {

namespace {

constexpr double kThresholdTol = 1e-7;   // Eq-19 pattern tolerance
constexpr double kDegenerateBound = 1e-12; // unreachable-state denominator
constexpr double kTiePerturbation = 1e-9;

int y_index(int k, int w, int states) { return k * states + w; }

double g_tamper_factor = 0.0;

Eigen::VectorXd objective_coefficients(const SystemConfig& config, bool perturbed) {
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    Eigen::VectorXd c(cap * states);
    for (int k = 0; k < cap; ++k)
        for (int w = 0; w < states; ++w) {
            double v = k * config.channel().eta(w);
            if (perturbed)
                v += kTiePerturbation * k * (w + 1);
            c(y_index(k, w, states)) = v;
        }
    return c;
}

} // namespace

YVariables substitute_y(const SystemConfig& config, const Policy& policy,
                        const StationaryDistribution& pi) {
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    if (pi.size() != cap + 1 || policy.queue_levels() != cap + 1 ||
        policy.num_channel_states() != states)
        throw Error(Errc::DimensionMismatch, "pi/policy dimensions do not match config");

    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(cap, states);
    for (int k = 0; k < cap; ++k) {
        double reach = 0.0; // Pr{post-arrival level = k+1}
        for (int m = 0; m <= std::min(config.max_batch(), k + 1); ++m)
            reach += config.arrival().theta(m) * pi[k + 1 - m];
        for (int w = 0; w < states; ++w)
            y(k, w) = policy(k + 1, w) * reach;
    }
    return YVariables{std::move(y)};
}

GMatrix build_g(const SystemConfig& config) {
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    const int max_batch = config.max_batch();
    if (max_batch < 1 || tail_mass(config.arrival(), 0) <= 0.0)
        throw Error(Errc::DegenerateArrivals, "no arrivals: r_0 = 0");

    std::vector<double> r(static_cast<size_t>(max_batch));
    for (int i = 0; i < max_batch; ++i)
        r[static_cast<size_t>(i)] = tail_mass(config.arrival(), i);

    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(cap + 1, cap * states);
    for (int k = 0; k <= cap; ++k) {
        // l_{k+1}: eta at the y(k, .) slots; zero vector for k = K
        if (k <= cap - 1)
            for (int w = 0; w < states; ++w)
                g(k, y_index(k, w, states)) = config.channel().eta(w);
        for (int i = 1; i <= std::min(max_batch - 1, k); ++i)
            g.row(k) -= r[static_cast<size_t>(i)] * g.row(k - i);
        g.row(k) /= r[0];
    }
    if (g_tamper_factor != 0.0)
        g(0, 0) *= 1.0 + g_tamper_factor;
    return GMatrix{std::move(g)};
}

void set_g_tamper(double relative_perturbation) { g_tamper_factor = relative_perturbation; }

Eigen::VectorXd pi_from_y(const GMatrix& g, const YVariables& y) {
    if (g.cols() != y.queue_levels() * y.num_channel_states())
        throw Error(Errc::DimensionMismatch, "G and y dimensions disagree");
    Eigen::VectorXd stacked(g.cols());
    for (int k = 0; k < y.queue_levels(); ++k)
        for (int w = 0; w < y.num_channel_states(); ++w)
            stacked(y_index(k, w, y.num_channel_states())) = y.y(k, w);
    Eigen::VectorXd pi = g.g * stacked;
    for (Eigen::Index i = 0; i < pi.size(); ++i)
        if (pi(i) < 0.0 && pi(i) >= -1e-10)
            pi(i) = 0.0;
    return pi;
}

LpProblem build_lp(const SystemConfig& config, double power_budget) {
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    const int max_batch = config.max_batch();
    const int n = cap * states;
    const GMatrix g = build_g(config);

    LpProblem p;
    p.c = objective_coefficients(config, /*perturbed=*/false);

    // <= rows: power budget, Eq-18c bounds, -(Gy)_k <= 0
    const int n_ub = 1 + n + (cap + 1);
    p.a_ub = Eigen::MatrixXd::Zero(n_ub, n);
    p.b_ub = Eigen::VectorXd::Zero(n_ub);
    int row = 0;
    for (int k = 0; k < cap; ++k)
        for (int w = 0; w < states; ++w)
            p.a_ub(row, y_index(k, w, states)) =
                config.channel().eta(w) * config.channel().power(w);
    p.b_ub(row) = power_budget;
    ++row;

    for (int k = 0; k < cap; ++k)
        for (int w = 0; w < states; ++w) {
            p.a_ub(row, y_index(k, w, states)) += 1.0;
            for (int m = 0; m <= std::min(max_batch, k + 1); ++m)
                p.a_ub.row(row) -= config.arrival().theta(m) * g.g.row(k + 1 - m);
            ++row;
        }

    for (int k = 0; k <= cap; ++k) {
        p.a_ub.row(row) = -g.g.row(k);
        ++row;
    }

    // = rows: throughput, plus buffer-tail pins (Gy)_j = 0 for j > K - M.
    // The pins close the finite-buffer gap: without them the y truncation
    // admits vertices whose reconstructed pi carries mass the chain would
    // have pushed past K, and the objective undervalues their delay.
    std::vector<int> pin_rows;
    for (int j = std::max(0, cap - max_batch + 1); j <= cap; ++j)
        if (g.g.row(j).cwiseAbs().maxCoeff() > 0.0)
            pin_rows.push_back(j);

    p.a_eq = Eigen::MatrixXd::Zero(1 + static_cast<int>(pin_rows.size()), n);
    p.b_eq = Eigen::VectorXd::Zero(1 + static_cast<int>(pin_rows.size()));
    for (int k = 0; k < cap; ++k)
        for (int w = 0; w < states; ++w)
            p.a_eq(0, y_index(k, w, states)) = config.channel().eta(w);
    p.b_eq(0) = mean_rate(config.arrival());
    for (size_t i = 0; i < pin_rows.size(); ++i)
        p.a_eq.row(1 + static_cast<Eigen::Index>(i)) = g.g.row(pin_rows[i]);

    return p;
}

namespace {

DelaySolution interpret_solution(const SystemConfig& config, const LpSolution& raw) {
    DelaySolution out;
    out.status = raw.status;
    if (raw.status != LpStatus::Optimal)
        return out;
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    out.y.y = Eigen::MatrixXd::Zero(cap, states);
    for (int k = 0; k < cap; ++k)
        for (int w = 0; w < states; ++w)
            out.y.y(k, w) = raw.x(y_index(k, w, states));

    const double abar = mean_rate(config.arrival());
    double weighted = 0.0, power = 0.0;
    for (int k = 0; k < cap; ++k)
        for (int w = 0; w < states; ++w) {
            weighted += k * config.channel().eta(w) * out.y.y(k, w);
            power += config.channel().eta(w) * config.channel().power(w) * out.y.y(k, w);
        }
    out.delay = (weighted - xi_constant(config.arrival())) / (abar * abar);
    out.power = power;
    out.pi = pi_from_y(build_g(config), out.y);
    return out;
}

} // namespace

DelaySolution solve_delay_lp(const SystemConfig& config, double power_budget) {
    return interpret_solution(config, solve_simplex(build_lp(config, power_budget)));
}

double min_feasible_power(const SystemConfig& config) {
    LpProblem p = build_lp(config, 0.0);
    // move the power row into the objective, keep the rest
    Eigen::VectorXd power_row = p.a_ub.row(0).transpose();
    Eigen::MatrixXd a_ub = p.a_ub.bottomRows(p.a_ub.rows() - 1);
    Eigen::VectorXd b_ub = p.b_ub.tail(p.b_ub.size() - 1);
    LpProblem q{power_row, std::move(a_ub), std::move(b_ub), p.a_eq, p.b_eq};
    LpSolution sol = solve_simplex(q);
    if (sol.status != LpStatus::Optimal)
        throw Error(Errc::NumericalBreakdown, "min-power LP did not solve");
    return sol.objective;
}

ThresholdPolicy extract_thresholds(const DelaySolution& sol, const GMatrix& g,
                                   const SystemConfig& config) {
    if (sol.status != LpStatus::Optimal)
        throw Error(Errc::NotThresholdStructured, "no optimal solution to extract from");
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    if (g.rows() != cap + 1 || g.cols() != cap * states)
        throw Error(Errc::DimensionMismatch, "G dimensions do not match config");
    const Eigen::VectorXd& pi = sol.pi;

    ThresholdPolicy tp;
    tp.threshold.resize(static_cast<size_t>(states));
    tp.frac.resize(static_cast<size_t>(states));

    for (int w = 0; w < states; ++w) {
        // per-level upper bounds sum_m theta_m pi_{k+1-m}
        std::vector<double> bound(static_cast<size_t>(cap));
        for (int k = 0; k < cap; ++k) {
            double s = 0.0;
            for (int m = 0; m <= std::min(config.max_batch(), k + 1); ++m)
                s += config.arrival().theta(m) * pi(k + 1 - m);
            bound[static_cast<size_t>(k)] = s;
        }
        int boundary = -1;
        for (int k = 0; k < cap; ++k) {
            if (bound[static_cast<size_t>(k)] <= kThresholdTol)
                continue; // unreachable level, pattern-neutral
            double v = sol.y.y(k, w);
            if (boundary < 0) {
                if (v > kThresholdTol)
                    boundary = k;
            } else if (v < bound[static_cast<size_t>(k)] - kThresholdTol) {
                throw Error(Errc::NotThresholdStructured,
                            "column " + std::to_string(w + 1) +
                                " is not zero/fractional/saturated at level " +
                                std::to_string(k));
            }
        }
        if (boundary < 0) {
            tp.threshold[static_cast<size_t>(w)] = cap + 1; // never transmit
            tp.frac[static_cast<size_t>(w)] = 0.0;
            continue;
        }
        tp.threshold[static_cast<size_t>(w)] = boundary + 1;
        double denom = bound[static_cast<size_t>(boundary)];
        double frac = denom < kDegenerateBound ? 1.0 : sol.y.y(boundary, w) / denom;
        tp.frac[static_cast<size_t>(w)] = std::clamp(frac, 0.0, 1.0);
    }
    return tp;
}

Policy threshold_to_policy(const ThresholdPolicy& tp, const SystemConfig& config) {
    const int cap = config.buffer_capacity();
    const int states = config.num_channel_states();
    if (static_cast<int>(tp.threshold.size()) != states ||
        static_cast<int>(tp.frac.size()) != states)
        throw Error(Errc::DimensionMismatch, "threshold policy width does not match config");
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(cap + 1, states);
    for (int w = 0; w < states; ++w) {
        int kw = tp.threshold[static_cast<size_t>(w)];
        if (kw < 1 || kw > cap + 1)
            throw Error(Errc::IndexOutOfRange,
                        "threshold " + std::to_string(kw) + " outside [1, K+1]");
        for (int q = 1; q <= cap; ++q) {
            if (q > kw)
                f(q, w) = 1.0;
            else if (q == kw)
                f(q, w) = tp.frac[static_cast<size_t>(w)];
        }
    }
    return Policy(std::move(f));
}

SolveResult solve_for_policy(const SystemConfig& config, double power_budget,
                             DelaySolution* out_solution) {
    SolveResult out;
    DelaySolution sol = solve_delay_lp(config, power_budget);
    out.status = sol.status;
    if (sol.status != LpStatus::Optimal) {
        if (out_solution)
            *out_solution = std::move(sol);
        return out;
    }
    GMatrix g = build_g(config);
    try {
        out.policy = extract_thresholds(sol, g, config);
    } catch (const Error& e) {
        if (e.code() != Errc::NotThresholdStructured)
            throw;
        // optimum ties on a non-threshold vertex: nudge the objective toward
        // the threshold-structured corner and re-solve
        LpProblem p = build_lp(config, power_budget);
        p.c = objective_coefficients(config, /*perturbed=*/true);
        DelaySolution nudged = interpret_solution(config, solve_simplex(p));
        if (nudged.status != LpStatus::Optimal)
            throw;
        sol = std::move(nudged);
        // delay recomputed from the unperturbed objective terms inside
        // interpret_solution, so only the vertex choice changes
        out.policy = extract_thresholds(sol, g, config);
    }
    out.delay = sol.delay;
    out.power = sol.power;
    out.boundary_mass = sol.pi(config.buffer_capacity());
    if (out_solution)
        *out_solution = std::move(sol);
    return out;
}

std::vector<TradeoffPoint> sweep(const SystemConfig& config, const std::vector<double>& budgets) {
    std::vector<TradeoffPoint> points(budgets.size());
    const unsigned workers =
        std::max(1u, std::min(std::thread::hardware_concurrency(),
                              static_cast<unsigned>(budgets.size())));
    std::atomic<size_t> next{0};
    auto run = [&]() {
        for (size_t i = next.fetch_add(1); i < budgets.size(); i = next.fetch_add(1)) {
            TradeoffPoint& pt = points[i];
            pt.budget = budgets[i];
            SolveResult sol = solve_for_policy(config, budgets[i]);
            if (sol.status == LpStatus::Optimal) {
                pt.feasible = true;
                pt.power = sol.power;
                pt.delay = sol.delay;
                pt.policy = sol.policy;
                pt.boundary_mass = sol.boundary_mass;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t)
        pool.emplace_back(run);
    run();
    for (std::thread& t : pool)
        t.join();
    return points;
}

std::vector<double> default_budget_grid(const SystemConfig& config, int n) {
    if (n < 2)
        throw Error(Errc::TooLarge, "budget grid needs at least two points");
    double lo = min_feasible_power(config) * (1.0 + 1e-9);
    double hi = evaluate_policy(config, Policy::constant(config, 1.0)).power;
    if (hi <= lo)
        return {lo};
    std::vector<double> grid(static_cast<size_t>(n));
    double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        grid[static_cast<size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

} // namespace qsched
