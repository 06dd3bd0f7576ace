#pragma once

#include <optional>
#include <vector>

#include "qsched/markov.hpp"
#include "qsched/simplex.hpp"

namespace qsched {

/// y(k, w) = Pr{a departure over channel state w leaves k packets behind},
/// k = 0..K-1 (a departure can never leave K behind).
struct YVariables {
    Eigen::MatrixXd y; // K rows, W cols

    int queue_levels() const { return static_cast<int>(y.rows()); }
    int num_channel_states() const { return static_cast<int>(y.cols()); }
};

/// Linear map reconstructing the stationary distribution from stacked y:
/// pi = G * vec(y), vec in k-major order. Rows 0..K.
struct GMatrix {
    Eigen::MatrixXd g;

    int rows() const { return static_cast<int>(g.rows()); }
    int cols() const { return static_cast<int>(g.cols()); }
};

/// Per-channel queue thresholds: transmit iff the post-arrival queue length
/// exceeds threshold[w]; exactly at it, transmit with probability frac[w].
/// threshold[w] = K + 1 encodes "never transmit on state w".
struct ThresholdPolicy {
    std::vector<int> threshold;
    std::vector<double> frac;
};

struct DelaySolution {
    LpStatus status = LpStatus::Infeasible;
    double delay = 0.0;
    double power = 0.0;
    YVariables y;
    Eigen::VectorXd pi; // reconstructed G * y
};

struct TradeoffPoint {
    double budget = 0.0;
    bool feasible = false;
    double power = 0.0;
    double delay = 0.0;
    ThresholdPolicy policy;
    double boundary_mass = 0.0; // reconstructed pi at the buffer cap
};

/// Change of variables from a policy and its stationary distribution:
/// y(k, w) = f(k+1, w) * sum_m theta_m pi_{k+1-m}.
YVariables substitute_y(const SystemConfig& config, const Policy& policy,
                        const StationaryDistribution& pi);

/// G rows by the triangular recursion derived from the cut-balance identity:
/// pi_k = (1/r_0) (sum_w eta_w y_{k,w} - sum_{i>=1} r_i pi_{k-i}).
/// Throws DegenerateArrivals when r_0 = 0.
GMatrix build_g(const SystemConfig& config);

/// pi = G * vec(y); round-off in [-1e-10, 0) clamped to zero. The result is a
/// distribution only when y came from a realizable policy.
Eigen::VectorXd pi_from_y(const GMatrix& g, const YVariables& y);

/// Assembles the delay-minimization LP over y for a given power budget:
/// objective (sum k eta_w y - xi) / abar^2; power row <= budget; throughput
/// row = abar; Eq-18c upper bounds through G; non-negativity rows (Gy)_k >= 0;
/// and zero rows (Gy)_j = 0 for j > K - M pinning the buffer tail (see README
/// notes; required for the finite-buffer LP to match policy enumeration).
LpProblem build_lp(const SystemConfig& config, double power_budget);

/// Solves the LP and reports delay, used power and the reconstructed pi.
DelaySolution solve_delay_lp(const SystemConfig& config, double power_budget);

/// Smallest power budget for which the LP is feasible (min-power LP).
double min_feasible_power(const SystemConfig& config);

/// Reads the per-channel thresholds off an optimal y (zero block, at most one
/// fractional entry, saturated block). Throws NotThresholdStructured when the
/// pattern is violated beyond 1e-7.
ThresholdPolicy extract_thresholds(const DelaySolution& sol, const GMatrix& g,
                                   const SystemConfig& config);

/// Expands thresholds to the full f matrix (0 below, frac at, 1 above).
Policy threshold_to_policy(const ThresholdPolicy& tp, const SystemConfig& config);

/// Solve + extract in one step; re-solves with a lexicographic objective
/// perturbation if the optimum ties on a non-threshold vertex. When
/// out_solution is given it receives the y/pi the thresholds were read from.
struct SolveResult {
    LpStatus status = LpStatus::Infeasible;
    double delay = 0.0;
    double power = 0.0;
    ThresholdPolicy policy;
    double boundary_mass = 0.0;
};
SolveResult solve_for_policy(const SystemConfig& config, double power_budget,
                             DelaySolution* out_solution = nullptr);

/// Fault-injection hook for the verification pipeline: scales one G entry.
/// Zero restores normal operation.
void set_g_tamper(double relative_perturbation);

/// One LP per budget (ascending); infeasible budgets flagged, not dropped.
/// Budgets are solved concurrently; output order follows the input order.
std::vector<TradeoffPoint> sweep(const SystemConfig& config, const std::vector<double>& budgets);

/// Default budget grid: n log-spaced points from the minimum feasible power
/// to the average power of the greedy always-transmit policy, inclusive.
std::vector<double> default_budget_grid(const SystemConfig& config, int n = 60);

} // namespace qsched
