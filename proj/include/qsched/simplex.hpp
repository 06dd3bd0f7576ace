#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qsched {

/// min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
struct LpProblem {
    Eigen::VectorXd c;
    Eigen::MatrixXd a_ub;
    Eigen::VectorXd b_ub;
    Eigen::MatrixXd a_eq;
    Eigen::VectorXd b_eq;

    int num_vars() const { return static_cast<int>(c.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;
};

constexpr double kLpFeasTol = 1e-8;   // phase-1 optimum above this -> infeasible
constexpr double kLpOptTol = 1e-9;    // reduced costs above -kLpOptTol -> optimal
constexpr double kLpPivotTol = 1e-11; // reject smaller pivots

/// Two-phase dense primal simplex. Entering variable by steepest reduced cost,
/// switching to Bland's rule once the objective stalls, which guarantees
/// termination. Throws NumericalBreakdown / CycleDetected on pathologies.
LpSolution solve_simplex(const LpProblem& problem);

} // namespace qsched
