#include "qsched/simplex.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qsched/errors.hpp"

namespace qsched {

namespace {

constexpr int kStallLimit = 200; // degenerate iterations before Bland's rule kicks in

struct Tableau {
    Eigen::MatrixXd rows;     // constraints, rhs in the last column
    Eigen::RowVectorXd cost;  // phase-2 reduced costs
    double cost_rhs = 0.0;    // negated phase-2 objective value
    Eigen::RowVectorXd art;   // phase-1 reduced costs
    double art_rhs = 0.0;
    std::vector<int> basis;   // basic column per row
    int n_structural = 0;     // structural + slack columns (artificials after)
    int n_total = 0;

    int rhs_col() const { return n_total; }

    void pivot(int r, int c) {
        double p = rows(r, c);
        rows.row(r) /= p;
        rows(r, c) = 1.0;
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
            if (i == r)
                continue;
            double factor = rows(i, c);
            if (factor != 0.0) {
                rows.row(i) -= factor * rows.row(r);
                rows(i, c) = 0.0;
            }
        }
        double cf = cost(c);
        if (cf != 0.0) {
            cost -= cf * rows.row(r).head(n_total);
            cost_rhs -= cf * rows(r, rhs_col());
            cost(c) = 0.0;
        }
        double af = art(c);
        if (af != 0.0) {
            art -= af * rows.row(r).head(n_total);
            art_rhs -= af * rows(r, rhs_col());
            art(c) = 0.0;
        }
        basis[static_cast<size_t>(r)] = c;
    }
};

/// One simplex phase. `obj` points at the active reduced-cost row; columns in
/// [ban_from, n_total) may not enter. Returns false on unboundedness.
bool run_phase(Tableau& t, bool phase_one, int ban_from) {
    const int m = static_cast<int>(t.rows.rows());
    Eigen::RowVectorXd& obj = phase_one ? t.art : t.cost;
    double& obj_rhs = phase_one ? t.art_rhs : t.cost_rhs;

    bool bland = false;
    int stall = 0;
    double last_obj = -obj_rhs;
    long iter_cap = 2000L + 400L * (m + t.n_total);
    for (long iter = 0;; ++iter) {
        if (iter > iter_cap) {
            if (!bland) { // one chance: restart the count under Bland's rule
                bland = true;
                iter = 0;
                continue;
            }
            throw Error(Errc::CycleDetected,
                        "simplex failed to terminate under Bland's rule");
        }

        int enter = -1;
        if (bland) {
            for (int j = 0; j < ban_from; ++j)
                if (obj(j) < -kLpOptTol) {
                    enter = j;
                    break;
                }
        } else {
            double best = -kLpOptTol;
            for (int j = 0; j < ban_from; ++j)
                if (obj(j) < best) {
                    best = obj(j);
                    enter = j;
                }
        }
        if (enter < 0)
            return true; // optimal for this phase

        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            double a = t.rows(i, enter);
            if (a <= kLpPivotTol)
                continue;
            double ratio = t.rows(i, t.rhs_col()) / a;
            if (ratio < best_ratio - 1e-12 ||
                (ratio < best_ratio + 1e-12 &&
                 (leave < 0 || t.basis[static_cast<size_t>(i)] <
                                   t.basis[static_cast<size_t>(leave)]))) {
                best_ratio = ratio;
                leave = i;
            }
        }
        if (leave < 0) {
            if (phase_one)
                throw Error(Errc::NumericalBreakdown,
                            "phase-1 objective unbounded; bad constraint scaling");
            return false; // unbounded
        }

        t.pivot(leave, enter);

        double cur_obj = -obj_rhs;
        if (cur_obj < last_obj - 1e-12) {
            stall = 0;
            last_obj = cur_obj;
        } else if (!bland && ++stall >= kStallLimit) {
            bland = true;
        }
    }
}

} // namespace

LpSolution solve_simplex(const LpProblem& problem) {
    const int n = problem.num_vars();
    const int m_ub = static_cast<int>(problem.a_ub.rows());
    const int m_eq = static_cast<int>(problem.a_eq.rows());
    const int m = m_ub + m_eq;
    if ((m_ub > 0 && problem.a_ub.cols() != n) || (m_eq > 0 && problem.a_eq.cols() != n) ||
        problem.b_ub.size() != m_ub || problem.b_eq.size() != m_eq)
        throw Error(Errc::DimensionMismatch, "LP constraint dimensions disagree");

    // Assemble rows with rhs >= 0. A <= row with negative rhs flips into a >=
    // row, which takes a surplus column and an artificial.
    struct RowSpec {
        Eigen::VectorXd a;
        double b;
        int kind; // 0: slack, 1: surplus+artificial, 2: artificial only
    };
    std::vector<RowSpec> specs;
    specs.reserve(static_cast<size_t>(m));
    for (int i = 0; i < m_ub; ++i) {
        RowSpec s{problem.a_ub.row(i).transpose(), problem.b_ub(i), 0};
        if (s.b < 0.0) {
            s.a = -s.a;
            s.b = -s.b;
            s.kind = 1;
        }
        specs.push_back(std::move(s));
    }
    for (int i = 0; i < m_eq; ++i) {
        RowSpec s{problem.a_eq.row(i).transpose(), problem.b_eq(i), 2};
        if (s.b < 0.0) {
            s.a = -s.a;
            s.b = -s.b;
        }
        specs.push_back(std::move(s));
    }

    int n_slack = 0, n_art = 0;
    for (const RowSpec& s : specs) {
        if (s.kind != 2)
            ++n_slack;
        if (s.kind != 0)
            ++n_art;
    }

    Tableau t;
    t.n_structural = n + n_slack;
    t.n_total = n + n_slack + n_art;
    t.rows = Eigen::MatrixXd::Zero(m, t.n_total + 1);
    t.basis.assign(static_cast<size_t>(m), -1);
    t.cost = Eigen::RowVectorXd::Zero(t.n_total);
    t.cost.head(n) = problem.c.transpose();
    t.art = Eigen::RowVectorXd::Zero(t.n_total);

    int slack_at = n, art_at = n + n_slack;
    for (int i = 0; i < m; ++i) {
        const RowSpec& s = specs[static_cast<size_t>(i)];
        t.rows.row(i).head(n) = s.a.transpose();
        t.rows(i, t.rhs_col()) = s.b;
        if (s.kind == 0) {
            t.rows(i, slack_at) = 1.0;
            t.basis[static_cast<size_t>(i)] = slack_at++;
        } else {
            if (s.kind == 1)
                t.rows(i, slack_at++) = -1.0;
            t.rows(i, art_at) = 1.0;
            t.basis[static_cast<size_t>(i)] = art_at++;
            // price the artificial row out of the phase-1 objective
            t.art.head(t.n_total) -= t.rows.row(i).head(t.n_total);
            t.art_rhs -= t.rows(i, t.rhs_col());
            t.art(t.basis[static_cast<size_t>(i)]) = 0.0;
        }
    }
    // artificial columns keep unit phase-1 cost; priced out above per basic one
    // (leaving them at zero reduced cost in the current basis).

    if (n_art > 0) {
        run_phase(t, /*phase_one=*/true, /*ban_from=*/t.n_structural);
        if (-t.art_rhs > kLpFeasTol)
            return LpSolution{LpStatus::Infeasible, Eigen::VectorXd::Zero(n), 0.0};
        // drive remaining basic artificials out; rows that offer no structural
        // pivot are redundant and must be removed before phase 2
        std::vector<int> keep;
        for (int i = 0; i < static_cast<int>(t.rows.rows()); ++i) {
            int b = t.basis[static_cast<size_t>(i)];
            if (b < t.n_structural) {
                keep.push_back(i);
                continue;
            }
            int col = -1;
            double best = kLpPivotTol;
            for (int j = 0; j < t.n_structural; ++j)
                if (std::abs(t.rows(i, j)) > best) {
                    best = std::abs(t.rows(i, j));
                    col = j;
                }
            if (col >= 0) {
                t.pivot(i, col);
                keep.push_back(i);
            }
        }
        if (keep.size() != t.basis.size()) {
            Eigen::MatrixXd pruned(static_cast<Eigen::Index>(keep.size()), t.rows.cols());
            std::vector<int> pruned_basis;
            pruned_basis.reserve(keep.size());
            for (size_t i = 0; i < keep.size(); ++i) {
                pruned.row(static_cast<Eigen::Index>(i)) = t.rows.row(keep[i]);
                pruned_basis.push_back(t.basis[static_cast<size_t>(keep[i])]);
            }
            t.rows = std::move(pruned);
            t.basis = std::move(pruned_basis);
        }
    }

    bool bounded = run_phase(t, /*phase_one=*/false, /*ban_from=*/t.n_structural);
    if (!bounded)
        return LpSolution{LpStatus::Unbounded, Eigen::VectorXd::Zero(n), 0.0};

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < static_cast<int>(t.rows.rows()); ++i) {
        int b = t.basis[static_cast<size_t>(i)];
        if (b < n)
            x(b) = t.rows(i, t.rhs_col());
    }
    for (int j = 0; j < n; ++j)
        if (x(j) < 0.0 && x(j) > -kLpFeasTol)
            x(j) = 0.0;
    double objective = problem.c.dot(x);
    return LpSolution{LpStatus::Optimal, std::move(x), objective};
}

} // namespace qsched
