#include <doctest.h>

#include "qsched/simplex.hpp"

using namespace qsched;

namespace {

LpProblem make(const std::vector<double>& c, const std::vector<std::vector<double>>& a_ub,
               const std::vector<double>& b_ub, const std::vector<std::vector<double>>& a_eq = {},
               const std::vector<double>& b_eq = {}) {
    LpProblem p;
    const int n = static_cast<int>(c.size());
    p.c = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
    p.a_ub.resize(static_cast<Eigen::Index>(a_ub.size()), n);
    p.b_ub.resize(static_cast<Eigen::Index>(b_ub.size()));
    for (size_t i = 0; i < a_ub.size(); ++i) {
        p.a_ub.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::VectorXd>(a_ub[i].data(), n).transpose();
        p.b_ub(static_cast<Eigen::Index>(i)) = b_ub[i];
    }
    p.a_eq.resize(static_cast<Eigen::Index>(a_eq.size()), n);
    p.b_eq.resize(static_cast<Eigen::Index>(b_eq.size()));
    for (size_t i = 0; i < a_eq.size(); ++i) {
        p.a_eq.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::VectorXd>(a_eq[i].data(), n).transpose();
        p.b_eq(static_cast<Eigen::Index>(i)) = b_eq[i];
    }
    return p;
}

} // namespace

TEST_CASE("textbook maximization") {
    // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
    LpSolution s = solve_simplex(
        make({-3, -5}, {{1, 0}, {0, 2}, {3, 2}}, {4, 12, 18}));
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(-36.0).epsilon(1e-12));
    CHECK(s.x(0) == doctest::Approx(2.0));
    CHECK(s.x(1) == doctest::Approx(6.0));
}

TEST_CASE("equality constraints via two-phase") {
    // min x + 2y s.t. x + y = 1, x - y <= 0.2 -> x = 0.6, y = 0.4
    LpSolution s = solve_simplex(make({1, 2}, {{1, -1}}, {0.2}, {{1, 1}}, {1}));
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.x(0) == doctest::Approx(0.6));
    CHECK(s.x(1) == doctest::Approx(0.4));
    CHECK(s.objective == doctest::Approx(1.4));
}

TEST_CASE("negative rhs rows are handled") {
    // min x s.t. -x <= -3  (x >= 3)
    LpSolution s = solve_simplex(make({1}, {{-1}}, {-3}));
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.x(0) == doctest::Approx(3.0));
}

TEST_CASE("infeasible system is reported") {
    // x <= 1 and x >= 2
    LpSolution s = solve_simplex(make({1}, {{1}, {-1}}, {1, -2}));
    CHECK(s.status == LpStatus::Infeasible);
}

TEST_CASE("unbounded problem is reported") {
    LpSolution s = solve_simplex(make({-1}, {{-1}}, {0}));
    CHECK(s.status == LpStatus::Unbounded);
}

TEST_CASE("redundant equalities survive phase one") {
    // x + y = 1 stated twice
    LpSolution s = solve_simplex(make({1, 3}, {}, {}, {{1, 1}, {1, 1}}, {1, 1}));
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.x(0) == doctest::Approx(1.0));
    CHECK(s.objective == doctest::Approx(1.0));
}

TEST_CASE("Beale's cycling example terminates at the optimum") {
    // classic degenerate instance that cycles under naive most-negative pivoting
    LpSolution s = solve_simplex(make({-0.75, 150, -0.02, 6},
                                      {{0.25, -60, -0.04, 9}, {0.5, -90, -0.02, 3}, {0, 0, 1, 0}},
                                      {0, 0, 1}));
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(-0.05).epsilon(1e-9));
}

TEST_CASE("degenerate vertex does not stall") {
    // several constraints meet at the optimum (0, 1)
    LpSolution s = solve_simplex(
        make({0, -1}, {{1, 1}, {-1, 1}, {0, 1}, {2, 1}}, {1, 1, 1, 1}));
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(-1.0));
}

TEST_CASE("zero objective returns any feasible point") {
    LpSolution s = solve_simplex(make({0, 0}, {{1, 1}}, {1}, {{1, -1}}, {0.5}));
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.x(0) - s.x(1) == doctest::Approx(0.5).epsilon(1e-10));
}
