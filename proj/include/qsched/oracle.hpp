#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsched/lp.hpp"
#include "qsched/rng.hpp"

namespace qsched {

/// One enumerated deterministic threshold policy with its exact chain metrics.
struct AtlasEntry {
    ThresholdPolicy policy;
    bool stable = false; // false: chain deadlocks (never serves), metrics unset
    double delay = 0.0;
    double power = 0.0;
    double overflow = 0.0; // overflow event probability under this policy
};

struct PolicyAtlas {
    std::vector<AtlasEntry> entries;
};

/// Evaluates every threshold vector in {1..K+1}^W (frac = 1).
/// Guard: (K+1)^W <= 1e5, else TooLarge. Entries in lexicographic order.
PolicyAtlas enumerate_pure(const SystemConfig& config);

/// Lower convex hull of the stable (power, delay) points, restricted to its
/// non-increasing part; evaluable at any budget by linear interpolation.
class TradeoffCurve {
  public:
    explicit TradeoffCurve(std::vector<std::pair<double, double>> vertices);

    /// Minimum delay achievable within the budget; nullopt below min power.
    std::optional<double> operator()(double budget) const;

    const std::vector<std::pair<double, double>>& vertices() const { return vertices_; }
    double min_power() const { return vertices_.front().first; }
    double max_power() const { return vertices_.back().first; }

  private:
    std::vector<std::pair<double, double>> vertices_;
};

/// Hull of an atlas; throws Empty when no stable policy exists.
TradeoffCurve lower_hull(const PolicyAtlas& atlas);

/// Numerical verification of the y-space transformations over random policies.
/// All residuals are for the exact finite-buffer identities; the *_raw fields
/// report the idealized infinite-buffer forms, whose gap equals the buffer
/// overflow terms also reported here.
struct TransformReport {
    int n_policies = 0;
    std::uint64_t seed = 0;

    double cut_balance_max = 0.0;       // Lemma 3(a), cuts 0..K-1
    double throughput_max = 0.0;        // Lemma 3(b) with loss correction
    double throughput_raw_max = 0.0;    // |sum eta y - abar| = loss rate
    double y_bounds_violation = 0.0;    // Lemma 3(c)
    double reconstruction_max = 0.0;    // Eq.17 rows 0..K-1
    double reconstruction_top_max = 0.0;     // row K with overflow correction
    double reconstruction_top_raw_max = 0.0; // row K uncorrected
    double power_identity_max = 0.0;    // Lemma 2 power vs Eq. 12
    double delay_identity_max = 0.0;    // Lemma 2 delay with truncation correction
    double delay_identity_raw_max = 0.0;

    // affine fit of Eq.10 delay against the (corrected) Lemma 2 expression
    double affine_slope = 1.0;
    double affine_intercept = 0.0;
    double affine_residual_max = 0.0;

    double max_loss_rate = 0.0; // truncation caveat over the policy sample
    int skipped = 0;            // policies whose chain could not be solved

    bool pass() const;
    std::string to_text() const;
};

TransformReport verify_transformations(const SystemConfig& config, int n_random,
                                       std::uint64_t seed);

/// Uniform random policy: each f(q, w) ~ U[0,1], row 0 zeroed.
Policy random_policy(const SystemConfig& config, SplitMix64& rng);

/// (delay, power) of a policy in the idealized no-overflow chain model the LP
/// optimizes over: cut balance on levels 0..K-1 plus normalization. Returns
/// nullopt when the policy is not representable there (it would overflow, so
/// the throughput identity breaks) — used to locate budget ranges where the
/// idealized model and the exact finite-buffer chain coincide.
std::optional<std::pair<double, double>> no_overflow_metrics(const SystemConfig& config,
                                                             const Policy& policy);

/// Largest number of strictly fractional y entries in any channel column
/// (levels whose upper bound is active or zero do not count).
int max_fractional_per_column(const DelaySolution& sol, const SystemConfig& config);

/// LP-vs-enumeration cross-check. Budgets are taken from the range where the
/// exact chain hull and the no-overflow-model hull of the same enumeration
/// agree within screen_tol (finite-buffer truncation is immaterial there), at
/// or above the LP's own minimum feasible power. Throws Empty when no such
/// range exists for this instance.
struct HullCheck {
    std::vector<double> budgets;
    double max_gap = 0.0;
    int max_fractional = 0;
    bool threshold_structured = true;
    double tol = 1e-6;

    bool pass() const { return threshold_structured && max_fractional <= 1 && max_gap < tol; }
};
HullCheck hull_vs_lp(const SystemConfig& config, int n_budgets = 20, double tol = 1e-6,
                     double screen_tol = 2e-8);

/// Samples random policies until n_feasible meet the budget on the exact
/// chain, then checks none beats the LP optimum.
struct DominanceCheck {
    double budget = 0.0;
    double lp_delay = 0.0;
    int n_feasible = 0;
    int n_sampled = 0;
    double min_margin = 0.0; // min over policies of (policy delay - lp delay)

    bool pass() const { return n_feasible > 0 && min_margin > -1e-9; }
};
DominanceCheck dominance_check(const SystemConfig& config, double budget, int n_feasible,
                               std::uint64_t seed);

} // namespace qsched
