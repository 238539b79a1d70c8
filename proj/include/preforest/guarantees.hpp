#pragma once

// Closed-form statistics behind the verifier: distribution-free tolerance
// sample sizes (Wilks), Chernoff occupancy bounds, the coverage/error bound
// pair, and the resampling budget planner.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace preforest {

struct GuaranteeParams {
    double delta = 0.001;          // confidence error
    double purity = 0.995;         // R: minimum per-box positive fraction
    double coverage_target = 0.9;  // c
    double epsilon = 0.005;        // tolerated error fraction of the output union

    /// Throws on out-of-range values; returns human-readable consistency
    /// warnings (non-fatal) such as epsilon < 1 - R.
    std::vector<std::string> validate() const {
        if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
        if (!(purity > 0.0 && purity < 1.0)) throw std::invalid_argument("R must be in (0,1)");
        if (!(coverage_target >= 0.0 && coverage_target <= 1.0))
            throw std::invalid_argument("coverage target must be in [0,1]");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0,1)");
        std::vector<std::string> warnings;
        if (epsilon < 1.0 - purity - 1e-12)
            warnings.push_back("epsilon " + std::to_string(epsilon) +
                               " is below 1-R = " + std::to_string(1.0 - purity) +
                               "; the per-box purity bound cannot certify it");
        return warnings;
    }
};

/// Smallest n with 1 - R^n >= 1 - delta: all-positive evidence of size n
/// bounds the chance of purity below R by delta.
inline std::int64_t wilks_n(double delta, double R) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("wilks_n: delta must be in (0,1)");
    if (!(R > 0.0 && R < 1.0)) throw std::invalid_argument("wilks_n: R must be in (0,1)");
    const double raw = std::log(delta) / std::log(R);
    // the log ratio lands a few ulp above exact integers; don't round those up
    auto n = static_cast<std::int64_t>(std::ceil(raw - 1e-9));
    return n < 1 ? 1 : n;
}

/// Confidence 1 - R^n that a box passing n all-positive draws has purity >= R.
inline double wilks_confidence(std::int64_t n, double R) {
    if (n < 1) throw std::invalid_argument("wilks_confidence: n must be >= 1");
    if (!(R > 0.0 && R < 1.0)) throw std::invalid_argument("wilks_confidence: R must be in (0,1)");
    return 1.0 - std::pow(R, static_cast<double>(n));
}

/// Probability that fewer than n of m uniform training points land in a
/// given grid cell of volume xi^N: exp(-(1 - 1/alpha)^2 * m * xi^N / 2).
inline double chernoff_miss_probability(std::int64_t m, double xi, std::size_t N, double alpha) {
    if (!(alpha > 1.0)) throw std::invalid_argument("chernoff_miss_probability: alpha must be > 1");
    if (m < 0) throw std::invalid_argument("chernoff_miss_probability: m must be >= 0");
    if (!(xi > 0.0 && xi <= 1.0)) throw std::invalid_argument("chernoff_miss_probability: xi must be in (0,1]");
    const double mu = static_cast<double>(m) * std::pow(xi, static_cast<double>(N));
    const double t = 1.0 - 1.0 / alpha;
    return std::exp(-t * t * mu / 2.0);
}

/// Training-set size above which the occupancy bound applies: n * alpha / xi^N.
inline double chernoff_min_training_samples(std::int64_t n, double xi, std::size_t N,
                                            double alpha) {
    return static_cast<double>(n) * alpha / std::pow(xi, static_cast<double>(N));
}

/// Union bound over all grid cells of an estimated-positive region: the
/// chance some cell is under-sampled in every one of T trees.
inline double forest_miss_probability(double p_neg, std::int64_t T, double vol_b_hat, double xi,
                                      std::size_t N) {
    if (!(p_neg >= 0.0 && p_neg <= 1.0))
        throw std::invalid_argument("forest_miss_probability: p_neg must be in [0,1]");
    if (T < 1) throw std::invalid_argument("forest_miss_probability: T must be >= 1");
    if (vol_b_hat < 0.0) throw std::invalid_argument("forest_miss_probability: negative volume");
    if (vol_b_hat == 0.0) return 0.0;
    const double cells = vol_b_hat / std::pow(xi, static_cast<double>(N));
    const double p = cells * std::pow(p_neg, static_cast<double>(T));
    return p < 1.0 ? p : 1.0;
}

/// ((k-2)/k)^N: fraction of a k*xi-bounded region that grid-aligned shrinking
/// provably retains.
inline double coverage_lower_bound(std::int64_t k_factor, std::size_t N) {
    if (k_factor < 3) throw std::invalid_argument("coverage_lower_bound: k must be >= 3");
    if (N < 1) throw std::invalid_argument("coverage_lower_bound: N must be >= 1");
    return std::pow(static_cast<double>(k_factor - 2) / static_cast<double>(k_factor),
                    static_cast<double>(N));
}

/// (1-R) * Vol: upper bound on the false-positive volume of a returned union.
inline double error_upper_bound(double R, double vol_returned) {
    if (!(R > 0.0 && R <= 1.0)) throw std::invalid_argument("error_upper_bound: R must be in (0,1]");
    if (vol_returned < 0.0) throw std::invalid_argument("error_upper_bound: negative volume");
    return (1.0 - R) * vol_returned;
}

struct BudgetPlan {
    std::int64_t n_per_box = 0;
    std::int64_t max_boxes = 0;
    std::int64_t total_resamples = 0;
    std::int64_t trees = 0;
    int depth = 0;
};

/// Worst-case resampling budget for a forest: every one of T*2^(D-1)
/// candidate boxes costs n fresh samples.
inline BudgetPlan plan_budget(const GuaranteeParams& params, std::int64_t T, int D) {
    if (T < 1) throw std::invalid_argument("plan_budget: T must be >= 1");
    if (D < 1 || D > 62) throw std::invalid_argument("plan_budget: D must be in [1, 62]");
    BudgetPlan plan;
    plan.trees = T;
    plan.depth = D;
    plan.n_per_box = wilks_n(params.delta, params.purity);
    const std::int64_t leaves_per_tree = std::int64_t{1} << (D - 1);
    if (__builtin_mul_overflow(T, leaves_per_tree, &plan.max_boxes))
        throw std::overflow_error("plan_budget: max_boxes overflows");
    if (__builtin_mul_overflow(plan.n_per_box, plan.max_boxes, &plan.total_resamples))
        throw std::overflow_error("plan_budget: total_resamples overflows");
    return plan;
}

} // namespace preforest
