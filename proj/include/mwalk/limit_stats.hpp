#pragma once

#include <cstdint>
#include <vector>

#include "mwalk/estimators.hpp"
#include "mwalk/stats.hpp"
#include "mwalk/walk.hpp"

namespace mwalk {

enum class DistanceKind { WassersteinR, KolmogorovSmirnov };

struct RateFitResult {
    double exponent_hat = 0.0;
    double intercept_hat = 0.0;
    double r_squared = 0.0;
    BootstrapCI exponent_ci;
    std::vector<long long> grid_n;
    std::vector<double> distances;
    std::vector<double> distances_lo;  // bootstrap 95% band per grid point
    std::vector<double> distances_hi;
    double alt_exponent = 0.0;   // fit with an extra log log n term
    double alt_log_coeff = 0.0;
    bool unreliable = false;     // r^2 < 0.5
    bool degenerate = false;     // sigma_hat = 0 path
    double lambda_hat = 0.0;
    double sigma2_hat = 0.0;
    std::uint64_t calibration_seed = 0;
    BootstrapCI slope_ci;        // CI of the raw log-log slope (= -exponent)
};

// Builds SampleSets of (S_n - n lambda_hat)/sqrt(n) at each grid point,
// computes the chosen distance to G_{sigma_hat} and fits the decay exponent.
// lambda_hat / sigma_hat come from an independent calibration ensemble.
RateFitResult rate_scan(const MatrixMeasure& measure, const ProjectivePoint& start,
                        DistanceKind distance, double r,
                        const std::vector<long long>& n_grid, long long replicas_per_n,
                        std::uint64_t seed, unsigned workers);

struct MzReport {
    std::vector<long long> grid_n;
    std::vector<double> q50, q90, q99;  // quantiles of |S_n - n lambda| / n^{1/p}
    // Nonincreasing-trend assertion on the 90% quantile, within bootstrap CI:
    // decay holds when q90(last) - q90(first) has an upper CI bound < 0.
    bool decay_asserted = false;
    double trend_delta = 0.0;
    double trend_ci_hi = 0.0;
    double lambda_hat = 0.0;
};

MzReport mz_rate_check(const MatrixMeasure& measure, const ProjectivePoint& start, double p,
                       const std::vector<long long>& n_grid, long long replicas,
                       std::uint64_t seed, unsigned workers);

struct LilReport {
    std::vector<double> per_replica_max;  // sorted
    double median = 0.0;
    double lambda_hat = 0.0;
    double sigma2_hat = 0.0;
};

// Running max over geometric checkpoints of |S_n - n lambda| /
// sqrt(2 sigma^2 n log log n); an O(1) median is the LIL-scale consequence.
LilReport lil_statistic(const MatrixMeasure& measure, const ProjectivePoint& start,
                        long long n_max, long long replicas, std::uint64_t seed,
                        unsigned workers);

struct FunctionalSupReport {
    SampleSet sups;        // sup_t B_n(t) / sigma_hat, per replica
    double ks = 0.0;       // vs P(sup W <= a) = 2 Phi(a) - 1
    double lambda_hat = 0.0;
    double sigma2_hat = 0.0;
};

// Distribution function of the supremum of standard Brownian motion on [0,1].
double brownian_sup_cdf(double a);

FunctionalSupReport functional_sup_check(const MatrixMeasure& measure,
                                         const ProjectivePoint& start, long long n,
                                         long long replicas, std::uint64_t seed,
                                         unsigned workers);

struct VbeReport {
    double lhs = 0.0;           // E|T_n|^r
    double rhs = 0.0;           // 2^{2-r} sum_i E|Z_i|^r
    double lhs_half_width = 0.0;
    bool holds = false;
    double max_lhs = 0.0;       // E[(T_n^*)^r], T_n^* = max(0, T_1..T_n)
    double max_rhs = 0.0;       // (4/(r-1)) sum_i E|Z_i|^r
    bool max_holds = false;
    // Mean and standard error of the per-replica slack lhs - rhs terms, so a
    // corpus of checks can apply a joint (multiplicity-adjusted) threshold.
    double slack_mean = 0.0;
    double slack_se = 0.0;
    double max_slack_mean = 0.0;
    double max_slack_se = 0.0;
};

// Monte Carlo check of the von Bahr-Esseen type inequality on
// martingale-difference increments (replica x step matrix); the
// conditional-expectation term vanishes for such inputs.
VbeReport vbe_inequality_check(const std::vector<std::vector<double>>& increments, double r);

struct NormGapReport {
    std::vector<long long> grid_n;
    std::vector<double> l1_gap;          // sup over pairs of E|log||A_n x|| - log||A_n y|||
    std::vector<double> norm_minus_vec;  // E[log||A_n|| - log||A_n x||]
    bool bounded_trend = false;          // bootstrap slope CI of l1_gap contains 0 or is < 0
    double slope = 0.0;
    double slope_ci_hi = 0.0;
    double slope_ci_lo = 0.0;
};

NormGapReport norm_gap_boundedness(const MatrixMeasure& measure,
                                   const std::vector<PointPair>& pairs,
                                   const std::vector<long long>& n_grid, long long replicas,
                                   std::uint64_t seed, unsigned workers);

}  // namespace mwalk
