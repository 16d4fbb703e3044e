#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mwalk/stats.hpp"
#include "mwalk/walk.hpp"

namespace mwalk {

struct LyapunovEstimate {
    double lambda_hat = 0.0;        // mean of S_n / n across replicas
    double half_width = 0.0;        // normal-approximation 95% half-width
    double lambda_matrix_hat = 0.0; // mean of log||A_n|| / n
    double matrix_half_width = 0.0;
    double norm_gap_p99 = 0.0;      // 99th percentile of log||A_n|| - S_n
    long long n_used = 0;
    long long replicas_used = 0;
};

LyapunovEstimate estimate_lyapunov(const MatrixMeasure& measure, const ProjectivePoint& start,
                                   long long n, long long replicas, std::uint64_t seed,
                                   unsigned workers);

// Plug-in centering constant from an independent calibration ensemble
// (seed derived from `seed`, never shared with experiment streams).
double calibrate_lambda(const MatrixMeasure& measure, const ProjectivePoint& start,
                        long long n, long long replicas, std::uint64_t seed,
                        unsigned workers);

struct VarianceEstimate {
    double sigma2_hat = 0.0;
    double half_width = 0.0;
    std::string method;  // "cross-replica" | "batch-means"
    bool clamped = false;
};

// Var(S_n) / n across independent replicas.
VarianceEstimate estimate_sigma2_cross(const MatrixMeasure& measure,
                                       const ProjectivePoint& start, long long n,
                                       long long replicas, std::uint64_t seed,
                                       unsigned workers);

// Batch means over one long run of `total_length` steps (after burn_in),
// with sqrt-length batches.
VarianceEstimate estimate_sigma2_batch(const MatrixMeasure& measure,
                                       const ProjectivePoint& start, long long total_length,
                                       long long burn_in, std::uint64_t seed);

using PointPair = std::pair<ProjectivePoint, ProjectivePoint>;

struct ContractionEstimate {
    double rate_hat = 0.0;        // slope of E[log d(A_n x, A_n y)] vs n, worst pair
    BootstrapCI rate_ci;
    double ell_hat = 0.0;         // |rate_hat| / 2
    std::vector<long long> grid_n;
    std::vector<double> mean_log_dist;  // worst pair
    std::vector<double> tail_curve;     // max over pairs of P(log d >= -ell n)
    std::size_t worst_pair = 0;
    bool decay_detected = false;  // slope CI entirely below 0
};

ContractionEstimate estimate_contraction(const MatrixMeasure& measure,
                                         const std::vector<PointPair>& pairs, long long n,
                                         long long replicas, std::uint64_t seed,
                                         unsigned workers);

// Coupling-gap moment curve: k -> max over the pair grid of
// E|X_{k,x} - X_{k,y}|^q, plus the partial sums of k^{p-q-1} curve(k)
// for convergence-trend inspection.
struct CouplingDecayCurve {
    std::vector<long long> k;
    std::vector<double> moment;        // sup over grid
    std::vector<double> partial_sums;  // cumulative k^{p-q-1} moment(k)
};

CouplingDecayCurve coupling_decay_curve(const MatrixMeasure& measure, double q,
                                        const std::vector<PointPair>& pairs, long long k_max,
                                        long long replicas, std::uint64_t seed,
                                        unsigned workers);

struct DriftProbeResult {
    bool found = false;
    int n0 = 0;
    double drift = 0.0;       // sup over pairs of E[log(d_n0 / d_0)] at n0
    double half_width = 0.0;
    std::vector<double> drift_curve;  // sup over pairs, n0 = 1..n0_max
};

DriftProbeResult two_point_drift_probe(const MatrixMeasure& measure,
                                       const std::vector<PointPair>& pairs, int n0_max,
                                       long long replicas, std::uint64_t seed,
                                       unsigned workers);

// Deterministic pseudo-uniform grid on P_{d-1}(R).
std::vector<ProjectivePoint> projective_point_grid(int dim, int count, std::uint64_t seed);

// Default pair grid: pairs of pseudo-uniform points plus adversarial
// near-coincident pairs.
std::vector<PointPair> default_pair_grid(int dim, int count, std::uint64_t seed);

}  // namespace mwalk
