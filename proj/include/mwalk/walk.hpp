#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mwalk/measure.hpp"
#include "mwalk/projective.hpp"

namespace mwalk {

// Draws step matrices without per-step allocation; finite-support kinds hand
// back references to the stored atoms.
class StepSampler {
public:
    explicit StepSampler(const MatrixMeasure& measure);
    const Eigen::MatrixXd& next(RngStream& rng);

    // Large dilations are handed back scaled so the entries stay
    // representable: the true step is e^{log_scale} times the returned
    // matrix. Zero for finite-support kinds.
    double log_scale() const { return log_scale_; }

private:
    const MatrixMeasure& measure_;
    std::vector<double> cumulative_;
    Eigen::MatrixXd scratch_;
    double log_scale_ = 0.0;
};

struct WalkOptions {
    long long stride = 1;
    bool track_matrix = false;
    std::optional<ProjectivePoint> target;  // enables the coefficient track
};

// Streamed state of one walk. S_n accumulates cocycle increments of the
// renormalized vector track; logMatNorm carries log ||A_n|| via a matrix
// renormalized by its operator norm each step; logCoeff = log|<A_n x, y>|
// assembled as log|<u_n, y>| + S_n.
struct WalkTrace {
    long long n = 0;
    long long stride = 1;
    double S = 0.0;
    double log_mat_norm = 0.0;
    double log_coeff = 0.0;
    bool has_mat_norm = false;
    bool has_coeff = false;
    bool coeff_floored = false;  // <u_n, y> underflowed to zero
    Eigen::VectorXd direction;   // unit representative of A_n . x

    std::vector<long long> check_n;
    std::vector<double> check_S;
    std::vector<double> check_log_mat_norm;
    std::vector<double> check_log_coeff;
};

WalkTrace run_walk(const MatrixMeasure& measure, const ProjectivePoint& start,
                   long long n, const WalkOptions& options, RngStream& rng);

// Two projective orbits driven by identical matrix draws. logDist is kept in
// log scale; once the points nearly coincide the pair switches to a tangent
// representation (base direction + unit tangent + log separation) so the
// separation stays resolvable arbitrarily far below double spacing.
struct CouplingTrace {
    long long n = 0;
    double log_dist = 0.0;  // log d(A_n . x, A_n . y), always <= 0
    double cum_gap = 0.0;   // log||A_n x|| - log||A_n y||
    bool tangent_mode = false;

    std::vector<long long> check_n;
    std::vector<double> check_log_dist;
    std::vector<double> check_increment_gap;  // X_{k,x} - X_{k,y}
    std::vector<double> check_cum_gap;
};

CouplingTrace run_coupled_walk(const MatrixMeasure& measure, const ProjectivePoint& x,
                               const ProjectivePoint& y, long long n, long long stride,
                               RngStream& rng);

// Polygonal partial-sum process: B(k/n) = (S_k - k lambda) / sqrt(n), linear
// in between. Requires a stride-1 trace.
struct PolygonalProcess {
    long long n = 0;
    double lambda_hat = 0.0;
    std::vector<double> grid_values;  // k = 0..n

    double sup() const;
};

PolygonalProcess build_polygonal(const WalkTrace& trace, double lambda_hat);

// Terminal statistic collected per replica by run_ensemble.
struct StatisticSpec {
    enum class Kind {
        TerminalS,
        TerminalLogMatNorm,
        TerminalLogCoeff,
        TerminalNormGap,   // logMatNorm - S
        CenteredScaledS,   // (S_n - n lambda) / sqrt(n)
        SupPolygonal,      // sup_t B_n(t) / sigma
        LilRunningMax      // max over geometric checkpoints of |S-n lambda|/sqrt(2 sigma^2 n loglog n)
    };
    Kind kind = Kind::TerminalS;
    double lambda_hat = 0.0;
    double sigma_hat = 1.0;
    std::optional<ProjectivePoint> target;
};

// Geometric checkpoint grid floor(1.5^k), deduplicated, from 16 up to n_max.
std::vector<long long> lil_checkpoints(long long n_max);

// Independent replicas, parallelizable; results are indexed by replica so the
// output is bit-identical for a fixed (seed, replicas) at any worker count.
// Replica i uses RngStream(seed, i).
std::vector<double> run_ensemble(const MatrixMeasure& measure, const ProjectivePoint& start,
                                 long long n, long long replicas, const StatisticSpec& spec,
                                 std::uint64_t seed, unsigned workers);

}  // namespace mwalk
