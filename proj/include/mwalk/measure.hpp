#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mwalk/matrix.hpp"
#include "mwalk/rng.hpp"

namespace mwalk {

enum class MeasureKind { PointMass, FiniteSupport, RotationDilation, HeavyLogTail };

std::string to_string(MeasureKind kind);
MeasureKind measure_kind_from_string(const std::string& name);

// A sampleable matrix law mu. The built-in kinds span the hypothesis space of
// the limit theorems: point-mass (degenerate baseline), finite-support
// (bounded log N, all moments), rotation-dilation (fixed log N = |dilation|,
// all moments), heavy-log-tail (E[(log N)^q] < infinity iff q < tailIndex,
// via a Pareto-type log-singular-value).
//
// The algebraic flags (strong irreducibility, proximality) are declared by
// the user; proximality_probe gives a best-effort numeric certificate only.
struct MatrixMeasure {
    int dim = 2;
    MeasureKind kind = MeasureKind::PointMass;
    std::vector<std::pair<InvertibleMatrix, double>> atoms;  // finite-support / point-mass
    double tail_index = 0.0;     // heavy-log-tail: moment order ptilde
    double dilation_log = 0.0;   // rotation-dilation: fixed log dilation >= 0
    bool strongly_irreducible = false;
    bool proximal = false;
    double moment_order = 1.0;   // declared p

    void validate() const;

    static MatrixMeasure point_mass(InvertibleMatrix atom);
    static MatrixMeasure finite_support(std::vector<std::pair<InvertibleMatrix, double>> atoms);
    static MatrixMeasure rotation_dilation(int dim, double dilation_log);
    static MatrixMeasure heavy_log_tail(int dim, double tail_index);
    // {c R1 w.p. 1/2, (1/c) R2 w.p. 1/2} with rotations R1, R2 in d = 2:
    // sigma(g, x) = +-log c for every x, so S_n is a lattice random walk.
    static MatrixMeasure bernoulli_reduction(double log_c = 1.0,
                                             double angle1 = 0.7853981633974483,
                                             double angle2 = 1.0);
};

// FNV-1a digest of a canonical serialization, for manifests and metadata.
std::uint64_t measure_digest(const MatrixMeasure& measure);

// One draw from the measure. Deterministic given (seed, stream, draw index).
// A draw failing the invertibility guard is resampled up to 100 times, then
// a hard error signals a degenerate measure specification.
InvertibleMatrix sample(const MatrixMeasure& measure, RngStream& rng);

struct LogMomentEstimate {
    double mean = 0.0;
    double half_width = 0.0;  // normal-approximation 95% half-width
    // Heavy-tail heuristic: set when the running mean is still growing with
    // the sample size by more than the half-width.
    bool divergence_flag = false;
    int n_samples = 0;
};

// Monte Carlo estimate of E[(log N(g))^q].
LogMomentEstimate estimate_log_moment(const MatrixMeasure& measure, double q,
                                      int n_samples, RngStream& rng);

struct ProximalityReport {
    bool found = false;
    int witness_length = 0;
    double relative_gap = 0.0;  // |lambda_1|/|lambda_2| - 1 of the witness
};

// Searches sampled products of length <= horizon for a proximal element:
// top eigenvalue modulus exceeding the second by a relative gap > 1e-6.
// A heuristic certificate, not a proof.
ProximalityReport proximality_probe(const MatrixMeasure& measure, int horizon,
                                    int trials, RngStream& rng);

// Haar-distributed d x d orthogonal matrix (Gaussian QR with sign fix).
Eigen::MatrixXd sample_orthogonal(int dim, RngStream& rng);

}  // namespace mwalk
