#include "mwalk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mwalk/errors.hpp"
#include "mwalk/parallel.hpp"

namespace mwalk {

namespace {

// Separation below which a coupled pair moves to the tangent representation.
constexpr double kTangentSwitch = 1e-8;

constexpr double kLogFloor = -745.13321910194110;  // log(DBL_TRUE_MIN)

}  // namespace

StepSampler::StepSampler(const MatrixMeasure& measure) : measure_(measure) {
    measure.validate();
    if (measure.kind == MeasureKind::FiniteSupport || measure.kind == MeasureKind::PointMass) {
        double acc = 0.0;
        for (const auto& [atom, prob] : measure.atoms) {
            (void)atom;
            acc += prob;
            cumulative_.push_back(acc);
        }
    }
}

const Eigen::MatrixXd& StepSampler::next(RngStream& rng) {
    log_scale_ = 0.0;
    switch (measure_.kind) {
        case MeasureKind::PointMass:
            return measure_.atoms.front().first.entries();
        case MeasureKind::FiniteSupport: {
            const double u = rng.next_double();
            std::size_t idx = cumulative_.size() - 1;
            for (std::size_t i = 0; i < cumulative_.size(); ++i) {
                if (u < cumulative_[i]) {
                    idx = i;
                    break;
                }
            }
            return measure_.atoms[idx].first.entries();
        }
        case MeasureKind::RotationDilation:
        case MeasureKind::HeavyLogTail: {
            double s = measure_.dilation_log;
            if (measure_.kind == MeasureKind::HeavyLogTail) {
                // Pareto-type law: P(s > v) = (1 + v)^{-ptilde}.
                const double u = rng.next_double_open();
                s = std::pow(u, -1.0 / measure_.tail_index) - 1.0;
            }
            const int d = measure_.dim;
            if (s == 0.0) {
                scratch_ = sample_orthogonal(d, rng);
                return scratch_;
            }
            // Heavy tails can push e^{s} far past double range, so the step
            // carries the dominant factor separately: singular values of the
            // returned matrix are (1, e^{-2|s|}, e^{-|s|}, ...).
            const double a = std::abs(s);
            Eigen::VectorXd diag(d);
            diag(0) = std::exp(s - a);
            diag(1) = std::exp(-s - a);
            for (int i = 2; i < d; ++i) diag(i) = std::exp(-a);
            const Eigen::MatrixXd left = sample_orthogonal(d, rng);
            const Eigen::MatrixXd right = sample_orthogonal(d, rng);
            scratch_.noalias() = left * diag.asDiagonal() * right;
            log_scale_ = a;
            return scratch_;
        }
    }
    throw ConfigError("StepSampler: unknown measure kind");
}

WalkTrace run_walk(const MatrixMeasure& measure, const ProjectivePoint& start,
                   long long n, const WalkOptions& options, RngStream& rng) {
    if (n < 1) throw ConfigError("run_walk: n must be >= 1");
    if (options.stride < 1) throw ConfigError("run_walk: stride must be >= 1");
    if (start.dim() != measure.dim) throw ConfigError("run_walk: start dimension mismatch");
    if (options.target && options.target->dim() != measure.dim) {
        throw ConfigError("run_walk: target dimension mismatch");
    }

    StepSampler sampler(measure);
    const int d = measure.dim;

    WalkTrace trace;
    trace.stride = options.stride;
    trace.has_mat_norm = options.track_matrix;
    trace.has_coeff = options.target.has_value();

    Eigen::VectorXd u = start.rep();
    Eigen::VectorXd scratch(d);
    double S = 0.0;

    Eigen::MatrixXd mat;
    Eigen::MatrixXd mat_scratch;
    double log_mat = 0.0;
    if (options.track_matrix) {
        mat = Eigen::MatrixXd::Identity(d, d);
        mat_scratch.resize(d, d);
    }

    auto coeff_at = [&](double& out, bool& floored) {
        const double inner = std::abs(u.dot(options.target->rep()));
        if (inner > 0.0) {
            out = std::log(inner) + S;
            floored = false;
        } else {
            out = kLogFloor + S;
            floored = true;
        }
    };

    for (long long k = 1; k <= n; ++k) {
        const Eigen::MatrixXd& g = sampler.next(rng);
        S += sampler.log_scale() + act_with_gain(g, u, scratch);
        if (!std::isfinite(S)) {
            throw NumericalError("run_walk: non-finite S at step " + std::to_string(k));
        }
        if (options.track_matrix) {
            mat_scratch.noalias() = g * mat;
            const double norm = operator_norm(mat_scratch);
            if (!(norm > 0.0) || !std::isfinite(norm)) {
                throw NumericalError("run_walk: degenerate matrix norm at step " +
                                     std::to_string(k));
            }
            mat = mat_scratch / norm;
            log_mat += sampler.log_scale() + std::log(norm);
        }
        if (k % options.stride == 0 || k == n) {
            trace.check_n.push_back(k);
            trace.check_S.push_back(S);
            if (options.track_matrix) trace.check_log_mat_norm.push_back(log_mat);
            if (options.target) {
                double c = 0.0;
                bool fl = false;
                coeff_at(c, fl);
                trace.check_log_coeff.push_back(c);
            }
        }
    }

    trace.n = n;
    trace.S = S;
    trace.log_mat_norm = log_mat;
    if (options.target) coeff_at(trace.log_coeff, trace.coeff_floored);
    canonicalize_sign(u);
    trace.direction = std::move(u);
    return trace;
}

CouplingTrace run_coupled_walk(const MatrixMeasure& measure, const ProjectivePoint& x,
                               const ProjectivePoint& y, long long n, long long stride,
                               RngStream& rng) {
    if (n < 1) throw ConfigError("run_coupled_walk: n must be >= 1");
    if (stride < 1) throw ConfigError("run_coupled_walk: stride must be >= 1");
    if (x.dim() != measure.dim || y.dim() != measure.dim) {
        throw ConfigError("run_coupled_walk: point dimension mismatch");
    }
    if (proj_metric(x, y) == 0.0) {
        throw ConfigError("run_coupled_walk: x and y are the same projective point");
    }

    StepSampler sampler(measure);
    const int d = measure.dim;

    Eigen::VectorXd ux = x.rep();
    Eigen::VectorXd uy = y.rep();
    Eigen::VectorXd scratch(d), tangent(d), tangent_scratch(d);

    bool tangent_mode = false;
    double log_eps = 0.0;

    auto maybe_switch = [&]() {
        const double c = ux.dot(uy);
        Eigen::VectorXd rejection = uy - c * ux;
        const double rn = rejection.norm();
        if (rn < kTangentSwitch && rn > 0.0) {
            tangent_mode = true;
            log_eps = std::log(rn);
            tangent = rejection / rn;
        }
    };
    maybe_switch();

    CouplingTrace trace;
    double cum_gap = 0.0;
    double log_dist = tangent_mode ? log_eps : log_proj_metric(ux, uy);

    for (long long k = 1; k <= n; ++k) {
        const Eigen::MatrixXd& g = sampler.next(rng);
        double gap;
        if (!tangent_mode) {
            const double gain_x = act_with_gain(g, ux, scratch);
            const double gain_y = act_with_gain(g, uy, scratch);
            gap = gain_x - gain_y;
            log_dist = log_proj_metric(ux, uy);
            maybe_switch();
        } else {
            // First-order propagation of the separation: with y = x + eps w,
            // d scales by ||P_{(g.x)^perp} g w|| / ||g x|| and the cocycle gap
            // is eps <g x, g w> / ||g x||^2 up to O(eps^2).
            scratch.noalias() = g * ux;
            const double vnorm = scratch.norm();
            const double gain = std::log(vnorm);
            tangent_scratch.noalias() = g * tangent;
            const double inner = scratch.dot(tangent_scratch);
            const double log_gap_mag = log_eps + std::log(std::abs(inner)) - 2.0 * gain;
            gap = (inner == 0.0 || log_gap_mag < kLogFloor)
                      ? 0.0
                      : std::copysign(std::exp(log_gap_mag), inner);
            ux = scratch / vnorm;
            tangent_scratch -= ux.dot(tangent_scratch) * ux;
            const double tnorm = tangent_scratch.norm();
            if (!(tnorm > 0.0)) {
                throw NumericalError("run_coupled_walk: tangent collapsed at step " +
                                     std::to_string(k));
            }
            log_eps += std::log(tnorm) - gain;
            tangent = tangent_scratch / tnorm;
            log_dist = std::min(log_eps, 0.0);
        }
        cum_gap += gap;
        if (!std::isfinite(cum_gap) || !std::isfinite(log_dist)) {
            throw NumericalError("run_coupled_walk: non-finite state at step " +
                                 std::to_string(k));
        }
        if (k % stride == 0 || k == n) {
            trace.check_n.push_back(k);
            trace.check_log_dist.push_back(log_dist);
            trace.check_increment_gap.push_back(gap);
            trace.check_cum_gap.push_back(cum_gap);
        }
    }

    trace.n = n;
    trace.log_dist = log_dist;
    trace.cum_gap = cum_gap;
    trace.tangent_mode = tangent_mode;
    return trace;
}

double PolygonalProcess::sup() const {
    // The path is piecewise linear, so the supremum is attained at a vertex.
    return *std::max_element(grid_values.begin(), grid_values.end());
}

PolygonalProcess build_polygonal(const WalkTrace& trace, double lambda_hat) {
    if (trace.stride != 1) {
        throw ConfigError("build_polygonal: requires a stride-1 trace");
    }
    PolygonalProcess process;
    process.n = trace.n;
    process.lambda_hat = lambda_hat;
    process.grid_values.resize(static_cast<std::size_t>(trace.n) + 1);
    process.grid_values[0] = 0.0;
    const double root_n = std::sqrt(static_cast<double>(trace.n));
    for (std::size_t i = 0; i < trace.check_S.size(); ++i) {
        const double k = static_cast<double>(trace.check_n[i]);
        process.grid_values[static_cast<std::size_t>(trace.check_n[i])] =
            (trace.check_S[i] - k * lambda_hat) / root_n;
    }
    return process;
}

std::vector<long long> lil_checkpoints(long long n_max) {
    std::vector<long long> points;
    double value = 16.0;
    while (static_cast<long long>(value) <= n_max) {
        const long long p = static_cast<long long>(value);
        if (points.empty() || points.back() != p) points.push_back(p);
        value *= 1.5;
    }
    if (points.empty() || points.back() != n_max) points.push_back(n_max);
    return points;
}

std::vector<double> run_ensemble(const MatrixMeasure& measure, const ProjectivePoint& start,
                                 long long n, long long replicas, const StatisticSpec& spec,
                                 std::uint64_t seed, unsigned workers) {
    if (replicas < 1) throw ConfigError("run_ensemble: replicas must be >= 1");
    if (n < 1) throw ConfigError("run_ensemble: n must be >= 1");
    measure.validate();

    using Kind = StatisticSpec::Kind;
    const bool needs_matrix =
        spec.kind == Kind::TerminalLogMatNorm || spec.kind == Kind::TerminalNormGap;
    if (spec.kind == Kind::TerminalLogCoeff && !spec.target) {
        throw ConfigError("run_ensemble: TerminalLogCoeff requires a target point");
    }

    const std::vector<long long> lil_grid =
        spec.kind == Kind::LilRunningMax ? lil_checkpoints(n) : std::vector<long long>{};

    std::vector<double> results(static_cast<std::size_t>(replicas));

    parallel_for(static_cast<std::size_t>(replicas), workers, [&](std::size_t replica) {
        RngStream rng(seed, static_cast<std::uint64_t>(replica));
        StepSampler sampler(measure);
        const int d = measure.dim;
        Eigen::VectorXd u = start.rep();
        Eigen::VectorXd scratch(d);
        double S = 0.0;

        Eigen::MatrixXd mat, mat_scratch;
        double log_mat = 0.0;
        if (needs_matrix) {
            mat = Eigen::MatrixXd::Identity(d, d);
            mat_scratch.resize(d, d);
        }

        double running_max = 0.0;  // SupPolygonal: B(0) = 0 participates
        double lil_max = 0.0;
        std::size_t lil_pos = 0;

        for (long long k = 1; k <= n; ++k) {
            const Eigen::MatrixXd& g = sampler.next(rng);
            S += sampler.log_scale() + act_with_gain(g, u, scratch);
            if (needs_matrix) {
                mat_scratch.noalias() = g * mat;
                const double norm = operator_norm(mat_scratch);
                mat = mat_scratch / norm;
                log_mat += sampler.log_scale() + std::log(norm);
            }
            if (spec.kind == Kind::SupPolygonal) {
                running_max = std::max(running_max,
                                       S - static_cast<double>(k) * spec.lambda_hat);
            } else if (spec.kind == Kind::LilRunningMax) {
                if (lil_pos < lil_grid.size() && k == lil_grid[lil_pos]) {
                    const double kk = static_cast<double>(k);
                    const double scale = std::sqrt(2.0 * spec.sigma_hat * spec.sigma_hat *
                                                   kk * std::log(std::log(kk)));
                    lil_max = std::max(lil_max,
                                       std::abs(S - kk * spec.lambda_hat) / scale);
                    ++lil_pos;
                }
            }
        }
        if (!std::isfinite(S)) {
            throw NumericalError("run_ensemble: non-finite S in replica " +
                                 std::to_string(replica));
        }

        double value = 0.0;
        switch (spec.kind) {
            case Kind::TerminalS:
                value = S;
                break;
            case Kind::TerminalLogMatNorm:
                value = log_mat;
                break;
            case Kind::TerminalNormGap:
                value = log_mat - S;
                break;
            case Kind::TerminalLogCoeff: {
                const double inner = std::abs(u.dot(spec.target->rep()));
                value = (inner > 0.0 ? std::log(inner) : kLogFloor) + S;
                break;
            }
            case Kind::CenteredScaledS:
                value = (S - static_cast<double>(n) * spec.lambda_hat) /
                        std::sqrt(static_cast<double>(n));
                break;
            case Kind::SupPolygonal:
                value = running_max /
                        (std::sqrt(static_cast<double>(n)) * spec.sigma_hat);
                break;
            case Kind::LilRunningMax:
                value = lil_max;
                break;
        }
        results[replica] = value;
    });

    return results;
}

}  // namespace mwalk
