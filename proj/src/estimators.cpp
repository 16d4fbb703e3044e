#include "mwalk/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mwalk/errors.hpp"
#include "mwalk/parallel.hpp"

namespace mwalk {

namespace {

double half_width_of_mean(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    return 1.96 * std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

// Least-squares slope of y against x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    return denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

}  // namespace

LyapunovEstimate estimate_lyapunov(const MatrixMeasure& measure, const ProjectivePoint& start,
                                   long long n, long long replicas, std::uint64_t seed,
                                   unsigned workers) {
    if (n < 100) throw ConfigError("estimate_lyapunov: n must be >= 100");
    StatisticSpec vec_spec;
    vec_spec.kind = StatisticSpec::Kind::TerminalS;
    const std::vector<double> terminal_s =
        run_ensemble(measure, start, n, replicas, vec_spec, seed, workers);
    StatisticSpec gap_spec;
    gap_spec.kind = StatisticSpec::Kind::TerminalNormGap;
    const std::vector<double> norm_gap =
        run_ensemble(measure, start, n, replicas, gap_spec, seed, workers);

    LyapunovEstimate est;
    est.n_used = n;
    est.replicas_used = replicas;
    const double nd = static_cast<double>(n);

    std::vector<double> per_step(terminal_s.size());
    for (std::size_t i = 0; i < terminal_s.size(); ++i) per_step[i] = terminal_s[i] / nd;
    est.lambda_hat = sample_mean(per_step);
    est.half_width = half_width_of_mean(per_step);

    std::vector<double> mat_per_step(norm_gap.size());
    for (std::size_t i = 0; i < norm_gap.size(); ++i) {
        mat_per_step[i] = (terminal_s[i] + norm_gap[i]) / nd;
    }
    est.lambda_matrix_hat = sample_mean(mat_per_step);
    est.matrix_half_width = half_width_of_mean(mat_per_step);

    std::vector<double> gaps = norm_gap;
    std::sort(gaps.begin(), gaps.end());
    est.norm_gap_p99 = sample_quantile(gaps, 0.99);
    return est;
}

double calibrate_lambda(const MatrixMeasure& measure, const ProjectivePoint& start,
                        long long n, long long replicas, std::uint64_t seed,
                        unsigned workers) {
    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::TerminalS;
    const std::vector<double> terminal =
        run_ensemble(measure, start, n, replicas, spec, derive_seed(seed, 0xCA11B), workers);
    return sample_mean(terminal) / static_cast<double>(n);
}

VarianceEstimate estimate_sigma2_cross(const MatrixMeasure& measure,
                                       const ProjectivePoint& start, long long n,
                                       long long replicas, std::uint64_t seed,
                                       unsigned workers) {
    if (replicas < 100) {
        throw ConfigError("estimate_sigma2_cross: replicas must be >= 100");
    }
    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::TerminalS;
    const std::vector<double> terminal =
        run_ensemble(measure, start, n, replicas, spec, seed, workers);
    VarianceEstimate est;
    est.method = "cross-replica";
    // Identical replicas (deterministic walks) must report exactly zero, not
    // summation dust.
    const auto [mn, mx] = std::minmax_element(terminal.begin(), terminal.end());
    const double var =
        *mn == *mx ? 0.0 : sample_variance(terminal) / static_cast<double>(n);
    est.sigma2_hat = var;
    if (var < 0.0) {
        est.sigma2_hat = 0.0;
        est.clamped = true;
    }
    est.half_width = 1.96 * est.sigma2_hat * std::sqrt(2.0 / static_cast<double>(replicas - 1));
    return est;
}

VarianceEstimate estimate_sigma2_batch(const MatrixMeasure& measure,
                                       const ProjectivePoint& start, long long total_length,
                                       long long burn_in, std::uint64_t seed) {
    if (total_length < 100) {
        throw ConfigError("estimate_sigma2_batch: total length must be >= 100");
    }
    WalkOptions options;
    options.stride = 1;
    RngStream rng(seed, kCalibrationStreamBase + 3);
    const WalkTrace trace = run_walk(measure, start, burn_in + total_length, options, rng);

    const auto batch_len = static_cast<long long>(std::sqrt(static_cast<double>(total_length)));
    const long long n_batches = total_length / batch_len;
    std::vector<double> batch_means(static_cast<std::size_t>(n_batches));
    auto s_at = [&](long long k) {
        return k == 0 ? 0.0 : trace.check_S[static_cast<std::size_t>(k) - 1];
    };
    for (long long b = 0; b < n_batches; ++b) {
        const long long lo = burn_in + b * batch_len;
        const long long hi = lo + batch_len;
        batch_means[static_cast<std::size_t>(b)] =
            (s_at(hi) - s_at(lo)) / static_cast<double>(batch_len);
    }
    VarianceEstimate est;
    est.method = "batch-means";
    const double var = static_cast<double>(batch_len) * sample_variance(batch_means);
    est.sigma2_hat = std::max(var, 0.0);
    est.clamped = var < 0.0;
    est.half_width =
        1.96 * est.sigma2_hat * std::sqrt(2.0 / static_cast<double>(n_batches - 1));
    return est;
}

ContractionEstimate estimate_contraction(const MatrixMeasure& measure,
                                         const std::vector<PointPair>& pairs, long long n,
                                         long long replicas, std::uint64_t seed,
                                         unsigned workers) {
    if (pairs.empty()) throw ConfigError("estimate_contraction: empty pair list");
    for (const auto& [x, y] : pairs) {
        if (proj_metric(x, y) == 0.0) {
            throw ConfigError("estimate_contraction: pair is projectively coincident");
        }
    }
    const long long stride = std::max<long long>(1, n / 16);
    const std::size_t n_pairs = pairs.size();
    const auto n_rep = static_cast<std::size_t>(replicas);

    // per (pair, replica): log-dist values at checkpoints
    std::vector<std::vector<std::vector<double>>> curves(
        n_pairs, std::vector<std::vector<double>>(n_rep));
    std::vector<long long> grid;

    parallel_for(n_pairs * n_rep, workers, [&](std::size_t idx) {
        const std::size_t pair_idx = idx / n_rep;
        const std::size_t rep = idx % n_rep;
        RngStream rng(seed, static_cast<std::uint64_t>(rep));  // shared draws across pairs
        CouplingTrace trace = run_coupled_walk(measure, pairs[pair_idx].first,
                                               pairs[pair_idx].second, n, stride, rng);
        curves[pair_idx][rep] = std::move(trace.check_log_dist);
        if (pair_idx == 0 && rep == 0) grid = trace.check_n;
    });

    const std::size_t n_checks = grid.size();
    std::vector<std::vector<double>> mean_curves(n_pairs, std::vector<double>(n_checks, 0.0));
    for (std::size_t p = 0; p < n_pairs; ++p) {
        for (std::size_t r = 0; r < n_rep; ++r) {
            for (std::size_t c = 0; c < n_checks; ++c) mean_curves[p][c] += curves[p][r][c];
        }
        for (double& v : mean_curves[p]) v /= static_cast<double>(n_rep);
    }

    // Worst pair: slowest contraction at the final horizon.
    std::size_t worst = 0;
    for (std::size_t p = 1; p < n_pairs; ++p) {
        if (mean_curves[p].back() > mean_curves[worst].back()) worst = p;
    }

    std::vector<double> grid_d(n_checks);
    for (std::size_t c = 0; c < n_checks; ++c) grid_d[c] = static_cast<double>(grid[c]);

    ContractionEstimate est;
    est.grid_n = grid;
    est.mean_log_dist = mean_curves[worst];
    est.worst_pair = worst;
    est.rate_hat = ols_slope(grid_d, mean_curves[worst]);
    est.ell_hat = std::abs(est.rate_hat) / 2.0;  // mirrors the ell = alpha/2 choice

    // Bootstrap the slope by resampling replicas of the worst pair.
    {
        RngStream rng(derive_seed(seed, 0xB007), kAuxStreamBase + 11);
        const int resamples = 200;
        std::vector<double> slopes(resamples);
        std::vector<double> mean_curve(n_checks);
        for (int b = 0; b < resamples; ++b) {
            std::fill(mean_curve.begin(), mean_curve.end(), 0.0);
            for (std::size_t r = 0; r < n_rep; ++r) {
                const auto& curve = curves[worst][rng.next_below(n_rep)];
                for (std::size_t c = 0; c < n_checks; ++c) mean_curve[c] += curve[c];
            }
            for (double& v : mean_curve) v /= static_cast<double>(n_rep);
            slopes[static_cast<std::size_t>(b)] = ols_slope(grid_d, mean_curve);
        }
        std::sort(slopes.begin(), slopes.end());
        est.rate_ci.lo = sample_quantile(slopes, 0.025);
        est.rate_ci.hi = sample_quantile(slopes, 0.975);
    }
    est.decay_detected = est.rate_ci.hi < 0.0;

    est.tail_curve.assign(n_checks, 0.0);
    if (est.decay_detected && est.ell_hat > 0.0) {
        for (std::size_t c = 0; c < n_checks; ++c) {
            double worst_tail = 0.0;
            for (std::size_t p = 0; p < n_pairs; ++p) {
                std::size_t hits = 0;
                for (std::size_t r = 0; r < n_rep; ++r) {
                    if (curves[p][r][c] >= -est.ell_hat * grid_d[c]) ++hits;
                }
                worst_tail = std::max(worst_tail,
                                      static_cast<double>(hits) / static_cast<double>(n_rep));
            }
            est.tail_curve[c] = worst_tail;
        }
    } else {
        est.tail_curve.assign(n_checks, 1.0);  // no contraction detected
    }
    return est;
}

CouplingDecayCurve coupling_decay_curve(const MatrixMeasure& measure, double q,
                                        const std::vector<PointPair>& pairs, long long k_max,
                                        long long replicas, std::uint64_t seed,
                                        unsigned workers) {
    if (!(q > 0.0)) throw ConfigError("coupling_decay_curve: q must be > 0");
    if (pairs.empty()) throw ConfigError("coupling_decay_curve: empty pair list");
    const std::size_t n_pairs = pairs.size();
    const auto n_rep = static_cast<std::size_t>(replicas);
    const auto n_k = static_cast<std::size_t>(k_max);

    // Coincident pairs contribute exactly zero.
    std::vector<bool> degenerate(n_pairs);
    for (std::size_t p = 0; p < n_pairs; ++p) {
        degenerate[p] = proj_metric(pairs[p].first, pairs[p].second) == 0.0;
    }

    std::vector<std::vector<double>> sums(n_pairs * n_rep);
    parallel_for(n_pairs * n_rep, workers, [&](std::size_t idx) {
        const std::size_t pair_idx = idx / n_rep;
        if (degenerate[pair_idx]) return;
        const std::size_t rep = idx % n_rep;
        RngStream rng(seed, static_cast<std::uint64_t>(rep));
        CouplingTrace trace = run_coupled_walk(measure, pairs[pair_idx].first,
                                               pairs[pair_idx].second, k_max, 1, rng);
        auto& moments = sums[idx];
        moments.resize(n_k);
        for (std::size_t k = 0; k < n_k; ++k) {
            moments[k] = std::pow(std::abs(trace.check_increment_gap[k]), q);
        }
    });

    CouplingDecayCurve curve;
    curve.k.resize(n_k);
    curve.moment.assign(n_k, 0.0);
    for (std::size_t k = 0; k < n_k; ++k) curve.k[k] = static_cast<long long>(k) + 1;
    for (std::size_t p = 0; p < n_pairs; ++p) {
        if (degenerate[p]) continue;
        std::vector<double> pair_mean(n_k, 0.0);
        for (std::size_t r = 0; r < n_rep; ++r) {
            const auto& moments = sums[p * n_rep + r];
            for (std::size_t k = 0; k < n_k; ++k) pair_mean[k] += moments[k];
        }
        for (std::size_t k = 0; k < n_k; ++k) {
            curve.moment[k] = std::max(curve.moment[k],
                                       pair_mean[k] / static_cast<double>(n_rep));
        }
    }

    curve.partial_sums.resize(n_k);
    const double p_order = measure.moment_order;
    double acc = 0.0;
    for (std::size_t k = 0; k < n_k; ++k) {
        const double kd = static_cast<double>(k + 1);
        acc += std::pow(kd, p_order - q - 1.0) * curve.moment[k];
        curve.partial_sums[k] = acc;
    }
    return curve;
}

DriftProbeResult two_point_drift_probe(const MatrixMeasure& measure,
                                       const std::vector<PointPair>& pairs, int n0_max,
                                       long long replicas, std::uint64_t seed,
                                       unsigned workers) {
    if (n0_max < 1) throw ConfigError("two_point_drift_probe: n0Max must be >= 1");
    if (pairs.empty()) throw ConfigError("two_point_drift_probe: empty pair list");
    const std::size_t n_pairs = pairs.size();
    const auto n_rep = static_cast<std::size_t>(replicas);
    const auto n_steps = static_cast<std::size_t>(n0_max);

    std::vector<std::vector<double>> deltas(n_pairs * n_rep);
    parallel_for(n_pairs * n_rep, workers, [&](std::size_t idx) {
        const std::size_t pair_idx = idx / n_rep;
        const std::size_t rep = idx % n_rep;
        const double log_d0 = std::log(proj_metric(pairs[pair_idx].first,
                                                   pairs[pair_idx].second));
        RngStream rng(seed, static_cast<std::uint64_t>(rep));
        CouplingTrace trace = run_coupled_walk(measure, pairs[pair_idx].first,
                                               pairs[pair_idx].second, n0_max, 1, rng);
        auto& d = deltas[idx];
        d.resize(n_steps);
        for (std::size_t k = 0; k < n_steps; ++k) {
            d[k] = trace.check_log_dist[k] - log_d0;
        }
    });

    DriftProbeResult result;
    result.drift_curve.resize(n_steps);
    for (std::size_t k = 0; k < n_steps; ++k) {
        double sup_mean = -std::numeric_limits<double>::infinity();
        double sup_hw = 0.0;
        for (std::size_t p = 0; p < n_pairs; ++p) {
            std::vector<double> values(n_rep);
            for (std::size_t r = 0; r < n_rep; ++r) values[r] = deltas[p * n_rep + r][k];
            const double mean = sample_mean(values);
            if (mean > sup_mean) {
                sup_mean = mean;
                sup_hw = half_width_of_mean(values);
            }
        }
        result.drift_curve[k] = sup_mean;
        if (!result.found && sup_mean + sup_hw < 0.0) {
            result.found = true;
            result.n0 = static_cast<int>(k) + 1;
            result.drift = sup_mean;
            result.half_width = sup_hw;
        }
    }
    return result;
}

std::vector<ProjectivePoint> projective_point_grid(int dim, int count, std::uint64_t seed) {
    RngStream rng(seed, kAuxStreamBase + 5);
    std::vector<ProjectivePoint> points;
    points.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd v(dim);
        for (int j = 0; j < dim; ++j) v(j) = rng.next_normal();
        points.emplace_back(v);
    }
    return points;
}

std::vector<PointPair> default_pair_grid(int dim, int count, std::uint64_t seed) {
    const int base = std::max(count, 2);
    std::vector<ProjectivePoint> points = projective_point_grid(dim, base + 1, seed);
    std::vector<PointPair> pairs;
    for (int i = 0; i < base; ++i) {
        pairs.emplace_back(points[static_cast<std::size_t>(i)],
                           points[static_cast<std::size_t>(i) + 1]);
    }
    // Adversarial near-coincident pairs.
    RngStream rng(seed, kAuxStreamBase + 6);
    for (int extra = 0; extra < 2 && static_cast<int>(pairs.size()) < count + 2; ++extra) {
        const ProjectivePoint& x = points[static_cast<std::size_t>(extra)];
        Eigen::VectorXd perturbation(dim);
        for (int j = 0; j < dim; ++j) perturbation(j) = rng.next_normal();
        const double eps = extra == 0 ? 1e-6 : 1e-10;
        pairs.emplace_back(x, ProjectivePoint(x.rep() + eps * perturbation));
    }
    return pairs;
}

}  // namespace mwalk
