#include "mwalk/limit_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mwalk/errors.hpp"
#include "mwalk/parallel.hpp"

namespace mwalk {

namespace {

constexpr int kBootstrapResamples = 100;

void validate_grid(const std::vector<long long>& n_grid, bool require_span) {
    if (n_grid.size() < 3) throw ConfigError("nGrid: needs at least 3 points");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 1) throw ConfigError("nGrid: entries must be >= 1");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
            throw ConfigError("nGrid: must be strictly increasing");
        }
    }
    if (require_span) {
        const double span = std::log10(static_cast<double>(n_grid.back()) /
                                       static_cast<double>(n_grid.front()));
        if (span < 1.5) {
            throw ConfigError("nGrid: must span at least 1.5 decades");
        }
    }
}

struct Calibration {
    double lambda_hat = 0.0;
    double sigma2_hat = 0.0;
    std::uint64_t seed = 0;
};

Calibration calibrate(const MatrixMeasure& measure, const ProjectivePoint& start,
                      long long n, long long replicas, std::uint64_t seed,
                      unsigned workers) {
    Calibration cal;
    cal.seed = derive_seed(seed, 0xCA11B);
    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::TerminalS;
    const std::vector<double> terminal =
        run_ensemble(measure, start, n, replicas, spec, cal.seed, workers);
    cal.lambda_hat = sample_mean(terminal) / static_cast<double>(n);
    cal.sigma2_hat = sample_variance(terminal) / static_cast<double>(n);
    return cal;
}

double distance_of(const SampleSet& set, const GaussianLaw& law, DistanceKind kind,
                   double r) {
    if (kind == DistanceKind::WassersteinR) {
        return wasserstein_vs_gaussian(set, law, r).value;
    }
    return ks_distance(set, law);
}

// One bootstrap resample of a sorted SampleSet.
SampleSet resample_set(const SampleSet& set, RngStream& rng) {
    std::vector<double> values(set.values.size());
    for (auto& v : values) v = set.values[rng.next_below(set.values.size())];
    return SampleSet::from(std::move(values), set.meta);
}

}  // namespace

RateFitResult rate_scan(const MatrixMeasure& measure, const ProjectivePoint& start,
                        DistanceKind distance, double r,
                        const std::vector<long long>& n_grid, long long replicas_per_n,
                        std::uint64_t seed, unsigned workers) {
    validate_grid(n_grid, true);
    if (distance == DistanceKind::WassersteinR && !(r >= 1.0)) {
        throw ConfigError("rate_scan: Wasserstein distance requires r >= 1");
    }

    // Full-size calibration: lambda/sigma error would otherwise put a floor
    // under the distances and flatten the fitted exponent.
    const long long calib_replicas = std::max<long long>(2000, replicas_per_n);
    const Calibration cal =
        calibrate(measure, start, n_grid.back(), calib_replicas, seed, workers);

    RateFitResult result;
    result.grid_n = n_grid;
    result.lambda_hat = cal.lambda_hat;
    result.sigma2_hat = cal.sigma2_hat;
    result.calibration_seed = cal.seed;

    const GaussianLaw law{cal.sigma2_hat};
    if (cal.sigma2_hat <= 1e-14) {
        result.degenerate = true;
        result.unreliable = true;
        return result;
    }

    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::CenteredScaledS;
    spec.lambda_hat = cal.lambda_hat;
    std::vector<SampleSet> sets;
    sets.reserve(n_grid.size());
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        std::vector<double> values = run_ensemble(measure, start, n_grid[i], replicas_per_n,
                                                  spec, derive_seed(seed, 0x5CA0 + i), workers);
        SampleSet::Meta meta;
        meta.n = n_grid[i];
        meta.measure_digest = measure_digest(measure);
        meta.statistic = "centered-scaled-S";
        meta.seed = seed;
        sets.push_back(SampleSet::from(std::move(values), meta));
    }

    result.distances.resize(n_grid.size());
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        result.distances[i] = distance_of(sets[i], law, distance, r);
    }

    // Bootstrap over replicas: per-point bands plus a slope CI from resampled
    // distance vectors.
    const std::size_t n_points = n_grid.size();
    std::vector<std::vector<double>> boot(n_points,
                                          std::vector<double>(kBootstrapResamples));
    parallel_for(n_points * kBootstrapResamples, workers, [&](std::size_t idx) {
        const std::size_t point = idx / kBootstrapResamples;
        const std::size_t b = idx % kBootstrapResamples;
        RngStream rng(derive_seed(seed, 0xB5EED + idx), kAuxStreamBase + 31);
        boot[point][b] = distance_of(resample_set(sets[point], rng), law, distance, r);
    });

    result.distances_lo.resize(n_points);
    result.distances_hi.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        std::vector<double> sorted = boot[i];
        std::sort(sorted.begin(), sorted.end());
        result.distances_lo[i] = sample_quantile(sorted, 0.025);
        result.distances_hi[i] = sample_quantile(sorted, 0.975);
    }

    const PowerLawFit fit = fit_power_law(n_grid, result.distances);
    result.exponent_hat = fit.exponent;
    result.intercept_hat = fit.intercept;
    result.r_squared = fit.r_squared;
    result.alt_exponent = fit.alt_exponent;
    result.alt_log_coeff = fit.alt_log_coeff;
    result.unreliable = fit.r_squared < 0.5;

    std::vector<double> boot_exponents;
    boot_exponents.reserve(kBootstrapResamples);
    std::vector<double> distances(n_points);
    for (int b = 0; b < kBootstrapResamples; ++b) {
        bool valid = true;
        for (std::size_t i = 0; i < n_points; ++i) {
            distances[i] = boot[i][static_cast<std::size_t>(b)];
            if (!(distances[i] > 0.0)) valid = false;
        }
        if (!valid) continue;
        boot_exponents.push_back(fit_power_law(n_grid, distances).exponent);
    }
    std::sort(boot_exponents.begin(), boot_exponents.end());
    result.exponent_ci.lo = sample_quantile(boot_exponents, 0.025);
    result.exponent_ci.hi = sample_quantile(boot_exponents, 0.975);
    result.slope_ci.lo = -result.exponent_ci.hi;
    result.slope_ci.hi = -result.exponent_ci.lo;
    return result;
}

MzReport mz_rate_check(const MatrixMeasure& measure, const ProjectivePoint& start, double p,
                       const std::vector<long long>& n_grid, long long replicas,
                       std::uint64_t seed, unsigned workers) {
    if (!(p > 1.0 && p < 2.0)) throw ConfigError("mz_rate_check: p must lie in (1,2)");
    validate_grid(n_grid, false);

    const Calibration cal =
        calibrate(measure, start, n_grid.back(), std::max<long long>(2000, replicas),
                  seed, workers);

    MzReport report;
    report.grid_n = n_grid;
    report.lambda_hat = cal.lambda_hat;

    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::TerminalS;
    std::vector<std::vector<double>> normalized(n_grid.size());
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        const std::vector<double> terminal =
            run_ensemble(measure, start, n_grid[i], replicas, spec,
                         derive_seed(seed, 0x302A + i), workers);
        const double scale = std::pow(static_cast<double>(n_grid[i]), 1.0 / p);
        auto& values = normalized[i];
        values.resize(terminal.size());
        for (std::size_t j = 0; j < terminal.size(); ++j) {
            values[j] = std::abs(terminal[j] -
                                 static_cast<double>(n_grid[i]) * cal.lambda_hat) /
                        scale;
        }
        std::sort(values.begin(), values.end());
        report.q50.push_back(sample_quantile(values, 0.50));
        report.q90.push_back(sample_quantile(values, 0.90));
        report.q99.push_back(sample_quantile(values, 0.99));
    }

    // Bootstrap of q90(last) - q90(first).
    report.trend_delta = report.q90.back() - report.q90.front();
    {
        RngStream rng(derive_seed(seed, 0x7E4D), kAuxStreamBase + 41);
        const auto& first = normalized.front();
        const auto& last = normalized.back();
        std::vector<double> deltas(kBootstrapResamples);
        std::vector<double> a(first.size()), b(last.size());
        for (int res = 0; res < kBootstrapResamples; ++res) {
            for (auto& v : a) v = first[rng.next_below(first.size())];
            for (auto& v : b) v = last[rng.next_below(last.size())];
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            deltas[static_cast<std::size_t>(res)] =
                sample_quantile(b, 0.90) - sample_quantile(a, 0.90);
        }
        std::sort(deltas.begin(), deltas.end());
        report.trend_ci_hi = sample_quantile(deltas, 0.975);
    }
    report.decay_asserted = report.trend_ci_hi < 0.0;
    return report;
}

LilReport lil_statistic(const MatrixMeasure& measure, const ProjectivePoint& start,
                        long long n_max, long long replicas, std::uint64_t seed,
                        unsigned workers) {
    if (n_max < 10000) throw ConfigError("lil_statistic: nMax must be >= 10^4");
    const Calibration cal = calibrate(measure, start, n_max,
                                      std::max<long long>(200, replicas), seed, workers);
    if (cal.sigma2_hat <= 1e-14) {
        throw NumericalError("lil_statistic: sigma_hat = 0; the measure is degenerate "
                             "(deterministic cocycle)");
    }
    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::LilRunningMax;
    spec.lambda_hat = cal.lambda_hat;
    spec.sigma_hat = std::sqrt(cal.sigma2_hat);
    std::vector<double> maxima =
        run_ensemble(measure, start, n_max, replicas, spec, seed, workers);
    LilReport report;
    report.lambda_hat = cal.lambda_hat;
    report.sigma2_hat = cal.sigma2_hat;
    report.median = sample_median(maxima);
    std::sort(maxima.begin(), maxima.end());
    report.per_replica_max = std::move(maxima);
    return report;
}

double brownian_sup_cdf(double a) {
    if (a <= 0.0) return 0.0;
    return 2.0 * std_normal_cdf(a) - 1.0;
}

FunctionalSupReport functional_sup_check(const MatrixMeasure& measure,
                                         const ProjectivePoint& start, long long n,
                                         long long replicas, std::uint64_t seed,
                                         unsigned workers) {
    const Calibration cal =
        calibrate(measure, start, n, std::max<long long>(1000, replicas / 10), seed,
                  workers);
    if (cal.sigma2_hat <= 1e-14) {
        throw NumericalError("functional_sup_check: sigma_hat = 0; degenerate measure");
    }
    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::SupPolygonal;
    spec.lambda_hat = cal.lambda_hat;
    spec.sigma_hat = std::sqrt(cal.sigma2_hat);
    std::vector<double> sups = run_ensemble(measure, start, n, replicas, spec, seed, workers);

    SampleSet::Meta meta;
    meta.n = n;
    meta.measure_digest = measure_digest(measure);
    meta.statistic = "sup-polygonal";
    meta.seed = seed;

    FunctionalSupReport report{SampleSet::from(std::move(sups), meta)};
    report.lambda_hat = cal.lambda_hat;
    report.sigma2_hat = cal.sigma2_hat;
    report.ks = ks_distance(report.sups,
                            std::function<double(double)>(&brownian_sup_cdf));
    return report;
}

VbeReport vbe_inequality_check(const std::vector<std::vector<double>>& increments, double r) {
    if (!(r > 1.0 && r <= 2.0)) {
        throw ConfigError("vbe_inequality_check: r must lie in (1, 2]");
    }
    if (increments.empty() || increments.front().empty()) {
        throw ConfigError("vbe_inequality_check: empty increment matrix");
    }
    const std::size_t n_replicas = increments.size();
    const std::size_t n_steps = increments.front().size();
    const double c_sum = std::pow(2.0, 2.0 - r);
    const double c_max = 4.0 / (r - 1.0);

    // Per-replica slack variables; the inequality is asserted on their means
    // with a joint CI.
    std::vector<double> slack(n_replicas), slack_max(n_replicas);
    std::vector<double> lhs_values(n_replicas), max_values(n_replicas);
    double rhs_sum = 0.0;
    for (std::size_t j = 0; j < n_replicas; ++j) {
        if (increments[j].size() != n_steps) {
            throw ConfigError("vbe_inequality_check: ragged increment matrix");
        }
        double t = 0.0, t_star = 0.0, z_pow = 0.0;
        for (double z : increments[j]) {
            t += z;
            t_star = std::max(t_star, t);
            z_pow += std::pow(std::abs(z), r);
        }
        lhs_values[j] = std::pow(std::abs(t), r);
        max_values[j] = std::pow(t_star, r);
        rhs_sum += z_pow;
        slack[j] = lhs_values[j] - c_sum * z_pow;
        slack_max[j] = max_values[j] - c_max * z_pow;
    }

    VbeReport report;
    report.lhs = sample_mean(lhs_values);
    report.rhs = c_sum * rhs_sum / static_cast<double>(n_replicas);
    report.lhs_half_width =
        1.96 * std::sqrt(sample_variance(lhs_values) / static_cast<double>(n_replicas));
    report.slack_mean = sample_mean(slack);
    report.slack_se = std::sqrt(sample_variance(slack) / static_cast<double>(n_replicas));
    report.holds = report.slack_mean <= 1.96 * report.slack_se;

    report.max_lhs = sample_mean(max_values);
    report.max_rhs = c_max * rhs_sum / static_cast<double>(n_replicas);
    report.max_slack_mean = sample_mean(slack_max);
    report.max_slack_se =
        std::sqrt(sample_variance(slack_max) / static_cast<double>(n_replicas));
    report.max_holds = report.max_slack_mean <= 1.96 * report.max_slack_se;
    return report;
}

NormGapReport norm_gap_boundedness(const MatrixMeasure& measure,
                                   const std::vector<PointPair>& pairs,
                                   const std::vector<long long>& n_grid, long long replicas,
                                   std::uint64_t seed, unsigned workers) {
    if (measure.moment_order < 2.0) {
        throw ConfigError("norm_gap_boundedness: measure must declare a moment of order >= 2");
    }
    validate_grid(n_grid, false);
    if (pairs.empty()) throw ConfigError("norm_gap_boundedness: empty pair grid");
    const long long n_max = n_grid.back();
    const std::size_t n_pairs = pairs.size();
    const auto n_rep = static_cast<std::size_t>(replicas);
    const std::size_t n_points = n_grid.size();

    // |cum gap| at the grid points, per (pair, replica).
    std::vector<std::vector<double>> gap(n_pairs * n_rep);
    parallel_for(n_pairs * n_rep, workers, [&](std::size_t idx) {
        const std::size_t pair_idx = idx / n_rep;
        const std::size_t rep = idx % n_rep;
        RngStream rng(seed, static_cast<std::uint64_t>(rep));
        CouplingTrace trace = run_coupled_walk(measure, pairs[pair_idx].first,
                                               pairs[pair_idx].second, n_max, 1, rng);
        auto& values = gap[idx];
        values.resize(n_points);
        for (std::size_t i = 0; i < n_points; ++i) {
            values[i] = std::abs(trace.check_cum_gap[static_cast<std::size_t>(n_grid[i]) - 1]);
        }
    });

    NormGapReport report;
    report.grid_n = n_grid;
    report.l1_gap.assign(n_points, 0.0);
    std::size_t worst_pair = 0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
        std::vector<double> means(n_points, 0.0);
        for (std::size_t rep = 0; rep < n_rep; ++rep) {
            for (std::size_t i = 0; i < n_points; ++i) means[i] += gap[p * n_rep + rep][i];
        }
        for (std::size_t i = 0; i < n_points; ++i) {
            means[i] /= static_cast<double>(n_rep);
            if (means[i] > report.l1_gap[i]) {
                report.l1_gap[i] = means[i];
                if (i + 1 == n_points) worst_pair = p;
            }
        }
    }

    // log||A_n|| - log||A_n x|| curve from matrix-tracked walks.
    report.norm_minus_vec.assign(n_points, 0.0);
    {
        std::vector<std::vector<double>> curves(n_rep);
        parallel_for(n_rep, workers, [&](std::size_t rep) {
            RngStream rng(derive_seed(seed, 0x90A9), static_cast<std::uint64_t>(rep));
            WalkOptions options;
            options.stride = 1;
            options.track_matrix = true;
            WalkTrace trace = run_walk(measure, pairs.front().first, n_max, options, rng);
            auto& values = curves[rep];
            values.resize(n_points);
            for (std::size_t i = 0; i < n_points; ++i) {
                const auto k = static_cast<std::size_t>(n_grid[i]) - 1;
                values[i] = trace.check_log_mat_norm[k] - trace.check_S[k];
            }
        });
        for (std::size_t rep = 0; rep < n_rep; ++rep) {
            for (std::size_t i = 0; i < n_points; ++i) {
                report.norm_minus_vec[i] += curves[rep][i];
            }
        }
        for (double& v : report.norm_minus_vec) v /= static_cast<double>(n_rep);
    }

    // Bootstrap slope of the worst-pair L1 gap against log n. A bounded gap
    // may still creep toward its limit, so the trend test is relative: the
    // slope must be negligible against the gap magnitude itself.
    std::vector<double> grid_d(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        grid_d[i] = std::log(static_cast<double>(n_grid[i]));
    }
    auto slope_of = [&](const std::vector<double>& y) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double m = static_cast<double>(n_points);
        for (std::size_t i = 0; i < n_points; ++i) {
            sx += grid_d[i];
            sy += y[i];
            sxx += grid_d[i] * grid_d[i];
            sxy += grid_d[i] * y[i];
        }
        return (m * sxy - sx * sy) / (m * sxx - sx * sx);
    };
    report.slope = slope_of(report.l1_gap);
    {
        RngStream rng(derive_seed(seed, 0x510E), kAuxStreamBase + 51);
        std::vector<double> slopes(kBootstrapResamples);
        std::vector<double> means(n_points);
        for (int b = 0; b < kBootstrapResamples; ++b) {
            std::fill(means.begin(), means.end(), 0.0);
            for (std::size_t rep = 0; rep < n_rep; ++rep) {
                const auto& values = gap[worst_pair * n_rep + rng.next_below(n_rep)];
                for (std::size_t i = 0; i < n_points; ++i) means[i] += values[i];
            }
            for (double& v : means) v /= static_cast<double>(n_rep);
            slopes[static_cast<std::size_t>(b)] = slope_of(means);
        }
        std::sort(slopes.begin(), slopes.end());
        report.slope_ci_lo = sample_quantile(slopes, 0.025);
        report.slope_ci_hi = sample_quantile(slopes, 0.975);
    }
    const double gap_scale =
        *std::max_element(report.l1_gap.begin(), report.l1_gap.end());
    report.bounded_trend = report.slope_ci_lo <= 0.01 * gap_scale + 1e-12;
    return report;
}

}  // namespace mwalk
