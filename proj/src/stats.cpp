#include "mwalk/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mwalk/assignment.hpp"
#include "mwalk/rng.hpp"

namespace mwalk {

namespace {

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlNode[8] = {-0.9602898564975363, -0.7966664774136267,
                               -0.5255324099163290, -0.1834346424956498,
                               0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeight[8] = {0.1012285362903763, 0.2223810344533745,
                                 0.3137066458778873, 0.3626837833783620,
                                 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};

double integrate_gl(double lo, double hi, const std::function<double(double)>& f) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    double total = 0.0;
    for (int i = 0; i < 8; ++i) {
        total += kGlWeight[i] * f(mid + half * kGlNode[i]);
    }
    return total * half;
}

double empirical_quantile(const std::vector<double>& sorted, double u) {
    const std::size_t m = sorted.size();
    const double pos = std::ceil(u * static_cast<double>(m));
    std::size_t idx = pos < 2.0 ? 0 : static_cast<std::size_t>(pos) - 1;
    if (idx >= m) idx = m - 1;
    return sorted[idx];
}

}  // namespace

SampleSet SampleSet::from(std::vector<double> values, Meta meta) {
    if (values.size() < 2) {
        throw ConfigError("SampleSet: needs at least 2 values");
    }
    std::sort(values.begin(), values.end());
    SampleSet s;
    s.values = std::move(values);
    s.meta = std::move(meta);
    return s;
}

double sample_mean(const std::vector<double>& v) {
    double total = 0.0;
    for (double x : v) total += x;
    return total / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
    const double mean = sample_mean(v);
    double total = 0.0;
    for (double x : v) total += (x - mean) * (x - mean);
    return v.size() > 1 ? total / static_cast<double>(v.size() - 1) : 0.0;
}

double sample_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ConfigError("sample_quantile: empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

double sample_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return sample_quantile(v, 0.5);
}

WassersteinResult wasserstein_empirical(const SampleSet& a, const SampleSet& b, double r,
                                        bool allow_interpolation, std::size_t exact_limit) {
    if (!(r > 0.0)) throw ConfigError("wasserstein_empirical: r must be > 0");
    if (a.values.empty() || b.values.empty()) {
        throw ConfigError("wasserstein_empirical: empty sample");
    }
    WassersteinResult out;
    if (r >= 1.0) {
        if (a.size() == b.size()) {
            double total = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                total += std::pow(std::abs(a.values[i] - b.values[i]), r);
            }
            out.value = std::pow(total / static_cast<double>(a.size()), 1.0 / r);
            return out;
        }
        if (!allow_interpolation) {
            throw ConfigError("wasserstein_empirical: size mismatch at r >= 1 "
                              "(set the interpolation flag)");
        }
        const std::size_t m = std::max(a.size(), b.size());
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
            total += std::pow(std::abs(empirical_quantile(a.values, u) -
                                       empirical_quantile(b.values, u)),
                              r);
        }
        out.value = std::pow(total / static_cast<double>(m), 1.0 / r);
        return out;
    }

    // r < 1: concave cost, the sorted coupling is only an upper bound.
    if (a.size() != b.size()) {
        throw ConfigError("wasserstein_empirical: r < 1 requires equal sizes");
    }
    const std::size_t n = a.size();
    double monotone = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        monotone += std::pow(std::abs(a.values[i] - b.values[i]), r);
    }
    monotone /= static_cast<double>(n);
    if (n > exact_limit) {
        out.value = monotone;
        out.upper_bound_only = true;
        return out;
    }
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cost[i][j] = std::pow(std::abs(a.values[i] - b.values[j]), r);
        }
    }
    const auto matching = solve_assignment(cost);
    out.value = assignment_cost(cost, matching) / static_cast<double>(n);
    return out;
}

GaussianDistance wasserstein_vs_gaussian(const SampleSet& a, const GaussianLaw& g, double r) {
    if (!(r >= 1.0)) throw ConfigError("wasserstein_vs_gaussian: r must be >= 1");
    if (a.values.empty()) throw ConfigError("wasserstein_vs_gaussian: empty sample");
    GaussianDistance out;
    const std::size_t m = a.size();
    const double md = static_cast<double>(m);
    const double eps = 1.0 / (2.0 * md);

    if (g.variance == 0.0) {
        double total = 0.0;
        for (double v : a.values) total += std::pow(std::abs(v), r);
        out.value = std::pow(total / md, 1.0 / r);
        return out;
    }

    double integral = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double lo = std::max(static_cast<double>(i) / md, eps);
        const double hi = std::min(static_cast<double>(i + 1) / md, 1.0 - eps);
        if (lo >= hi) continue;
        const double ai = a.values[i];
        integral += integrate_gl(lo, hi, [&](double u) {
            return std::pow(std::abs(ai - g.quantile(u)), r);
        });
    }
    out.value = std::pow(integral, 1.0 / r);

    // Omitted tails: |F_a^{-1} - F_g^{-1}|^r <= 2^{r-1}(|F_a^{-1}|^r + |F_g^{-1}|^r),
    // with the Gaussian part integrated via u = eps e^{-s}.
    const double gauss_tail = integrate_gl(0.0, 60.0, [&](double s) {
        const double u = eps * std::exp(-s);
        return std::pow(std::abs(g.quantile(u)), r) * u;
    });
    const double emp_tail =
        eps * (std::pow(std::abs(a.values.front()), r) + std::pow(std::abs(a.values.back()), r));
    out.tail_bound = std::pow(2.0, r - 1.0) * (emp_tail + 2.0 * gauss_tail);
    return out;
}

double ks_distance(const SampleSet& a, const GaussianLaw& g) {
    return ks_distance(a, std::function<double(double)>([&g](double t) { return g.cdf(t); }));
}

double ks_distance(const SampleSet& a, const std::function<double(double)>& cdf) {
    if (a.values.empty()) throw ConfigError("ks_distance: empty sample");
    const double m = static_cast<double>(a.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        // One-sided evaluations at each order statistic; the left limit
        // matters when the reference law carries an atom (degenerate case).
        const double t = a.values[i];
        const double f = cdf(t);
        const double f_left =
            cdf(std::nextafter(t, -std::numeric_limits<double>::infinity()));
        worst = std::max(worst, static_cast<double>(i + 1) / m - f);
        worst = std::max(worst, f_left - static_cast<double>(i) / m);
    }
    return std::min(std::max(worst, 0.0), 1.0);
}

PowerLawFit fit_power_law(const std::vector<long long>& grid_n,
                          const std::vector<double>& distances) {
    if (grid_n.size() < 3 || grid_n.size() != distances.size()) {
        throw ConfigError("fit_power_law: need >= 3 matched (n, distance) points");
    }
    for (std::size_t i = 0; i < grid_n.size(); ++i) {
        if (i > 0 && grid_n[i] <= grid_n[i - 1]) {
            throw ConfigError("fit_power_law: grid must be strictly increasing");
        }
        if (!(distances[i] > 0.0)) {
            throw ConfigError("fit_power_law: distances must be positive");
        }
    }
    const std::size_t k = grid_n.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double x = std::log(static_cast<double>(grid_n[i]));
        const double y = std::log(distances[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double kd = static_cast<double>(k);
    const double slope = (kd * sxy - sx * sy) / (kd * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / kd;

    PowerLawFit fit;
    fit.exponent = -slope;
    fit.intercept = intercept;

    double ss_res = 0.0, ss_tot = 0.0;
    const double y_mean = sy / kd;
    for (std::size_t i = 0; i < k; ++i) {
        const double x = std::log(static_cast<double>(grid_n[i]));
        const double y = std::log(distances[i]);
        const double fitted = intercept + slope * x;
        ss_res += (y - fitted) * (y - fitted);
        ss_tot += (y - y_mean) * (y - y_mean);
    }
    fit.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;

    // log dist = c - alpha log n + beta log log n.
    Eigen::MatrixXd design(static_cast<Eigen::Index>(k), 3);
    Eigen::VectorXd target(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const double x = std::log(static_cast<double>(grid_n[i]));
        design(static_cast<Eigen::Index>(i), 0) = 1.0;
        design(static_cast<Eigen::Index>(i), 1) = -x;
        design(static_cast<Eigen::Index>(i), 2) = std::log(std::max(x, 1e-9));
        target(static_cast<Eigen::Index>(i)) = std::log(distances[i]);
    }
    const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(target);
    fit.alt_exponent = beta(1);
    fit.alt_log_coeff = beta(2);
    return fit;
}

BootstrapCI bootstrap_ci(const std::vector<double>& values,
                         const std::function<double(const std::vector<double>&)>& statistic,
                         int resamples, std::uint64_t seed) {
    if (values.empty()) throw ConfigError("bootstrap_ci: empty sample");
    RngStream rng(seed, kAuxStreamBase + 101);
    std::vector<double> stats(static_cast<std::size_t>(resamples));
    std::vector<double> resample(values.size());
    for (int b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            resample[i] = values[rng.next_below(values.size())];
        }
        stats[static_cast<std::size_t>(b)] = statistic(resample);
    }
    std::sort(stats.begin(), stats.end());
    BootstrapCI ci;
    ci.lo = sample_quantile(stats, 0.025);
    ci.hi = sample_quantile(stats, 0.975);
    return ci;
}

}  // namespace mwalk
