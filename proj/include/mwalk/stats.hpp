#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mwalk/gaussian.hpp"

namespace mwalk {

// Terminal statistics across replicas, kept sorted.
struct SampleSet {
    std::vector<double> values;  // ascending
    struct Meta {
        long long n = 0;
        std::uint64_t measure_digest = 0;
        std::string statistic;
        std::uint64_t seed = 0;
    } meta;

    static SampleSet from(std::vector<double> values, Meta meta);
    static SampleSet from(std::vector<double> values) {
        return from(std::move(values), Meta{});
    }
    std::size_t size() const { return values.size(); }
};

double sample_mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);  // unbiased
double sample_quantile(const std::vector<double>& sorted, double q);
double sample_median(std::vector<double> v);

struct WassersteinResult {
    double value = 0.0;
    // r < 1 above the exact-solver size limit: monotone-coupling bound only.
    bool upper_bound_only = false;
};

// W_r between two empirical laws. r >= 1: exact via the sorted (quantile)
// coupling, requiring equal sizes unless allow_interpolation, in which case
// both quantile functions are evaluated on a common midpoint grid. r < 1:
// exact discrete optimal transport (assignment solver) up to exact_limit
// points per side, the monotone-coupling upper bound beyond. Values follow
// the convention (mean |x-y|^r)^{1/r} for r >= 1 and mean |x-y|^r for r < 1.
WassersteinResult wasserstein_empirical(const SampleSet& a, const SampleSet& b, double r,
                                        bool allow_interpolation = false,
                                        std::size_t exact_limit = 2000);

struct GaussianDistance {
    double value = 0.0;       // truncated quantile integral, power 1/r applied
    double tail_bound = 0.0;  // analytic bound on the omitted tail mass cost
};

// W_r (r >= 1) between an empirical law and a centered Gaussian: the quantile
// integral on u in [1/(2m), 1-1/(2m)] by per-step Gauss-Legendre quadrature
// against the exact Gaussian quantile, with the omitted Gaussian tail bounded
// analytically and reported separately.
GaussianDistance wasserstein_vs_gaussian(const SampleSet& a, const GaussianLaw& g, double r);

// Kolmogorov-Smirnov distance to a reference CDF, evaluated one-sided at
// every jump of the empirical CDF.
double ks_distance(const SampleSet& a, const GaussianLaw& g);
double ks_distance(const SampleSet& a, const std::function<double(double)>& cdf);

struct PowerLawFit {
    double exponent = 0.0;   // alpha in distance ~ n^{-alpha}
    double intercept = 0.0;  // log c
    double r_squared = 0.0;
    // Alternative model log dist = intercept - alpha log n + beta log log n,
    // for rates carrying a log factor.
    double alt_exponent = 0.0;
    double alt_log_coeff = 0.0;
};

// OLS of log(distance) on log(n). Grid must be >= 3 strictly increasing
// points with positive distances.
PowerLawFit fit_power_law(const std::vector<long long>& grid_n,
                          const std::vector<double>& distances);

// Percentile bootstrap CI for a statistic of one sample (B resamples).
struct BootstrapCI {
    double lo = 0.0;
    double hi = 0.0;
};
BootstrapCI bootstrap_ci(const std::vector<double>& values,
                         const std::function<double(const std::vector<double>&)>& statistic,
                         int resamples, std::uint64_t seed);

}  // namespace mwalk
