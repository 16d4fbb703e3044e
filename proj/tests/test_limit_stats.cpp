#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "mwalk/limit_stats.hpp"

using namespace mwalk;

namespace {

MatrixMeasure diag21_point_mass() {
    Eigen::VectorXd diag(2);
    diag << 2.0, 1.0;
    return MatrixMeasure::point_mass(InvertibleMatrix::diagonal(diag));
}

MatrixMeasure rotation_only() { return MatrixMeasure::rotation_dilation(2, 0.0); }

const ProjectivePoint e1 = ProjectivePoint::axis(2, 0);

PointPair generic_pair() {
    Eigen::VectorXd vx(2), vy(2);
    vx << 1.0, 0.4;
    vy << 1.0, -0.7;
    return {ProjectivePoint(vx), ProjectivePoint(vy)};
}

}  // namespace

TEST_CASE("rate_scan validates its grid") {
    const MatrixMeasure m = MatrixMeasure::bernoulli_reduction();
    CHECK_THROWS_AS(rate_scan(m, e1, DistanceKind::WassersteinR, 1.0, {64, 256}, 100, 1, 0),
                    ConfigError);
    CHECK_THROWS_AS(rate_scan(m, e1, DistanceKind::WassersteinR, 1.0, {64, 256, 128}, 100,
                              1, 0),
                    ConfigError);
    // Less than 1.5 decades of span.
    CHECK_THROWS_AS(rate_scan(m, e1, DistanceKind::WassersteinR, 1.0, {64, 128, 256}, 100,
                              1, 0),
                    ConfigError);
    CHECK_THROWS_AS(rate_scan(m, e1, DistanceKind::WassersteinR, 0.5, {64, 256, 4096}, 100,
                              1, 0),
                    ConfigError);
}

TEST_CASE("rate_scan flags the degenerate sigma path") {
    const auto res = rate_scan(diag21_point_mass(), e1, DistanceKind::WassersteinR, 1.0,
                               {64, 256, 1024, 4096}, 200, 2, 0);
    CHECK(res.degenerate);
    CHECK(res.unreliable);
    CHECK(res.sigma2_hat < 1e-14);
    CHECK(res.lambda_hat == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("rate_scan recovers the iid W1 rate") {
    const MatrixMeasure m = MatrixMeasure::bernoulli_reduction();
    const auto res = rate_scan(m, e1, DistanceKind::WassersteinR, 1.0,
                               {64, 256, 1024, 4096}, 20000, 3, 0);
    CHECK_FALSE(res.degenerate);
    CHECK(res.sigma2_hat == doctest::Approx(1.0).epsilon(0.1));
    CHECK(std::abs(res.lambda_hat) < 0.01);
    // Distances decay along the grid.
    for (std::size_t i = 1; i < res.distances.size(); ++i) {
        CHECK(res.distances[i] < res.distances[i - 1]);
        CHECK(res.distances_lo[i] <= res.distances[i] + 1e-12);
        CHECK(res.distances_hi[i] >= res.distances[i] - 1e-12);
    }
    CHECK(res.exponent_hat > 0.25);
    CHECK(res.exponent_hat < 0.75);
    CHECK(res.exponent_ci.lo <= res.exponent_hat);
    CHECK(res.exponent_ci.hi >= res.exponent_hat);
    CHECK_FALSE(res.unreliable);
}

TEST_CASE("rate_scan with the KS distance decays on the lattice walk") {
    const MatrixMeasure m = MatrixMeasure::bernoulli_reduction();
    const auto res = rate_scan(m, e1, DistanceKind::KolmogorovSmirnov, 1.0,
                               {64, 256, 1024, 4096}, 20000, 4, 0);
    CHECK(res.distances.back() < 0.05);
    CHECK(res.distances.back() < res.distances.front());
    CHECK(res.exponent_hat > 0.0);
}

TEST_CASE("mz_rate_check on isometries reports zero quantiles") {
    const auto report = mz_rate_check(rotation_only(), e1, 1.5, {100, 1000, 10000}, 200,
                                      5, 0);
    for (double q : report.q50) CHECK(q < 1e-12);
    for (double q : report.q90) CHECK(q < 1e-12);
    for (double q : report.q99) CHECK(q < 1e-12);
}

TEST_CASE("mz_rate_check asserts decay when the moment hypothesis holds") {
    // tailIndex 2.5 > p = 1.5: finite variance, so |S_n - n lambda| / n^{1/p}
    // decays like n^{1/2 - 1/p}.
    const MatrixMeasure m = MatrixMeasure::heavy_log_tail(2, 2.5);
    const auto report = mz_rate_check(m, e1, 1.5, {100, 1000, 10000}, 2000, 6, 0);
    CHECK(report.q90.back() < report.q90.front());
    CHECK(report.decay_asserted);
}

TEST_CASE("mz_rate_check refuses to fabricate decay when the hypothesis fails") {
    // tailIndex 1.2 < p = 1.5: the normalized deviation grows like n^{1/1.2 - 1/1.5}.
    const MatrixMeasure m = MatrixMeasure::heavy_log_tail(2, 1.2);
    const auto report = mz_rate_check(m, e1, 1.5, {100, 1000, 10000}, 2000, 7, 0);
    CHECK_FALSE(report.decay_asserted);
}

TEST_CASE("mz_rate_check validates p") {
    CHECK_THROWS_AS(mz_rate_check(rotation_only(), e1, 2.5, {100, 1000, 10000}, 100, 8, 0),
                    ConfigError);
}

TEST_CASE("lil_statistic rejects degenerate measures") {
    CHECK_THROWS_AS(lil_statistic(diag21_point_mass(), e1, 10000, 50, 9, 0),
                    NumericalError);
    CHECK_THROWS_AS(lil_statistic(rotation_only(), e1, 10000, 50, 10, 0), NumericalError);
    CHECK_THROWS_AS(lil_statistic(MatrixMeasure::bernoulli_reduction(), e1, 5000, 50, 11, 0),
                    ConfigError);
}

TEST_CASE("lil_statistic matches an iid oracle on the lattice walk") {
    const long long n_max = 30000;
    const long long replicas = 100;
    const auto report = lil_statistic(MatrixMeasure::bernoulli_reduction(), e1, n_max,
                                      replicas, 12, 0);
    CHECK(report.sigma2_hat == doctest::Approx(1.0).epsilon(0.25));
    CHECK(std::abs(report.lambda_hat) < 0.01);
    REQUIRE(report.per_replica_max.size() == static_cast<std::size_t>(replicas));

    // Oracle: the same statistic from a direct +-1 random walk with the exact
    // constants lambda = 0, sigma = 1.
    const auto grid = lil_checkpoints(n_max);
    std::vector<double> oracle(static_cast<std::size_t>(replicas));
    for (std::size_t rep = 0; rep < oracle.size(); ++rep) {
        RngStream rng(derive_seed(99, rep), 0);
        double s = 0.0, running = 0.0;
        std::size_t next = 0;
        for (long long k = 1; k <= n_max; ++k) {
            s += rng.next_double() < 0.5 ? -1.0 : 1.0;
            if (next < grid.size() && k == grid[next]) {
                const double denom =
                    std::sqrt(2.0 * k * std::log(std::log(static_cast<double>(k))));
                running = std::max(running, std::abs(s) / denom);
                ++next;
            }
        }
        oracle[rep] = running;
    }
    std::sort(oracle.begin(), oracle.end());
    const double oracle_median = 0.5 * (oracle[49] + oracle[50]);
    CHECK(report.median == doctest::Approx(oracle_median).epsilon(0.3));
    CHECK(report.median > 0.5);
    CHECK(report.median < 2.0);
}

TEST_CASE("brownian sup cdf closed forms") {
    CHECK(brownian_sup_cdf(0.0) == 0.0);
    CHECK(brownian_sup_cdf(-1.0) == 0.0);
    CHECK(brownian_sup_cdf(1.0) == doctest::Approx(0.6826894921370859).epsilon(1e-12));
    CHECK(brownian_sup_cdf(8.0) > 1.0 - 1e-14);
}

TEST_CASE("functional sup statistic tracks the Brownian law") {
    const auto report = functional_sup_check(MatrixMeasure::bernoulli_reduction(), e1,
                                             2000, 2000, 13, 0);
    CHECK(report.ks <= 0.06);
    CHECK(report.sups.values.front() >= 0.0);  // sup over a path from 0
    CHECK_THROWS_AS(functional_sup_check(rotation_only(), e1, 500, 100, 14, 0),
                    NumericalError);
}

TEST_CASE("vbe inequality closed forms") {
    // r = 2 on +-1 increments: lhs = E T_n^2 = n and rhs = n exactly.
    std::vector<std::vector<double>> rad(20000, std::vector<double>(50));
    for (std::size_t j = 0; j < rad.size(); ++j) {
        RngStream rng(15, j);
        for (auto& z : rad[j]) z = rng.next_double() < 0.5 ? -1.0 : 1.0;
    }
    const auto sq = vbe_inequality_check(rad, 2.0);
    CHECK(sq.rhs == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(sq.lhs == doctest::Approx(50.0).epsilon(0.05));
    CHECK(sq.holds);
    CHECK(sq.max_rhs == doctest::Approx(4.0 * 50.0).epsilon(1e-12));
    CHECK(sq.max_holds);

    // r = 1.5: strict inequality with visible margin.
    const auto mid = vbe_inequality_check(rad, 1.5);
    CHECK(mid.lhs + mid.lhs_half_width < mid.rhs);
    CHECK(mid.holds);
    CHECK(mid.max_holds);

    // Single increment: ||Z_1||_r^r <= 2^{2-r} ||Z_1||_r^r always.
    std::vector<std::vector<double>> single(100, std::vector<double>(1));
    for (std::size_t j = 0; j < single.size(); ++j) {
        RngStream rng(16, j);
        single[j][0] = rng.next_normal();
    }
    const auto one = vbe_inequality_check(single, 1.5);
    CHECK(one.holds);
    CHECK(one.rhs == doctest::Approx(std::pow(2.0, 0.5) * one.lhs).epsilon(0.05));
}

TEST_CASE("vbe inequality validates inputs") {
    std::vector<std::vector<double>> ok(10, std::vector<double>(5, 1.0));
    CHECK_THROWS_AS(vbe_inequality_check(ok, 1.0), ConfigError);
    CHECK_THROWS_AS(vbe_inequality_check(ok, 2.5), ConfigError);
    CHECK_THROWS_AS(vbe_inequality_check({}, 1.5), ConfigError);
    std::vector<std::vector<double>> ragged{{1.0, 2.0}, {1.0}};
    CHECK_THROWS_AS(vbe_inequality_check(ragged, 1.5), ConfigError);
}

TEST_CASE("norm gap curves on closed forms") {
    MatrixMeasure rot = rotation_only();
    const auto flat = norm_gap_boundedness(rot, {generic_pair()}, {10, 100, 1000}, 20,
                                           17, 0);
    for (double g : flat.l1_gap) CHECK(g < 1e-12);
    for (double g : flat.norm_minus_vec) CHECK(std::abs(g) < 1e-9);
    CHECK(flat.bounded_trend);

    const auto diag = norm_gap_boundedness(diag21_point_mass(), {generic_pair()},
                                           {10, 100, 1000}, 8, 18, 0);
    // The gap converges to |log of the limiting coefficient ratio|: bounded.
    const double limit = std::abs(std::log(generic_pair().first.rep()(0) /
                                           generic_pair().second.rep()(0)));
    CHECK(diag.l1_gap.back() == doctest::Approx(limit).epsilon(1e-6));
    CHECK(diag.bounded_trend);
    for (double g : diag.norm_minus_vec) CHECK(g >= -1e-12);
}

TEST_CASE("norm gap requires a second moment declaration") {
    const MatrixMeasure thin = MatrixMeasure::heavy_log_tail(2, 1.5);
    CHECK_THROWS_AS(norm_gap_boundedness(thin, {generic_pair()}, {10, 100, 1000}, 10, 19, 0),
                    ConfigError);
}
