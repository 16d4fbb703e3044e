#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mwalk/walk.hpp"

using namespace mwalk;

namespace {

MatrixMeasure diag21_point_mass() {
    Eigen::VectorXd diag(2);
    diag << 2.0, 1.0;
    return MatrixMeasure::point_mass(InvertibleMatrix::diagonal(diag));
}

MatrixMeasure rotation_only() { return MatrixMeasure::rotation_dilation(2, 0.0); }

// Random bounded finite-support measure for oracle comparisons.
MatrixMeasure random_finite_support(int d, RngStream& rng) {
    std::vector<std::pair<InvertibleMatrix, double>> atoms;
    const int count = 2 + static_cast<int>(rng.next_below(3));
    for (int a = 0; a < count; ++a) {
        Eigen::MatrixXd m(d, d);
        do {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) m(i, j) = rng.next_normal();
        } while (std::abs(m.determinant()) < 0.1);
        atoms.emplace_back(InvertibleMatrix(m), 1.0 / count);
    }
    // Make the probabilities sum to 1 exactly.
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i) acc += atoms[i].second;
    atoms.back().second = 1.0 - acc;
    return MatrixMeasure::finite_support(std::move(atoms));
}

Eigen::VectorXd random_direction(int d, RngStream& rng) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.next_normal();
    return v;
}

}  // namespace

TEST_CASE("eigen-direction walk is exact") {
    RngStream rng(1, 0);
    WalkOptions options;
    options.track_matrix = true;
    const auto trace = run_walk(diag21_point_mass(), ProjectivePoint::axis(2, 0), 100,
                                options, rng);
    CHECK(trace.S == doctest::Approx(100.0 * std::log(2.0)).epsilon(1e-13));
    CHECK(trace.log_mat_norm == doctest::Approx(100.0 * std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("rotation-only walk accumulates nothing") {
    RngStream rng(2, 0);
    WalkOptions options;
    options.track_matrix = true;
    Eigen::VectorXd v(2);
    v << 0.3, -1.2;
    const auto trace = run_walk(rotation_only(), ProjectivePoint(v), 1000, options, rng);
    CHECK(std::abs(trace.S) < 1e-10);
    CHECK(std::abs(trace.log_mat_norm) < 1e-10);
}

TEST_CASE("off-axis diagonal walk matches the closed form") {
    RngStream rng(3, 0);
    Eigen::VectorXd v(2);
    v << 1.0, 1.0;
    const auto first = run_walk(diag21_point_mass(), ProjectivePoint(v), 1, {}, rng);
    CHECK(first.S == doctest::Approx(0.5 * std::log(2.5)).epsilon(1e-13));

    RngStream rng2(3, 1);
    const auto long_run = run_walk(diag21_point_mass(), ProjectivePoint(v), 50, {}, rng2);
    // ||A_n (1,1)/sqrt(2)|| = sqrt(4^n + 1)/sqrt(2) -> 2^n / sqrt(2).
    CHECK(long_run.S - 50.0 * std::log(2.0) ==
          doctest::Approx(std::log(1.0 / std::sqrt(2.0))).epsilon(1e-10));
}

TEST_CASE("renormalized tracks match dense products") {
    RngStream seeder(4, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 2 + static_cast<int>(seeder.next_below(3));
        const long long n = 1 + static_cast<long long>(seeder.next_below(50));
        RngStream measure_rng(5, static_cast<std::uint64_t>(trial));
        const MatrixMeasure measure = random_finite_support(d, measure_rng);
        const ProjectivePoint start(random_direction(d, measure_rng));
        const ProjectivePoint target(random_direction(d, measure_rng));

        WalkOptions options;
        options.track_matrix = true;
        options.target = target;
        RngStream walk_rng(6, static_cast<std::uint64_t>(trial));
        const auto trace = run_walk(measure, start, n, options, walk_rng);

        // Dense oracle: same draws replayed through an identical stream.
        RngStream replay(6, static_cast<std::uint64_t>(trial));
        StepSampler sampler(measure);
        Eigen::MatrixXd dense = Eigen::MatrixXd::Identity(d, d);
        for (long long k = 0; k < n; ++k) dense = sampler.next(replay) * dense;

        const double oracle_S = std::log((dense * start.rep()).norm());
        const double oracle_mat = std::log(dense.jacobiSvd().singularValues()(0));
        const double oracle_coeff = std::log(std::abs(target.rep().dot(dense * start.rep())));

        CHECK(trace.S == doctest::Approx(oracle_S).epsilon(1e-8));
        CHECK(trace.log_mat_norm == doctest::Approx(oracle_mat).epsilon(1e-8));
        if (!trace.coeff_floored) {
            CHECK(trace.log_coeff == doctest::Approx(oracle_coeff).epsilon(1e-6));
        }

        // Pathwise order invariants.
        CHECK(trace.S <= trace.log_mat_norm + 1e-9);
        CHECK(trace.log_coeff <= trace.S + 1e-9);
    }
}

TEST_CASE("coupled walk under isometries keeps the distance") {
    RngStream rng(7, 0);
    Eigen::VectorXd vx(2), vy(2);
    vx << 1.0, 0.0;
    vy << 1.0, 1.0;
    const auto trace = run_coupled_walk(rotation_only(), ProjectivePoint(vx),
                                        ProjectivePoint(vy), 200, 1, rng);
    const double expected = std::log(std::sqrt(2.0) / 2.0);
    for (double ld : trace.check_log_dist) {
        CHECK(ld == doctest::Approx(expected).epsilon(1e-9));
        CHECK(ld <= 0.0);
    }
}

TEST_CASE("coupled walk contraction slope on the diagonal point mass") {
    RngStream rng(8, 0);
    Eigen::VectorXd vx(2), vy(2);
    vx << 1.0, 0.4;
    vy << 1.0, -0.7;
    const auto trace = run_coupled_walk(diag21_point_mass(), ProjectivePoint(vx),
                                        ProjectivePoint(vy), 60, 60, rng);
    CHECK(trace.log_dist / 60.0 == doctest::Approx(-std::log(2.0)).epsilon(0.02));

    // cumGap settles at log(|x_1| / |y_1|) of the unit representatives.
    const double expected_gap = std::log(ProjectivePoint(vx).rep()(0) /
                                         ProjectivePoint(vy).rep()(0));
    CHECK(trace.cum_gap == doctest::Approx(expected_gap).epsilon(1e-6));
}

TEST_CASE("coupled walk matches a dense oracle while separated") {
    RngStream seeder(9, 0);
    for (int trial = 0; trial < 30; ++trial) {
        RngStream measure_rng(10, static_cast<std::uint64_t>(trial));
        const MatrixMeasure measure = random_finite_support(3, measure_rng);
        const ProjectivePoint x(random_direction(3, measure_rng));
        const ProjectivePoint y(random_direction(3, measure_rng));
        if (proj_metric(x, y) < 1e-3) continue;

        RngStream walk_rng(11, static_cast<std::uint64_t>(trial));
        const auto trace = run_coupled_walk(measure, x, y, 25, 1, walk_rng);

        RngStream replay(11, static_cast<std::uint64_t>(trial));
        StepSampler sampler(measure);
        Eigen::MatrixXd dense = Eigen::MatrixXd::Identity(3, 3);
        for (std::size_t k = 0; k < trace.check_n.size(); ++k) {
            dense = sampler.next(replay) * dense;
            const InvertibleMatrix a(dense);
            const double d_oracle = proj_metric(act(a, x), act(a, y));
            if (d_oracle > 1e-10) {
                CHECK(trace.check_log_dist[k] ==
                      doctest::Approx(std::log(d_oracle)).epsilon(1e-7));
            }
            const double gap_oracle = std::log((dense * x.rep()).norm()) -
                                      std::log((dense * y.rep()).norm());
            CHECK(trace.check_cum_gap[k] == doctest::Approx(gap_oracle).epsilon(1e-7));
        }

        // cumGap is the running sum of incrementGap.
        double acc = 0.0;
        for (std::size_t k = 0; k < trace.check_n.size(); ++k) {
            acc += trace.check_increment_gap[k];
            CHECK(std::abs(acc - trace.check_cum_gap[k]) < 1e-9);
        }
    }
}

TEST_CASE("tangent mode resolves separations far below double spacing") {
    Eigen::VectorXd diag(2);
    diag << 4.0, 0.25;
    const MatrixMeasure strong =
        MatrixMeasure::point_mass(InvertibleMatrix::diagonal(diag));
    RngStream rng(12, 0);
    Eigen::VectorXd vx(2), vy(2);
    vx << 1.0, 0.3;
    vy << 1.0, -0.5;
    const auto trace = run_coupled_walk(strong, ProjectivePoint(vx), ProjectivePoint(vy),
                                        300, 300, rng);
    CHECK(trace.tangent_mode);
    CHECK(std::isfinite(trace.log_dist));
    CHECK(trace.log_dist < -700.0);  // below log(DBL_MIN)
    CHECK(trace.log_dist / 300.0 == doctest::Approx(-std::log(16.0)).epsilon(0.01));
}

TEST_CASE("coupled walk rejects coincident starting points") {
    Eigen::VectorXd v(2);
    v << 0.6, -0.8;
    RngStream rng(13, 0);
    CHECK_THROWS_AS(run_coupled_walk(rotation_only(), ProjectivePoint(v),
                                     ProjectivePoint(-v), 10, 1, rng),
                    ConfigError);
}

TEST_CASE("polygonal process endpoints and centering") {
    WalkTrace single;
    single.n = 1;
    single.stride = 1;
    single.check_n = {1};
    single.check_S = {std::log(2.0) + 1.0};
    const auto poly = build_polygonal(single, std::log(2.0));
    REQUIRE(poly.grid_values.size() == 2);
    CHECK(poly.grid_values[0] == 0.0);
    CHECK(poly.grid_values[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(poly.sup() == doctest::Approx(1.0).epsilon(1e-14));

    RngStream rng(14, 0);
    WalkOptions options;
    const auto trace = run_walk(diag21_point_mass(), ProjectivePoint::axis(2, 0), 64,
                                options, rng);
    const auto zero = build_polygonal(trace, std::log(2.0));
    for (double v : zero.grid_values) CHECK(std::abs(v) < 1e-10);

    WalkTrace strided = trace;
    strided.stride = 2;
    CHECK_THROWS_AS(build_polygonal(strided, 0.0), ConfigError);
}

TEST_CASE("lil checkpoints are geometric and end at n_max") {
    const auto grid = lil_checkpoints(1000000);
    REQUIRE(!grid.empty());
    CHECK(grid.front() == 16);
    CHECK(grid.back() == 1000000);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        CHECK(grid[i] > grid[i - 1]);
        CHECK(grid[i] <= 1000000);
    }
    // Geometric spacing: the ratio stays near 1.5 away from the clamped tail.
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const double ratio = static_cast<double>(grid[i]) / static_cast<double>(grid[i - 1]);
        CHECK(ratio > 1.2);
        CHECK(ratio < 1.6);
    }
}

TEST_CASE("ensembles reduce deterministically at any worker count") {
    RngStream measure_rng(15, 0);
    const MatrixMeasure measure = random_finite_support(2, measure_rng);
    const ProjectivePoint start = ProjectivePoint::axis(2, 0);
    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::TerminalS;

    const auto one = run_ensemble(measure, start, 200, 64, spec, 99, 1);
    const auto two = run_ensemble(measure, start, 200, 64, spec, 99, 2);
    const auto eight = run_ensemble(measure, start, 200, 64, spec, 99, 8);
    CHECK(one == two);
    CHECK(one == eight);

    // Replica 0 coincides with a direct run on stream 0.
    RngStream rng0(99, 0);
    const auto direct = run_walk(measure, start, 200, {}, rng0);
    CHECK(one[0] == direct.S);
}

TEST_CASE("point-mass ensembles are constant") {
    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::TerminalS;
    const auto values = run_ensemble(diag21_point_mass(), ProjectivePoint::axis(2, 0), 50,
                                     16, spec, 7, 4);
    for (double v : values) CHECK(v == values.front());
}

TEST_CASE("ensemble mean is consistent with one long run") {
    const MatrixMeasure measure = MatrixMeasure::bernoulli_reduction();
    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::TerminalS;
    const auto values = run_ensemble(measure, ProjectivePoint::axis(2, 0), 1000, 10000,
                                     spec, 31, 0);
    double sum = 0.0, sum2 = 0.0;
    for (double v : values) {
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / 10000.0;
    const double sd = std::sqrt(sum2 / 10000.0 - mean * mean);
    // lambda = 0 for the reduction measure.
    CHECK(std::abs(mean) <= 4.0 * sd / 100.0);
}

TEST_CASE("norm gap statistic stays tight as n grows") {
    RngStream measure_rng(16, 0);
    const MatrixMeasure measure = random_finite_support(2, measure_rng);
    StatisticSpec spec;
    spec.kind = StatisticSpec::Kind::TerminalNormGap;
    std::vector<double> p99;
    for (long long n : {100LL, 1000LL, 10000LL}) {
        auto values = run_ensemble(measure, ProjectivePoint::axis(2, 0), n, 400, spec,
                                   41, 0);
        std::sort(values.begin(), values.end());
        for (double v : values) CHECK(v >= -1e-9);
        p99.push_back(values[395]);
    }
    // Tightness: no blow-up of the upper tail across two decades of n.
    CHECK(p99[2] < 4.0 * (p99[0] + 1.0));
}
