#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <thread>
#include <vector>

#include "mwalk/parallel.hpp"
#include "mwalk/rng.hpp"

using namespace mwalk;

// Known-answer vectors computed from an independent reference implementation
// of Philox4x32-10 (zero block matches the published test vector
// 6627e8d5 e169c58d bc57ac4c 9b00dbd8).
TEST_CASE("philox known answers") {
    RngStream zero(0, 0);
    CHECK(zero.next_u64() == 0x6627e8d5e169c58dull);
    CHECK(zero.next_u64() == 0xbc57ac4c9b00dbd8ull);

    RngStream keyed(0x299f31d0a4093822ull, 0x0370734413198a2eull);
    CHECK(keyed.next_u64() == 0xb60a410e61bd7780ull);
    CHECK(keyed.next_u64() == 0xa53f39583d51eb3full);
    CHECK(keyed.next_u64() == 0x314ddb4b0ab83527ull);
    CHECK(keyed.next_u64() == 0x9fc3cabe3fc8cf4cull);
}

TEST_CASE("streams are reproducible and distinct") {
    RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    int collisions_c = 0, collisions_d = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t v = a.next_u64();
        CHECK(v == b.next_u64());
        if (v == c.next_u64()) ++collisions_c;
        if (v == d.next_u64()) ++collisions_d;
    }
    CHECK(collisions_c == 0);
    CHECK(collisions_d == 0);
}

TEST_CASE("draws are a pure function of the counter, not of scheduling") {
    std::vector<std::uint64_t> serial(64);
    for (std::uint64_t s = 0; s < 64; ++s) serial[s] = RngStream(9, s).next_u64();

    std::vector<std::uint64_t> threaded(64);
    parallel_for(64, 8, [&](std::size_t s) {
        threaded[s] = RngStream(9, static_cast<std::uint64_t>(s)).next_u64();
    });
    CHECK(serial == threaded);
}

TEST_CASE("uniform doubles live in [0,1) with the right mean") {
    RngStream rng(123, 0);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.005);

    RngStream rng2(123, 1);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng2.next_double_open();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal deviates have unit variance") {
    RngStream rng(7, 0);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.next_normal();
        sum += z;
        sum2 += z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("next_below is in range and roughly uniform") {
    RngStream rng(11, 0);
    std::vector<int> counts(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const std::uint64_t v = rng.next_below(10);
        REQUIRE(v < 10);
        ++counts[static_cast<std::size_t>(v)];
    }
    for (int c : counts) {
        CHECK(c > n / 10 - 500);
        CHECK(c < n / 10 + 500);
    }
}

TEST_CASE("derive_seed separates tags") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t tag = 0; tag < 1000; ++tag) seeds.insert(derive_seed(5, tag));
    CHECK(seeds.size() == 1000);
    CHECK(derive_seed(5, 1) == derive_seed(5, 1));
    CHECK(derive_seed(5, 1) != derive_seed(6, 1));
}
