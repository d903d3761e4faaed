#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "bpde/rng.hpp"

using namespace bpde;

TEST_CASE("identical (seed, stream) gives identical sequences") {
    SampleRng a(7, 123), b(7, 123);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    SampleRng c(7, 123), d(7, 123);
    for (int i = 0; i < 1000; ++i) CHECK(c.next_normal() == d.next_normal());
}

TEST_CASE("different streams and seeds decorrelate") {
    SampleRng a(7, 0), b(7, 1), c(8, 0);
    int equal_ab = 0, equal_ac = 0;
    for (int i = 0; i < 100; ++i) {
        const uint64_t x = a.next_u64();
        if (x == b.next_u64()) ++equal_ab;
        if (x == c.next_u64()) ++equal_ac;
    }
    CHECK(equal_ab == 0);
    CHECK(equal_ac == 0);
}

TEST_CASE("consuming one stream never disturbs another") {
    SampleRng probe(7, 5);
    std::vector<uint64_t> expect(64);
    for (auto& v : expect) v = probe.next_u64();

    SampleRng other(7, 6);
    SampleRng again(7, 5);
    std::vector<uint64_t> got;
    for (int i = 0; i < 64; ++i) {
        for (int k = 0; k < 17; ++k) (void)other.next_u64();  // interleaved consumption
        got.push_back(again.next_u64());
    }
    CHECK(got == expect);
}

TEST_CASE("unit draws stay in [0,1)") {
    SampleRng rng(1, 2);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normals have standard moments") {
    SampleRng rng(7, 99);
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

TEST_CASE("next_below respects the bound and covers it") {
    SampleRng rng(3, 4);
    std::vector<int> seen(12, 0);
    for (int i = 0; i < 12000; ++i) {
        const uint64_t v = rng.next_below(12);
        REQUIRE(v < 12);
        ++seen[v];
    }
    for (int c : seen) CHECK(c > 700);  // roughly uniform
}
