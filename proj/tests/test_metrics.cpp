#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bpde/metrics.hpp"
#include "bpde/rng.hpp"

using namespace bpde;

namespace {

Field2D random_field(const Grid& g, uint64_t stream) {
    Field2D f(g);
    SampleRng rng(7, stream);
    for (double& v : f.values) v = rng.next_normal();
    return f;
}

}  // namespace

TEST_CASE("relative_l2 basic identities") {
    const Grid g(16);
    const Field2D t = random_field(g, 1);
    CHECK(relative_l2(t, t) == 0.0);

    Field2D twice(g);
    for (size_t k = 0; k < t.values.size(); ++k) twice.values[k] = 2.0 * t.values[k];
    CHECK(relative_l2(twice, t) == doctest::Approx(1.0).epsilon(1e-14));

    CHECK(relative_l2(Field2D(g), t) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("zero-norm truth is undefined") {
    const Grid g(8);
    const Field2D pred = random_field(g, 2);
    CHECK(std::isnan(relative_l2(pred, Field2D(g))));
}

TEST_CASE("scale invariance") {
    const Grid g(16);
    const Field2D t = random_field(g, 3), p = random_field(g, 4);
    const double base = relative_l2(p, t);
    for (double c : {3.0, -0.125, 1e6}) {
        Field2D pc(g), tc(g);
        for (size_t k = 0; k < t.values.size(); ++k) {
            pc.values[k] = c * p.values[k];
            tc.values[k] = c * t.values[k];
        }
        CHECK(relative_l2(pc, tc) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("triangle-style sanity bound") {
    const Grid g(16);
    for (uint64_t s = 0; s < 5; ++s) {
        const Field2D t = random_field(g, 10 + s), p = random_field(g, 20 + s);
        auto norm = [](const Field2D& f) {
            double acc = 0.0;
            for (double v : f.values) acc += v * v;
            return std::sqrt(acc);
        };
        CHECK(relative_l2(p, t) <= (norm(p) + norm(t)) / norm(t) + 1e-12);
    }
}

TEST_CASE("float overload agrees with double") {
    const Grid g(12);
    const Field2D t = random_field(g, 5), p = random_field(g, 6);
    std::vector<float> tf(t.values.begin(), t.values.end());
    std::vector<float> pf(p.values.begin(), p.values.end());
    const double dv = relative_l2(p, t);
    const double fv = relative_l2(std::span<const float>(pf), std::span<const float>(tf));
    CHECK(fv == doctest::Approx(dv).epsilon(1e-5));
}

TEST_CASE("aggregate statistics") {
    CHECK_THROWS_AS(aggregate({}), std::invalid_argument);

    const double single[] = {0.5};
    const ErrorStat s1 = aggregate(single);
    CHECK(s1.mean == 0.5);
    CHECK(s1.std == 0.0);
    CHECK(s1.count == 1);

    const double pair[] = {0.0, 1.0};
    const ErrorStat s2 = aggregate(pair);
    CHECK(s2.mean == 0.5);
    CHECK(s2.std == doctest::Approx(0.70710678118654752).epsilon(1e-12));

    // hand-computed: mean 0.078, deviations {-5e-3, 0, 5e-3},
    // sample variance 2.5e-5, std 5e-3
    const double table[] = {0.073, 0.078, 0.083};
    const ErrorStat s3 = aggregate(table);
    CHECK(s3.mean == doctest::Approx(0.078).epsilon(1e-12));
    CHECK(s3.std == doctest::Approx(0.005).epsilon(1e-9));
    CHECK(s3.count == 3);
}
