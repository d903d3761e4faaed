#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "bpde/grid.hpp"

using namespace bpde;

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(Grid(2), std::invalid_argument);
    CHECK_THROWS_AS(Grid(0), std::invalid_argument);
    const Grid g(64);
    CHECK(g.spacing() == 1.0 / 63.0);
    CHECK(g.node_count() == 4096);
}

TEST_CASE("coordinate channels endpoints and midpoints") {
    const Grid g(3);
    const auto [xs, ys] = coordinate_channels(g);
    for (int j = 0; j < 3; ++j) {
        CHECK(xs.at(0, j) == 0.0);
        CHECK(xs.at(2, j) == 1.0);
        CHECK(xs.at(1, j) == 0.5);
    }
    for (int i = 0; i < 3; ++i) {
        CHECK(ys.at(i, 0) == 0.0);
        CHECK(ys.at(i, 2) == 1.0);
    }
    const Grid g64(64);
    const auto [xs64, ys64] = coordinate_channels(g64);
    CHECK(xs64.at(21, 5) == doctest::Approx(21.0 / 63.0).epsilon(1e-15));
    CHECK(ys64.at(5, 21) == doctest::Approx(21.0 / 63.0).epsilon(1e-15));
}

TEST_CASE("coordinate reflection symmetry") {
    // x(i,j) + x(n-1-i,j) = 1; exact when h is a power of two
    const Grid g(17);
    const auto [xs, ys] = coordinate_channels(g);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            CHECK(xs.at(i, j) + xs.at(g.n - 1 - i, j) == 1.0);
    const Grid g64(64);
    const auto [xs64, ys64] = coordinate_channels(g64);
    for (int i = 0; i < g64.n; ++i)
        CHECK(xs64.at(i, 0) + xs64.at(g64.n - 1 - i, 0) ==
              doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("field linear combine") {
    const Grid g(8);
    Field2D u(g), v(g);
    for (int k = 0; k < g.node_count(); ++k) {
        u.values[k] = 0.1 * k - 3.0;
        v.values[k] = -0.7 * k + 1.0;
    }
    SUBCASE("identity") {
        const Field2D r = field_linear_combine(1.0, u, 0.0, v);
        CHECK(r.values == u.values);
    }
    SUBCASE("convexity with equal operands") {
        const Field2D r = field_linear_combine(0.5, u, 0.5, u);
        CHECK(r.values == u.values);
    }
    SUBCASE("cancellation") {
        const Field2D r = field_linear_combine(1.0, u, -1.0, u);
        for (double x : r.values) CHECK(x == 0.0);
    }
    SUBCASE("grid mismatch throws") {
        Field2D w((Grid(9)));
        CHECK_THROWS_AS(field_linear_combine(1.0, u, 1.0, w), std::invalid_argument);
    }
}
