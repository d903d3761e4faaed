#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "bpde/metrics.hpp"
#include "bpde/sampling.hpp"
#include "bpde/solver.hpp"

using namespace bpde;

namespace {

BoundarySpec zero_bc(const Grid& g) {
    BoundarySpec bc;
    for (auto* e : {&bc.g_left, &bc.g_bottom, &bc.h_right, &bc.h_top}) *e = EdgeFunction(g);
    return bc;
}

// u* = sin(pi x) sin(pi y):  f = 2 pi^2 u*, zero Dirichlet edges,
// h_R(y) = -pi sin(pi y), h_T(x) = -pi sin(pi x).
struct Manufactured {
    Field2D f, ustar;
    BoundarySpec bc;
    explicit Manufactured(const Grid& g) : f(g), ustar(g), bc(zero_bc(g)) {
        const double pi = std::numbers::pi;
        const double h = g.spacing();
        for (int i = 0; i < g.n; ++i) {
            for (int j = 0; j < g.n; ++j) {
                const double sx = std::sin(pi * i * h), sy = std::sin(pi * j * h);
                ustar.at(i, j) = sx * sy;
                f.at(i, j) = 2.0 * pi * pi * sx * sy;
            }
        }
        for (int k = 0; k < g.n; ++k) {
            bc.h_right.values[k] = -pi * std::sin(pi * k * h);
            bc.h_top.values[k] = -pi * std::sin(pi * k * h);
        }
    }
};

BoundarySpec random_bc(const Grid& g, uint64_t stream) {
    SampleRng rng(7, stream);
    return sample_boundary(b0_preset(), rng, g);
}

Field2D random_forcing(const Grid& g, uint64_t stream) {
    SampleRng rng(17, stream);
    return sample_forcing(forcing_preset(), rng, g);
}

}  // namespace

TEST_CASE("zero data is a fixed point") {
    const Grid g(16);
    const Field2D u = jacobi_solve(Field2D(g), zero_bc(g), SolverConfig{137});
    for (double v : u.values) CHECK(v == 0.0);
}

TEST_CASE("constant boundary data converges to the constant solution") {
    // Pure Jacobi contracts like (1 - O(h^2)) per sweep, so the 1e-6 level
    // needs ~5e4 sweeps at n=64 (measured: 1.4e-7 at 50000).
    const Grid g(64);
    const double c = 0.7;
    BoundarySpec bc = zero_bc(g);
    for (int k = 0; k < g.n; ++k) {
        bc.g_left.values[k] = c;
        bc.g_bottom.values[k] = c;
    }
    const Field2D u = jacobi_solve(Field2D(g), bc, SolverConfig{50000});
    Field2D expect(g);
    for (double& v : expect.values) v = c;
    CHECK(relative_l2(u, expect) < 1e-6);
}

TEST_CASE("manufactured solution at the acceptance tolerance") {
    const Grid g(64);
    const Manufactured m(g);
    const Field2D u = jacobi_solve(m.f, m.bc, SolverConfig{20000});
    CHECK(relative_l2(u, m.ustar) < 5e-3);
}

TEST_CASE("manufactured error shrinks between 220 and 320 iterations") {
    const Grid g(64);
    const Manufactured m(g);
    const double e220 = relative_l2(jacobi_solve(m.f, m.bc, SolverConfig{220}), m.ustar);
    const double e320 = relative_l2(jacobi_solve(m.f, m.bc, SolverConfig{320}), m.ustar);
    CHECK(e320 <= e220);
}

TEST_CASE("parallel kernel matches the serial reference bitwise") {
    const Grid g(37);  // odd size exercises the edge handling
    const Field2D f = random_forcing(g, 0);
    const BoundarySpec bc = random_bc(g, 0);
    const SolverConfig cfg{173};
    const Field2D a = jacobi_solve(f, bc, cfg);
    const Field2D b = jacobi_solve_reference(f, bc, cfg);
    CHECK(a.values == b.values);
}

TEST_CASE("batch solve equals independent solves bitwise") {
    const Grid g(24);
    std::vector<Field2D> fs;
    std::vector<BoundarySpec> bcs;
    for (uint64_t s = 0; s < 12; ++s) {
        fs.push_back(random_forcing(g, s));
        bcs.push_back(random_bc(g, s));
    }
    const SolverConfig cfg{220};
    const auto batch = solve_batch(fs, bcs, cfg);
    REQUIRE(batch.size() == 12);
    for (size_t s = 0; s < 12; ++s) {
        const Field2D single = jacobi_solve(fs[s], bcs[s], cfg);
        CHECK(batch[s].values == single.values);
    }
    CHECK_THROWS_AS(solve_batch(fs, {bcs[0]}, cfg), std::invalid_argument);
}

TEST_CASE("superposition of the affine iteration") {
    const Grid g(64);
    const SolverConfig cfg{220};
    for (uint64_t trial = 0; trial < 5; ++trial) {
        const Field2D f1 = random_forcing(g, 10 + trial), f2 = random_forcing(g, 20 + trial);
        const BoundarySpec b1 = random_bc(g, 10 + trial), b2 = random_bc(g, 20 + trial);
        const double a = 1.5, b = -0.5;
        BoundarySpec bsum = zero_bc(g);
        for (int k = 0; k < g.n; ++k) {
            bsum.g_left.values[k] = a * b1.g_left.values[k] + b * b2.g_left.values[k];
            bsum.g_bottom.values[k] = a * b1.g_bottom.values[k] + b * b2.g_bottom.values[k];
            bsum.h_right.values[k] = a * b1.h_right.values[k] + b * b2.h_right.values[k];
            bsum.h_top.values[k] = a * b1.h_top.values[k] + b * b2.h_top.values[k];
        }
        const Field2D u_mix = jacobi_solve(field_linear_combine(a, f1, b, f2), bsum, cfg);
        const Field2D u_sum = field_linear_combine(a, jacobi_solve(f1, b1, cfg), b,
                                                   jacobi_solve(f2, b2, cfg));
        double num = 0.0, den = 0.0;
        for (size_t k = 0; k < u_mix.values.size(); ++k) {
            num += (u_mix.values[k] - u_sum.values[k]) * (u_mix.values[k] - u_sum.values[k]);
            den += u_sum.values[k] * u_sum.values[k];
        }
        CHECK(std::sqrt(num / den) < 1e-5);
    }
}

TEST_CASE("residual diagnostics") {
    const Grid g(32);
    SUBCASE("u=0, f=1 has unit interior residual") {
        Field2D f(g);
        for (double& v : f.values) v = 1.0;
        const ResidualStats r = residual(Field2D(g), f, zero_bc(g));
        CHECK(r.interior_rms == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("near-fixed-point residual is tiny relative to the forcing") {
        const Field2D f = random_forcing(g, 5);
        const BoundarySpec bc = random_bc(g, 5);
        const Field2D u = jacobi_solve(f, bc, SolverConfig{100000});
        const ResidualStats r = residual(u, f, bc);
        double frms = 0.0;
        for (double v : f.values) frms += v * v;
        frms = std::sqrt(frms / f.values.size());
        CHECK(r.interior_rms < 1e-6 * frms);
    }
    SUBCASE("neumann violation of the converged solve shrinks at second order") {
        // ghost-node and one-sided stencils differ by O(h^2 u'''), so the
        // measured violation must drop ~4x when h halves
        const Manufactured m32((Grid(32)));
        const Manufactured m64((Grid(64)));
        const ResidualStats r32 =
            residual(jacobi_solve(m32.f, m32.bc, SolverConfig{60000}), m32.f, m32.bc);
        const ResidualStats r64 =
            residual(jacobi_solve(m64.f, m64.bc, SolverConfig{60000}), m64.f, m64.bc);
        CHECK(r32.boundary_rms < 0.1);
        CHECK(r32.boundary_rms / r64.boundary_rms > 2.5);
    }
    SUBCASE("residual decays monotonically between the protocol counts") {
        const Field2D f = random_forcing(g, 6);
        const BoundarySpec bc = random_bc(g, 6);
        const ResidualStats r220 = residual(jacobi_solve(f, bc, SolverConfig{220}), f, bc);
        const ResidualStats r320 = residual(jacobi_solve(f, bc, SolverConfig{320}), f, bc);
        CHECK(r320.interior_rms < r220.interior_rms);
    }
}

TEST_CASE("error paths") {
    const Grid g(8);
    CHECK_THROWS_AS(jacobi_solve(Field2D(Grid(9)), zero_bc(g), SolverConfig{1}),
                    std::invalid_argument);
    Field2D f(g);
    f.values[3] = std::nan("");
    CHECK_THROWS_AS(jacobi_solve(f, zero_bc(g), SolverConfig{1}), std::invalid_argument);
    CHECK_THROWS_AS(jacobi_solve(Field2D(g), zero_bc(g), SolverConfig{0}),
                    std::invalid_argument);
    BoundarySpec bad = zero_bc(g);
    bad.h_top.values[2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(jacobi_solve(Field2D(g), bad, SolverConfig{1}), std::invalid_argument);
}

TEST_CASE("repeated solves are bitwise identical") {
    const Grid g(48);
    const Field2D f = random_forcing(g, 2);
    const BoundarySpec bc = random_bc(g, 2);
    const Field2D a = jacobi_solve(f, bc, SolverConfig{220});
    const Field2D b = jacobi_solve(f, bc, SolverConfig{220});
    CHECK(a.values == b.values);
}
