#include "bpde/solver.hpp"

#include <cmath>
#include <utility>

namespace bpde {

namespace {

void check_inputs(const Field2D& f, const BoundarySpec& bc) {
    bc.check_consistent();
    if (!(f.grid == bc.grid())) throw std::invalid_argument("jacobi_solve: grid mismatch");
    for (double v : f.values)
        if (!std::isfinite(v)) throw std::invalid_argument("jacobi_solve: non-finite forcing");
    for (const EdgeFunction* e : {&bc.g_left, &bc.g_bottom, &bc.h_right, &bc.h_top})
        for (double v : e->values)
            if (!std::isfinite(v))
                throw std::invalid_argument("jacobi_solve: non-finite boundary data");
}

// Dirichlet nodes are preset once on both buffers and never rewritten.
// Corners: (0,0) averages the two Dirichlet samples; the mixed corners take
// the Dirichlet value; (n-1,n-1) stays iterative (both ghost nodes).
void preset_dirichlet(double* u, int n, const BoundarySpec& bc) {
    for (int j = 0; j < n; ++j) u[j] = bc.g_left.values[j];                  // i = 0
    for (int i = 0; i < n; ++i) u[static_cast<size_t>(i) * n] = bc.g_bottom.values[i];  // j = 0
    u[0] = 0.5 * (bc.g_left.values[0] + bc.g_bottom.values[0]);
    u[static_cast<size_t>(n - 1) * n] = bc.g_bottom.values[n - 1];
    u[n - 1] = bc.g_left.values[n - 1];
}

// One row of a Jacobi sweep, reading u, writing un. Row i = 0 and column
// j = 0 are Dirichlet and preset on both buffers. Every code path (serial,
// parallel, reference) funnels through this body so results stay bitwise
// identical.
inline void sweep_row(int i, int n, double two_h, const double* u, double* un,
                      const double* h2f, const double* h_right, const double* h_top) {
    const double* um = u + static_cast<size_t>(i - 1) * n;
    const double* uc = u + static_cast<size_t>(i) * n;
    const double* up = u + static_cast<size_t>(i + 1) * n;
    double* out = un + static_cast<size_t>(i) * n;
    const double* fc = h2f + static_cast<size_t>(i) * n;
    if (i < n - 1) {
        for (int j = 1; j < n - 1; ++j)
            out[j] = 0.25 * (um[j] + up[j] + uc[j - 1] + uc[j + 1] + fc[j]);
        // top edge (j = n-1): ghost u_{i,n} = u_{i,n-2} + 2h * h_top(i)
        const int j = n - 1;
        out[j] = 0.25 * (um[j] + up[j] + 2.0 * uc[j - 1] + two_h * h_top[i] + fc[j]);
    } else {
        // right edge (i = n-1): ghost u_{n,j} = u_{n-2,j} + 2h * h_right(j)
        for (int j = 1; j < n - 1; ++j)
            out[j] = 0.25 * (2.0 * um[j] + two_h * h_right[j] + uc[j - 1] + uc[j + 1] + fc[j]);
        // Neumann-Neumann corner: both ghosts
        const int j = n - 1;
        out[j] = 0.25 * (2.0 * um[j] + two_h * h_right[j] + 2.0 * uc[j - 1] +
                         two_h * h_top[i] + fc[j]);
    }
}

// Sweeps are cheap at protocol sizes, so one parallel region spans all
// iterations; each thread keeps its own swapped buffer pointers and the
// omp-for barrier separates sweeps.
void iterate_parallel(int n, int iterations, double two_h, double* u, double* un,
                      const double* h2f, const double* h_right, const double* h_top) {
#pragma omp parallel
    {
        double* a = u;
        double* b = un;
        for (int it = 0; it < iterations; ++it) {
#pragma omp for schedule(static)
            for (int i = 1; i < n; ++i) sweep_row(i, n, two_h, a, b, h2f, h_right, h_top);
            std::swap(a, b);
        }
    }
}

void iterate_serial(int n, int iterations, double two_h, double* u, double* un,
                    const double* h2f, const double* h_right, const double* h_top) {
    for (int it = 0; it < iterations; ++it) {
        for (int i = 1; i < n; ++i) sweep_row(i, n, two_h, u, un, h2f, h_right, h_top);
        std::swap(u, un);
    }
}

Field2D solve_impl(const Field2D& f, const BoundarySpec& bc, const SolverConfig& cfg,
                   bool parallel) {
    check_inputs(f, bc);
    cfg.validate();
    const int n = f.grid.n;
    const double h = f.grid.spacing();

    std::vector<double> ping(f.values.size(), 0.0), pong(f.values.size(), 0.0);
    preset_dirichlet(ping.data(), n, bc);
    preset_dirichlet(pong.data(), n, bc);

    std::vector<double> h2f(f.values.size());
    for (size_t k = 0; k < h2f.size(); ++k) h2f[k] = h * h * f.values[k];

    // Below ~128 the per-sweep barrier costs more than the row work; batch
    // solves parallelize across samples instead.
    if (parallel && n >= 128) {
        iterate_parallel(n, cfg.iterations, 2.0 * h, ping.data(), pong.data(), h2f.data(),
                         bc.h_right.values.data(), bc.h_top.values.data());
    } else {
        iterate_serial(n, cfg.iterations, 2.0 * h, ping.data(), pong.data(), h2f.data(),
                       bc.h_right.values.data(), bc.h_top.values.data());
    }

    const double* result = (cfg.iterations % 2 == 1) ? pong.data() : ping.data();
    Field2D out(f.grid);
    out.values.assign(result, result + f.values.size());
    return out;
}

}  // namespace

Field2D jacobi_solve(const Field2D& f, const BoundarySpec& bc, const SolverConfig& cfg) {
    return solve_impl(f, bc, cfg, /*parallel=*/true);
}

Field2D jacobi_solve_reference(const Field2D& f, const BoundarySpec& bc,
                               const SolverConfig& cfg) {
    check_inputs(f, bc);
    cfg.validate();
    const int n = f.grid.n;
    const double h = f.grid.spacing();
    const double two_h = 2.0 * h;

    Field2D u(f.grid), un(f.grid);
    preset_dirichlet(u.values.data(), n, bc);
    preset_dirichlet(un.values.data(), n, bc);

    std::vector<double> h2f(f.values.size());
    for (size_t k = 0; k < h2f.size(); ++k) h2f[k] = h * h * f.values[k];

    const auto& hr = bc.h_right.values;
    const auto& ht = bc.h_top.values;
    for (int it = 0; it < cfg.iterations; ++it) {
        for (int i = 1; i < n - 1; ++i) {
            for (int j = 1; j < n - 1; ++j)
                un.at(i, j) = 0.25 * (u.at(i - 1, j) + u.at(i + 1, j) + u.at(i, j - 1) +
                                      u.at(i, j + 1) + h2f[static_cast<size_t>(i) * n + j]);
            un.at(i, n - 1) =
                0.25 * (u.at(i - 1, n - 1) + u.at(i + 1, n - 1) + 2.0 * u.at(i, n - 2) +
                        two_h * ht[i] + h2f[static_cast<size_t>(i) * n + n - 1]);
        }
        for (int j = 1; j < n - 1; ++j)
            un.at(n - 1, j) =
                0.25 * (2.0 * u.at(n - 2, j) + two_h * hr[j] + u.at(n - 1, j - 1) +
                        u.at(n - 1, j + 1) + h2f[static_cast<size_t>(n - 1) * n + j]);
        un.at(n - 1, n - 1) =
            0.25 * (2.0 * u.at(n - 2, n - 1) + two_h * hr[n - 1] + 2.0 * u.at(n - 1, n - 2) +
                    two_h * ht[n - 1] + h2f.back());
        std::swap(u.values, un.values);
    }
    return u;
}

ResidualStats residual(const Field2D& u, const Field2D& f, const BoundarySpec& bc) {
    bc.check_consistent();
    if (!(u.grid == f.grid) || !(u.grid == bc.grid()))
        throw std::invalid_argument("residual: grid mismatch");
    const int n = u.grid.n;
    const double h = u.grid.spacing();
    const double inv_h2 = 1.0 / (h * h);
    const double inv_2h = 1.0 / (2.0 * h);

    double acc = 0.0;
    for (int i = 1; i < n - 1; ++i) {
        for (int j = 1; j < n - 1; ++j) {
            const double lap = (u.at(i - 1, j) + u.at(i + 1, j) + u.at(i, j - 1) +
                                u.at(i, j + 1) - 4.0 * u.at(i, j)) * inv_h2;
            const double r = -lap - f.at(i, j);
            acc += r * r;
        }
    }
    ResidualStats stats;
    const int interior = (n - 2) * (n - 2);
    stats.interior_rms = std::sqrt(acc / interior);

    // One-sided second-order derivative checks on the Neumann edges; the
    // Neumann-Neumann corner contributes one entry per direction.
    double bacc = 0.0;
    int bcount = 0;
    for (int j = 1; j < n; ++j) {
        const double dx = (3.0 * u.at(n - 1, j) - 4.0 * u.at(n - 2, j) + u.at(n - 3, j)) * inv_2h;
        const double r = dx - bc.h_right.values[j];
        bacc += r * r;
        ++bcount;
    }
    for (int i = 1; i < n; ++i) {
        const double dy = (3.0 * u.at(i, n - 1) - 4.0 * u.at(i, n - 2) + u.at(i, n - 3)) * inv_2h;
        const double r = dy - bc.h_top.values[i];
        bacc += r * r;
        ++bcount;
    }
    stats.boundary_rms = std::sqrt(bacc / bcount);
    return stats;
}

std::vector<Field2D> solve_batch(const std::vector<Field2D>& fs,
                                 const std::vector<BoundarySpec>& bcs,
                                 const SolverConfig& cfg) {
    if (fs.size() != bcs.size()) throw std::invalid_argument("solve_batch: length mismatch");
    std::vector<Field2D> out(fs.size());
#pragma omp parallel for schedule(dynamic)
    for (size_t s = 0; s < fs.size(); ++s)
        out[s] = solve_impl(fs[s], bcs[s], cfg, /*parallel=*/false);
    return out;
}

}  // namespace bpde
