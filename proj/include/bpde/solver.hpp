// Ground-truth generator: fixed-iteration Jacobi sweeps for -lap(u) = f with
// Dirichlet data on the left/bottom edges and Neumann data on the right/top
// edges, imposed through second-order ghost nodes.
#pragma once

#include <vector>

#include "bpde/grid.hpp"

namespace bpde {

struct SolverConfig {
    int iterations = 220;  // initial guess is always zero in the interior

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("SolverConfig: iterations < 1");
    }
};

// Runs exactly cfg.iterations double-buffered sweeps. On large grids the
// rows of a sweep run OpenMP-parallel; every node reads only the previous
// iterate, so the result is bitwise identical for any thread count.
Field2D jacobi_solve(const Field2D& f, const BoundarySpec& bc, const SolverConfig& cfg);

// Plain-loop reference implementation, kept for kernel tests and benchmarks.
// Must agree with jacobi_solve bitwise.
Field2D jacobi_solve_reference(const Field2D& f, const BoundarySpec& bc,
                               const SolverConfig& cfg);

struct ResidualStats {
    double interior_rms = 0.0;  // RMS of (-lap_h u - f) over interior nodes
    double boundary_rms = 0.0;  // RMS of Neumann violations, one-sided 2nd order
};

ResidualStats residual(const Field2D& u, const Field2D& f, const BoundarySpec& bc);

// Elementwise equal to independent jacobi_solve calls; samples run in
// parallel with no shared mutable state.
std::vector<Field2D> solve_batch(const std::vector<Field2D>& fs,
                                 const std::vector<BoundarySpec>& bcs,
                                 const SolverConfig& cfg);

}  // namespace bpde
