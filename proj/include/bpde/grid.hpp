// Uniform node-centered grid on the unit square and the field/boundary
// containers shared by the samplers, the solver and the model.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bpde {

// n x n nodes on [0,1]^2, spacing h = 1/(n-1). Node (i,j) sits at
// (x,y) = (i*h, j*h); i=0 is the left edge, j=0 the bottom edge.
struct Grid {
    int n = 0;

    Grid() = default;
    explicit Grid(int n_) : n(n_) {
        if (n < 3) throw std::invalid_argument("Grid: n must be >= 3");
    }

    double spacing() const { return 1.0 / (n - 1); }
    int node_count() const { return n * n; }

    bool operator==(const Grid&) const = default;
};

// Scalar field sampled on the grid nodes, row-major with i outer:
// values[i*n + j].
struct Field2D {
    Grid grid;
    std::vector<double> values;

    Field2D() = default;
    explicit Field2D(Grid g) : grid(g), values(static_cast<size_t>(g.node_count()), 0.0) {}

    double& at(int i, int j) { return values[static_cast<size_t>(i) * grid.n + j]; }
    double at(int i, int j) const { return values[static_cast<size_t>(i) * grid.n + j]; }
};

// Function sampled on the n nodes of one edge, t_k = k*h.
struct EdgeFunction {
    Grid grid;
    std::vector<double> values;

    EdgeFunction() = default;
    explicit EdgeFunction(Grid g) : grid(g), values(static_cast<size_t>(g.n), 0.0) {}
};

// Boundary data for one problem instance: Dirichlet values on the left and
// bottom edges, Neumann normal derivatives on the right and top edges.
struct BoundarySpec {
    EdgeFunction g_left;
    EdgeFunction g_bottom;
    EdgeFunction h_right;
    EdgeFunction h_top;

    const Grid& grid() const { return g_left.grid; }

    void check_consistent() const {
        if (!(g_left.grid == g_bottom.grid && g_left.grid == h_right.grid &&
              g_left.grid == h_top.grid))
            throw std::invalid_argument("BoundarySpec: edges on different grids");
    }
};

// x- and y-coordinate fields (x constant along rows of fixed i).
std::pair<Field2D, Field2D> coordinate_channels(const Grid& grid);

// Pointwise a*u + b*v. Throws on grid mismatch.
Field2D field_linear_combine(double a, const Field2D& u, double b, const Field2D& v);

}  // namespace bpde
