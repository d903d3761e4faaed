#include "bpde/sampling.hpp"

#include <cmath>
#include <numbers>

namespace bpde {

BoundaryDistribution b0_preset() {
    return BoundaryDistribution{{6, 1.0, 0.0}, {6, 0.5, 0.0}, "b0"};
}

BoundaryDistribution b1_preset() {
    return BoundaryDistribution{{6, 1.0, 0.6}, {6, 0.8, 0.2}, "b1"};
}

ForcingDistribution forcing_preset() { return ForcingDistribution{6, 3.0}; }

BoundaryDistribution boundary_preset(const std::string& name) {
    if (name == "b0") return b0_preset();
    if (name == "b1") return b1_preset();
    throw std::invalid_argument("unknown boundary distribution preset: " + name);
}

EdgeFunction sample_edge_function(const EdgeDistribution& dist, SampleRng& rng,
                                  const Grid& grid) {
    dist.validate();
    EdgeFunction edge(grid);
    const int n = grid.n;
    const double h = grid.spacing();
    const double scale = dist.amplitude / std::sqrt(static_cast<double>(dist.bandwidth));
    for (int k = 0; k < n; ++k) edge.values[k] = dist.mean_shift;
    for (int mode = 1; mode <= dist.bandwidth; ++mode) {
        const double a = rng.next_normal();
        const double b = rng.next_normal();
        const double w = 2.0 * std::numbers::pi * mode;
        for (int k = 0; k < n; ++k) {
            const double t = k * h;
            edge.values[k] += scale * (a * std::cos(w * t) + b * std::sin(w * t));
        }
    }
    return edge;
}

BoundarySpec sample_boundary(const BoundaryDistribution& dist, SampleRng& rng,
                             const Grid& grid) {
    dist.validate();
    BoundarySpec spec;
    spec.g_left = sample_edge_function(dist.dirichlet, rng, grid);
    spec.g_bottom = sample_edge_function(dist.dirichlet, rng, grid);
    spec.h_right = sample_edge_function(dist.neumann, rng, grid);
    spec.h_top = sample_edge_function(dist.neumann, rng, grid);
    return spec;
}

// Mode (k,l) carries weight 1/(k^2+l^2): a 1/|k|^2 spectral decay, the
// usual smooth-random-field profile. The normalization makes the expected
// continuous-domain RMS of a sample equal the amplitude exactly:
// E mean(f^2) = (A/Z)^2 * sum w^2 * (1/4 + 1/4) = A^2 with Z^2 = sum w^2 / 2.
double forcing_mode_weight(int k, int l) {
    return 1.0 / (static_cast<double>(k) * k + static_cast<double>(l) * l);
}

double forcing_normalizer(int bandwidth) {
    double sum = 0.0;
    for (int k = 1; k <= bandwidth; ++k)
        for (int l = 1; l <= bandwidth; ++l)
            sum += forcing_mode_weight(k, l) * forcing_mode_weight(k, l);
    return std::sqrt(0.5 * sum);
}

Field2D sample_forcing(const ForcingDistribution& dist, SampleRng& rng, const Grid& grid) {
    dist.validate();
    Field2D f(grid);
    const int n = grid.n;
    const double h = grid.spacing();
    const double base = dist.amplitude / forcing_normalizer(dist.bandwidth);
    // Per-axis factors are precomputed so each (k,l) term costs one outer
    // product instead of n^2 trig calls.
    std::vector<double> sx(n), cx(n), sy(n), cy(n);
    for (int k = 1; k <= dist.bandwidth; ++k) {
        const double wk = std::numbers::pi * k;
        for (int i = 0; i < n; ++i) {
            sx[i] = std::sin(wk * i * h);
            cx[i] = std::cos(wk * i * h);
        }
        for (int l = 1; l <= dist.bandwidth; ++l) {
            const double scale = base * forcing_mode_weight(k, l);
            const double a = rng.next_normal();
            const double b = rng.next_normal();
            const double wl = std::numbers::pi * l;
            for (int j = 0; j < n; ++j) {
                sy[j] = std::sin(wl * j * h);
                cy[j] = std::cos(wl * j * h);
            }
            for (int i = 0; i < n; ++i) {
                const double as = scale * a * sx[i];
                const double bc = scale * b * cx[i];
                double* row = f.values.data() + static_cast<size_t>(i) * n;
                for (int j = 0; j < n; ++j) row[j] += as * sy[j] + bc * cy[j];
            }
        }
    }
    return f;
}

BoundarySpec shift_dirichlet(const BoundarySpec& spec, double delta) {
    spec.check_consistent();
    BoundarySpec out = spec;
    for (auto& v : out.g_left.values) v += delta;
    for (auto& v : out.g_bottom.values) v += delta;
    return out;
}

BoundaryDistribution with_dirichlet_bandwidth(const BoundaryDistribution& dist, int k) {
    if (k < 1) throw std::invalid_argument("with_dirichlet_bandwidth: k < 1");
    BoundaryDistribution out = dist;
    out.dirichlet.bandwidth = k;
    return out;
}

}  // namespace bpde
