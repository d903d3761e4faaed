// Samplers for the boundary-condition and forcing distributions, plus the
// shift/bandwidth modifiers used by the extrapolation sweeps.
#pragma once

#include <string>

#include "bpde/grid.hpp"
#include "bpde/rng.hpp"

namespace bpde {

// Truncated Fourier family for one edge: bandwidth K, amplitude A, mean m.
// With the 1/sqrt(K) normalization the pointwise standard deviation of a
// sampled edge equals A at every node.
struct EdgeDistribution {
    int bandwidth = 6;
    double amplitude = 1.0;
    double mean_shift = 0.0;

    void validate() const {
        if (bandwidth < 1) throw std::invalid_argument("EdgeDistribution: bandwidth < 1");
        if (amplitude < 0.0) throw std::invalid_argument("EdgeDistribution: amplitude < 0");
    }
    bool operator==(const EdgeDistribution&) const = default;
};

// One boundary ensemble: the Dirichlet family drives the left and bottom
// edges, the Neumann family the right and top edges.
struct BoundaryDistribution {
    EdgeDistribution dirichlet;
    EdgeDistribution neumann;
    std::string label;

    void validate() const {
        dirichlet.validate();
        neumann.validate();
    }
    bool operator==(const BoundaryDistribution&) const = default;
};

struct ForcingDistribution {
    int bandwidth = 6;
    double amplitude = 3.0;

    void validate() const {
        if (bandwidth < 1) throw std::invalid_argument("ForcingDistribution: bandwidth < 1");
        if (amplitude < 0.0) throw std::invalid_argument("ForcingDistribution: amplitude < 0");
    }
    bool operator==(const ForcingDistribution&) const = default;
};

BoundaryDistribution b0_preset();
BoundaryDistribution b1_preset();
ForcingDistribution forcing_preset();

// Distribution preset by name ("b0"/"b1"); throws on anything else.
BoundaryDistribution boundary_preset(const std::string& name);

// g(t_k) = m + (A/sqrt(K)) * sum_k [a_k cos(2 pi k t) + b_k sin(2 pi k t)],
// a_k, b_k standard normal, drawn in the order a_1, b_1, a_2, b_2, ...
EdgeFunction sample_edge_function(const EdgeDistribution& dist, SampleRng& rng, const Grid& grid);

// Four independent edges drawn in the fixed order g_left, g_bottom,
// h_right, h_top from the same stream.
BoundarySpec sample_boundary(const BoundaryDistribution& dist, SampleRng& rng, const Grid& grid);

// f(x,y) = (A/Z) * sum_{k,l} w_kl [a_kl sin(pi k x) sin(pi l y)
//                                 + b_kl cos(pi k x) cos(pi l y)],
// with spectral decay w_kl = 1/(k^2+l^2) and Z = sqrt(sum w_kl^2 / 2), so
// the expected RMS of a sample over the domain equals A. Coefficients are
// standard normal, drawn k outer, l inner, a before b.
Field2D sample_forcing(const ForcingDistribution& dist, SampleRng& rng, const Grid& grid);

double forcing_mode_weight(int k, int l);
double forcing_normalizer(int bandwidth);

// Dirichlet edges incremented pointwise by delta; Neumann edges untouched.
BoundarySpec shift_dirichlet(const BoundarySpec& spec, double delta);

// Copy of dist with the Dirichlet bandwidth replaced. Throws for k < 1.
BoundaryDistribution with_dirichlet_bandwidth(const BoundaryDistribution& dist, int k);

}  // namespace bpde
