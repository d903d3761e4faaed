// In-memory dataset of (forcing, solution, boundary) triples in the float32
// layout that also lives on disk. Generation is stream-deterministic: sample
// i is drawn from stream (stream_base + i) regardless of thread schedule.
#pragma once

#include <cstdint>
#include <vector>

#include "bpde/grid.hpp"
#include "bpde/sampling.hpp"
#include "bpde/solver.hpp"

namespace bpde {

struct DatasetSample {
    std::vector<float> f;         // n^2, row-major
    std::vector<float> u;         // n^2
    std::vector<float> g_left;    // n
    std::vector<float> g_bottom;  // n
    std::vector<float> h_right;   // n
    std::vector<float> h_top;     // n
};

// Everything needed to regenerate a dataset bitwise.
struct DatasetProvenance {
    int grid_n = 64;
    uint64_t master_seed = 7;
    uint64_t stream_base = 0;
    uint32_t count = 0;
    uint32_t iterations = 220;
    BoundaryDistribution boundary;
    ForcingDistribution forcing;
};

struct Dataset {
    Grid grid;
    uint32_t iterations = 220;
    std::vector<DatasetSample> samples;

    int count() const { return static_cast<int>(samples.size()); }

    Field2D forcing_field(int idx) const;
    Field2D solution_field(int idx) const;
    BoundarySpec boundary(int idx) const;
};

// Per sample: boundary edges first (g_left, g_bottom, h_right, h_top), then
// the forcing coefficients, all from stream (stream_base + index); the
// float64 solve is downcast to float32 at store time.
Dataset generate_dataset(const DatasetProvenance& prov);

}  // namespace bpde
