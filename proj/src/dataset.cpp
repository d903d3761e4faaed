#include "bpde/dataset.hpp"

namespace bpde {

namespace {

std::vector<float> narrow(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (size_t k = 0; k < v.size(); ++k) out[k] = static_cast<float>(v[k]);
    return out;
}

std::vector<double> widen(const std::vector<float>& v) {
    return {v.begin(), v.end()};
}

}  // namespace

Field2D Dataset::forcing_field(int idx) const {
    Field2D f(grid);
    f.values = widen(samples[idx].f);
    return f;
}

Field2D Dataset::solution_field(int idx) const {
    Field2D u(grid);
    u.values = widen(samples[idx].u);
    return u;
}

BoundarySpec Dataset::boundary(int idx) const {
    BoundarySpec bc;
    for (auto* e : {&bc.g_left, &bc.g_bottom, &bc.h_right, &bc.h_top}) *e = EdgeFunction(grid);
    bc.g_left.values = widen(samples[idx].g_left);
    bc.g_bottom.values = widen(samples[idx].g_bottom);
    bc.h_right.values = widen(samples[idx].h_right);
    bc.h_top.values = widen(samples[idx].h_top);
    return bc;
}

Dataset generate_dataset(const DatasetProvenance& prov) {
    prov.boundary.validate();
    prov.forcing.validate();
    const Grid grid(prov.grid_n);
    const SolverConfig cfg{static_cast<int>(prov.iterations)};
    cfg.validate();

    std::vector<Field2D> fs(prov.count);
    std::vector<BoundarySpec> bcs(prov.count);
    for (uint32_t s = 0; s < prov.count; ++s) {
        SampleRng rng(prov.master_seed, prov.stream_base + s);
        bcs[s] = sample_boundary(prov.boundary, rng, grid);
        fs[s] = sample_forcing(prov.forcing, rng, grid);
    }
    const std::vector<Field2D> us = solve_batch(fs, bcs, cfg);

    Dataset ds;
    ds.grid = grid;
    ds.iterations = prov.iterations;
    ds.samples.resize(prov.count);
    for (uint32_t s = 0; s < prov.count; ++s) {
        DatasetSample& smp = ds.samples[s];
        smp.f = narrow(fs[s].values);
        smp.u = narrow(us[s].values);
        smp.g_left = narrow(bcs[s].g_left.values);
        smp.g_bottom = narrow(bcs[s].g_bottom.values);
        smp.h_right = narrow(bcs[s].h_right.values);
        smp.h_top = narrow(bcs[s].h_top.values);
    }
    return ds;
}

}  // namespace bpde
