// Timing comparison between the plain serial reference kernels and the
// OpenMP production kernels. Also checks that both agree where the contract
// is bitwise.
#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "bpde/dataset.hpp"
#include "bpde/dft.hpp"
#include "bpde/fno.hpp"
#include "bpde/metrics.hpp"
#include "bpde/sampling.hpp"
#include "bpde/solver.hpp"

using namespace bpde;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warmup
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (no OpenMP)\n");
#endif
    const Grid grid(64);
    SampleRng rng(7, 42);
    const BoundarySpec bc = sample_boundary(b0_preset(), rng, grid);
    const Field2D f = sample_forcing(forcing_preset(), rng, grid);
    const SolverConfig cfg{220};

    const Field2D u_ref = jacobi_solve_reference(f, bc, cfg);
    const Field2D u_omp = jacobi_solve(f, bc, cfg);
    bool bitwise = u_ref.values == u_omp.values;
    std::printf("jacobi 220 it n=64       serial %8.2f ms   omp %8.2f ms   bitwise %s\n",
                time_ms([&] { jacobi_solve_reference(f, bc, cfg); }, 5),
                time_ms([&] { jacobi_solve(f, bc, cfg); }, 5), bitwise ? "yes" : "NO");

    std::vector<Field2D> fs(16, f);
    std::vector<BoundarySpec> bcs(16, bc);
    std::printf("jacobi batch of 16       serial %8.2f ms   omp %8.2f ms\n",
                time_ms([&] {
                    for (int s = 0; s < 16; ++s) jacobi_solve_reference(fs[s], bcs[s], cfg);
                }, 3),
                time_ms([&] { solve_batch(fs, bcs, cfg); }, 3));

    FnoConfig mcfg;
    const FnoModel<float> model = fno_init<float>(mcfg, 7);
    BatchTensor<float> input(grid, 12, 6);
    SampleRng vrng(7, 43);
    for (auto& v : input.values) v = static_cast<float>(vrng.next_normal());
    FnoWorkspace<float> ws;
    FnoParams<float> grads = FnoParams<float>::shaped(mcfg);
    BatchTensor<float> target(grid, 12, 1);
    for (auto& v : target.values) v = static_cast<float>(vrng.next_normal());

    FnoModel<double> dmodel{mcfg, FnoParams<double>::shaped(mcfg)};
    visit_params(dmodel.params, [&](const std::string& name, std::vector<double>& vec) {
        visit_params(model.params, [&](const std::string& n2, const std::vector<float>& src) {
            if (n2 == name) vec.assign(src.begin(), src.end());
        });
    });
    BatchTensor<double> dinput(grid, 1, 6);
    for (size_t k = 0; k < dinput.values.size(); ++k)
        dinput.values[k] = static_cast<double>(input.values[k]);

    std::printf("fno forward batch=12     packed %8.2f ms   reference(x12, 1 sample) %8.2f ms\n",
                time_ms([&] { fno_forward(model, input, &ws); }, 5),
                12.0 * time_ms([&] { fno_forward_reference(dmodel, dinput, 0); }, 2));
    std::printf("fno forward+backward     %8.2f ms per step\n",
                time_ms([&] { fno_loss_and_gradients(model, input, target, grads, &ws); }, 5));

    FftPlan<float> plan(64);
    std::vector<std::complex<float>> planes(static_cast<size_t>(384) * 4096);
    std::printf("fft2 64x64 x384          batch  %8.2f ms\n",
                time_ms([&] { fft2_batch(planes.data(), 384, plan, false); }, 5));
    return 0;
}
