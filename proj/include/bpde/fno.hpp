// Minimal Fourier Neural Operator with hand-derived reverse-mode gradients
// and an Adam optimizer. Works in float for the training path and in double
// for finite-difference validation.
//
// Architecture: pointwise lifting -> n_layers x [spectral convolution +
// pointwise bypass, GELU between layers] -> two-map pointwise projection
// with GELU in the middle. The spectral convolution keeps the four low-|k|
// corner blocks of the full 2-D DFT, multiplies each retained mode by an
// independent complex width x width matrix, and takes the real part after
// the inverse transform.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bpde/dataset.hpp"
#include "bpde/grid.hpp"
#include "bpde/rng.hpp"

namespace bpde {

struct FnoConfig {
    int in_channels = 6;
    int width = 24;
    int n_layers = 4;
    int modes = 12;  // retained modes per axis per corner block
    int projection_hidden = 64;
    // activation is GELU (tanh form), fixed

    void validate() const;
    void validate_for_grid(const Grid& grid) const;  // 2*modes <= n
    bool operator==(const FnoConfig&) const = default;
};

enum class InputEncoding { kBoundaryAware, kAblated };

inline int encoding_channels(InputEncoding enc) {
    return enc == InputEncoding::kBoundaryAware ? 6 : 3;
}
InputEncoding encoding_for_channels(int channels);
std::string encoding_name(InputEncoding enc);
InputEncoding encoding_from_name(const std::string& name);

// Batched multichannel grid tensor, layout [sample][channel][i][j].
template <typename T>
struct BatchTensor {
    Grid grid;
    int batch = 0;
    int channels = 0;
    std::vector<T> values;

    BatchTensor() = default;
    BatchTensor(Grid g, int b, int c)
        : grid(g), batch(b), channels(c),
          values(static_cast<size_t>(b) * c * g.node_count(), T(0)) {}

    size_t plane() const { return static_cast<size_t>(grid.node_count()); }
    T* at(int b, int c) { return values.data() + (static_cast<size_t>(b) * channels + c) * plane(); }
    const T* at(int b, int c) const {
        return values.data() + (static_cast<size_t>(b) * channels + c) * plane();
    }
};

// Channels: f, x, y and, when boundary-aware, the boundary-value channel
// plus the two location masks. Dirichlet owns the left column and bottom row
// (mixed corners included); Neumann owns the rest of the right column and
// top row. bc may be null (and is ignored) in ablated mode.
template <typename T>
BatchTensor<T> encode_input(const Field2D& f, const BoundarySpec* bc, InputEncoding enc);

// Writes one encoded sample into dst (channels * n^2 values).
template <typename T>
void encode_input_into(const Field2D& f, const BoundarySpec* bc, InputEncoding enc, T* dst);

// All parameters as flat real arrays; spectral weights are stored as
// separate re/im arrays indexed [mode][in][out] with the packed mode index
// q = px*(2*modes) + py over the four corner blocks.
template <typename T>
struct FnoParams {
    struct Layer {
        std::vector<T> spec_re, spec_im;  // (2m)^2 * width * width
        std::vector<T> byp_w, byp_b;      // width*width, width
    };
    std::vector<T> lift_w, lift_b;  // width*in_channels, width
    std::vector<Layer> layers;
    std::vector<T> proj1_w, proj1_b;  // hidden*width, hidden
    std::vector<T> proj2_w, proj2_b;  // hidden, 1

    static FnoParams shaped(const FnoConfig& cfg);
    void set_zero();
};

// Visits every parameter array in the fixed order used for initialization,
// Adam updates and checkpoint serialization.
template <typename T, typename Fn>
void visit_params(FnoParams<T>& p, Fn&& fn) {
    fn("lift.weight", p.lift_w);
    fn("lift.bias", p.lift_b);
    for (size_t l = 0; l < p.layers.size(); ++l) {
        const std::string base = "layers." + std::to_string(l) + ".";
        fn(base + "spectral.re", p.layers[l].spec_re);
        fn(base + "spectral.im", p.layers[l].spec_im);
        fn(base + "bypass.weight", p.layers[l].byp_w);
        fn(base + "bypass.bias", p.layers[l].byp_b);
    }
    fn("projection1.weight", p.proj1_w);
    fn("projection1.bias", p.proj1_b);
    fn("projection2.weight", p.proj2_w);
    fn("projection2.bias", p.proj2_b);
}

template <typename T, typename Fn>
void visit_params(const FnoParams<T>& p, Fn&& fn) {
    visit_params(const_cast<FnoParams<T>&>(p), [&fn](const std::string& name, auto& vec) {
        fn(name, static_cast<const std::vector<T>&>(vec));
    });
}

template <typename T>
struct FnoModel {
    FnoConfig config;
    FnoParams<T> params;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for the pointwise maps,
// uniform(-1/width^2, 1/width^2) for spectral re/im, zero biases; all draws
// come from the dedicated model-init stream in visit_params order.
template <typename T>
FnoModel<T> fno_init(const FnoConfig& cfg, uint64_t master_seed);

// Reusable buffers for forward/backward; contents are owned by the library.
template <typename T>
struct FnoWorkspace {
    std::vector<std::vector<T>> v;         // v[0..L]; v[0] lifted, v[L] last pre-projection
    std::vector<std::vector<T>> z;         // pre-activations for layers 0..L-2
    std::vector<std::vector<T>> xre, xim;  // cached retained spectra, [q][b][c]
    std::vector<T> hidden_pre, pred;
    std::vector<T> yre, yim, gre, gim, gxre, gxim;
    std::vector<T> gz, gv, ghid;
};

// Forward pass for a batch. If ws is provided its buffers are reused and
// left filled for a following backward pass.
template <typename T>
BatchTensor<T> fno_forward(const FnoModel<T>& model, const BatchTensor<T>& input,
                           FnoWorkspace<T>* ws = nullptr);

// Single-sample convenience: encode, run, return the field in double.
template <typename T>
Field2D fno_forward_field(const FnoModel<T>& model, const Field2D& f, const BoundarySpec* bc,
                          InputEncoding enc);

// Straight-line unbatched double-precision forward, kept as the testing
// reference: no channel packing, no OpenMP, real part taken (and imaginary
// residue checked) after each inverse transform.
Field2D fno_forward_reference(const FnoModel<double>& model, const BatchTensor<double>& input,
                              int sample, double* max_imag = nullptr);

// Mean over batch and nodes of (forward - target)^2; fills grads with exact
// reverse-mode derivatives for every parameter array.
template <typename T>
double fno_loss_and_gradients(const FnoModel<T>& model, const BatchTensor<T>& input,
                              const BatchTensor<T>& targets, FnoParams<T>& grads,
                              FnoWorkspace<T>* ws = nullptr);

struct TrainConfig {
    double learning_rate = 8e-4;
    int steps = 2500;
    int batch_size = 12;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 7;
    int log_every = 50;

    void validate() const;
};

template <typename T>
struct AdamState {
    FnoParams<T> m, v;
    int64_t t = 0;

    static AdamState shaped(const FnoConfig& cfg);
};

// Standard Adam with bias correction, applied array-by-array in
// visit_params order; spectral weights update as their two real arrays.
template <typename T>
void adam_step(FnoModel<T>& model, const FnoParams<T>& grads, AdamState<T>& state,
               const TrainConfig& cfg);

struct TrainLogEntry {
    int step = 0;
    double train_mse = 0.0;
    double holdout_rel_l2 = 0.0;  // NaN on steps without a holdout evaluation
};

// Runs exactly cfg.steps Adam steps over batches drawn with replacement
// (order fixed by the batch-order stream of cfg.seed). The holdout set is
// scored every log_every steps and at the final step.
template <typename T>
FnoModel<T> fno_train(const Dataset& data, const Dataset& holdout, InputEncoding enc,
                      const FnoConfig& cfg, const TrainConfig& tcfg,
                      std::vector<TrainLogEntry>* log = nullptr);

// Mean per-sample relative L2 of the model over a dataset slice.
template <typename T>
double holdout_rel_l2(const FnoModel<T>& model, const Dataset& ds, InputEncoding enc);

}  // namespace bpde
