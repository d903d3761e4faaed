#include "bpde/fno.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "bpde/dft.hpp"
#include "bpde/metrics.hpp"

namespace bpde {

void FnoConfig::validate() const {
    if (in_channels != 3 && in_channels != 6)
        throw std::invalid_argument("FnoConfig: in_channels must be 3 or 6");
    if (width < 1 || n_layers < 1 || modes < 1 || projection_hidden < 1)
        throw std::invalid_argument("FnoConfig: counts must be >= 1");
}

void FnoConfig::validate_for_grid(const Grid& grid) const {
    validate();
    if (2 * modes > grid.n)
        throw std::invalid_argument("FnoConfig: modes must be <= n/2");
}

InputEncoding encoding_for_channels(int channels) {
    if (channels == 6) return InputEncoding::kBoundaryAware;
    if (channels == 3) return InputEncoding::kAblated;
    throw std::invalid_argument("no encoding with " + std::to_string(channels) + " channels");
}

std::string encoding_name(InputEncoding enc) {
    return enc == InputEncoding::kBoundaryAware ? "boundary_aware" : "ablated";
}

InputEncoding encoding_from_name(const std::string& name) {
    if (name == "boundary_aware" || name == "aware") return InputEncoding::kBoundaryAware;
    if (name == "ablated") return InputEncoding::kAblated;
    throw std::invalid_argument("unknown encoding: " + name);
}

// ---------------------------------------------------------------------------
// encoding

template <typename T>
void encode_input_into(const Field2D& f, const BoundarySpec* bc, InputEncoding enc, T* dst) {
    const int n = f.grid.n;
    const size_t plane = static_cast<size_t>(n) * n;
    const double h = f.grid.spacing();

    T* cf = dst;
    T* cx = dst + plane;
    T* cy = dst + 2 * plane;
    for (int i = 0; i < n; ++i) {
        const T xv = static_cast<T>(i * h);
        for (int j = 0; j < n; ++j) {
            const size_t p = static_cast<size_t>(i) * n + j;
            cf[p] = static_cast<T>(f.values[p]);
            cx[p] = xv;
            cy[p] = static_cast<T>(j * h);
        }
    }
    if (enc == InputEncoding::kAblated) return;

    if (bc == nullptr)
        throw std::invalid_argument("encode_input: boundary data required in boundary_aware mode");
    bc->check_consistent();
    if (!(bc->grid() == f.grid)) throw std::invalid_argument("encode_input: grid mismatch");

    T* cbc = dst + 3 * plane;
    T* cdm = dst + 4 * plane;
    T* cnm = dst + 5 * plane;
    std::memset(cbc, 0, plane * sizeof(T));
    std::memset(cdm, 0, plane * sizeof(T));
    std::memset(cnm, 0, plane * sizeof(T));

    const auto at = [n](int i, int j) { return static_cast<size_t>(i) * n + j; };
    // Dirichlet edges own the left column and bottom row, mixed corners
    // included; interior of the value channel stays zero.
    for (int j = 0; j < n; ++j) {
        cbc[at(0, j)] = static_cast<T>(bc->g_left.values[j]);
        cdm[at(0, j)] = T(1);
    }
    for (int i = 0; i < n; ++i) {
        cbc[at(i, 0)] = static_cast<T>(bc->g_bottom.values[i]);
        cdm[at(i, 0)] = T(1);
    }
    for (int j = 1; j < n; ++j) cbc[at(n - 1, j)] = static_cast<T>(bc->h_right.values[j]);
    for (int i = 1; i < n; ++i) cbc[at(i, n - 1)] = static_cast<T>(bc->h_top.values[i]);
    for (int j = 1; j < n; ++j) cnm[at(n - 1, j)] = T(1);
    for (int i = 1; i < n; ++i) cnm[at(i, n - 1)] = T(1);
    // Corner rules mirror the solver: averaged Dirichlet sample at (0,0),
    // Dirichlet precedence at the mixed corners, averaged derivative at the
    // Neumann-Neumann corner.
    cbc[at(0, 0)] = static_cast<T>(0.5 * (bc->g_left.values[0] + bc->g_bottom.values[0]));
    cbc[at(n - 1, 0)] = static_cast<T>(bc->g_bottom.values[n - 1]);
    cbc[at(0, n - 1)] = static_cast<T>(bc->g_left.values[n - 1]);
    cbc[at(n - 1, n - 1)] =
        static_cast<T>(0.5 * (bc->h_right.values[n - 1] + bc->h_top.values[n - 1]));
}

template <typename T>
BatchTensor<T> encode_input(const Field2D& f, const BoundarySpec* bc, InputEncoding enc) {
    BatchTensor<T> out(f.grid, 1, encoding_channels(enc));
    encode_input_into(f, bc, enc, out.values.data());
    return out;
}

// ---------------------------------------------------------------------------
// parameters

template <typename T>
FnoParams<T> FnoParams<T>::shaped(const FnoConfig& cfg) {
    cfg.validate();
    const size_t w = cfg.width;
    const size_t r = static_cast<size_t>(2 * cfg.modes) * (2 * cfg.modes);
    FnoParams<T> p;
    p.lift_w.assign(w * cfg.in_channels, T(0));
    p.lift_b.assign(w, T(0));
    p.layers.resize(cfg.n_layers);
    for (auto& layer : p.layers) {
        layer.spec_re.assign(r * w * w, T(0));
        layer.spec_im.assign(r * w * w, T(0));
        layer.byp_w.assign(w * w, T(0));
        layer.byp_b.assign(w, T(0));
    }
    p.proj1_w.assign(static_cast<size_t>(cfg.projection_hidden) * w, T(0));
    p.proj1_b.assign(cfg.projection_hidden, T(0));
    p.proj2_w.assign(cfg.projection_hidden, T(0));
    p.proj2_b.assign(1, T(0));
    return p;
}

template <typename T>
void FnoParams<T>::set_zero() {
    visit_params(*this, [](const std::string&, std::vector<T>& v) {
        std::fill(v.begin(), v.end(), T(0));
    });
}

template <typename T>
FnoModel<T> fno_init(const FnoConfig& cfg, uint64_t master_seed) {
    FnoModel<T> model{cfg, FnoParams<T>::shaped(cfg)};
    SampleRng rng(master_seed, streams::kModelInit);
    const double w2 = static_cast<double>(cfg.width) * cfg.width;
    auto fill_uniform = [&rng](std::vector<T>& v, double bound) {
        for (auto& x : v) x = static_cast<T>((2.0 * rng.next_unit() - 1.0) * bound);
    };
    visit_params(model.params, [&](const std::string& name, std::vector<T>& v) {
        if (name.ends_with(".bias")) return;  // biases stay zero
        if (name.find("spectral") != std::string::npos) {
            fill_uniform(v, 1.0 / w2);
        } else if (name == "lift.weight") {
            fill_uniform(v, 1.0 / std::sqrt(static_cast<double>(cfg.in_channels)));
        } else if (name == "projection2.weight") {
            fill_uniform(v, 1.0 / std::sqrt(static_cast<double>(cfg.projection_hidden)));
        } else {  // bypass and projection1: fan_in = width
            fill_uniform(v, 1.0 / std::sqrt(static_cast<double>(cfg.width)));
        }
    });
    return model;
}

// ---------------------------------------------------------------------------
// kernels

namespace {

// tanh-form GELU (the standard approximation), with tanh built on exp so
// the whole activation is branch-free arithmetic: identical results per
// element no matter how loops are chunked or vectorized.
template <typename T>
inline T tanh_via_exp(T z) {
    return T(1) - T(2) / (std::exp(T(2) * z) + T(1));
}

template <typename T>
inline T gelu(T x) {
    constexpr T c = T(0.7978845608028654);  // sqrt(2/pi)
    constexpr T a = T(0.044715);
    return T(0.5) * x * (T(1) + tanh_via_exp(c * (x + a * x * x * x)));
}

template <typename T>
inline T gelu_grad(T x) {
    constexpr T c = T(0.7978845608028654);
    constexpr T a = T(0.044715);
    const T t = tanh_via_exp(c * (x + a * x * x * x));
    const T inner = c * (T(1) + T(3) * a * x * x);
    return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * inner;
}

// out[b][o][.] (+)= sum_i W[o][i] * in[b][i][.] (+ bias[o])
template <typename T>
void pointwise_affine(int batch, int cin, int cout, size_t plane, const T* W, const T* bias,
                      const T* in, T* out, bool accumulate) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < batch; ++b) {
        for (int o = 0; o < cout; ++o) {
            const T* src = in + static_cast<size_t>(b) * cin * plane;
            T* dst = out + (static_cast<size_t>(b) * cout + o) * plane;
            const T bv = bias ? bias[o] : T(0);
            if (accumulate) {
                if (bv != T(0))
                    for (size_t p = 0; p < plane; ++p) dst[p] += bv;
            } else {
                for (size_t p = 0; p < plane; ++p) dst[p] = bv;
            }
            for (int i = 0; i < cin; ++i) {
                const T wv = W[static_cast<size_t>(o) * cin + i];
                const T* s = src + static_cast<size_t>(i) * plane;
                for (size_t p = 0; p < plane; ++p) dst[p] += wv * s[p];
            }
        }
    }
}

// Eight-lane dot product; the lane split is part of the defined summation
// order, so results do not depend on thread count.
template <typename T>
T dot_lanes(const T* a, const T* b, size_t len) {
    T acc[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
    size_t p = 0;
    for (; p + 8 <= len; p += 8)
        for (int l = 0; l < 8; ++l) acc[l] += a[p + l] * b[p + l];
    for (; p < len; ++p) acc[p % 8] += a[p] * b[p];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

// gW[o][i] = sum_b dot(gout[b][o], in[b][i]); gB[o] = sum_{b,p} gout[b][o][p]
template <typename T>
void pointwise_grad_weights(int batch, int cin, int cout, size_t plane, const T* gout,
                            const T* in, T* gW, T* gB) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int o = 0; o < cout; ++o) {
        for (int i = 0; i < cin; ++i) {
            T acc(0);
            for (int b = 0; b < batch; ++b)
                acc += dot_lanes(gout + (static_cast<size_t>(b) * cout + o) * plane,
                                 in + (static_cast<size_t>(b) * cin + i) * plane, plane);
            gW[static_cast<size_t>(o) * cin + i] = acc;
        }
    }
#pragma omp parallel for schedule(static)
    for (int o = 0; o < cout; ++o) {
        T acc(0);
        for (int b = 0; b < batch; ++b) {
            const T* g = gout + (static_cast<size_t>(b) * cout + o) * plane;
            T lane[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
            size_t p = 0;
            for (; p + 8 <= plane; p += 8)
                for (int l = 0; l < 8; ++l) lane[l] += g[p + l];
            for (; p < plane; ++p) lane[p % 8] += g[p];
            acc += ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
                   ((lane[4] + lane[5]) + (lane[6] + lane[7]));
        }
        gB[o] = acc;
    }
}

// gin[b][i][.] = sum_o W[o][i] * gout[b][o][.]
template <typename T>
void pointwise_grad_input(int batch, int cin, int cout, size_t plane, const T* W,
                          const T* gout, T* gin) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < batch; ++b) {
        for (int i = 0; i < cin; ++i) {
            T* dst = gin + (static_cast<size_t>(b) * cin + i) * plane;
            for (size_t p = 0; p < plane; ++p) dst[p] = T(0);
            for (int o = 0; o < cout; ++o) {
                const T wv = W[static_cast<size_t>(o) * cin + i];
                const T* g = gout + (static_cast<size_t>(b) * cout + o) * plane;
                for (size_t p = 0; p < plane; ++p) dst[p] += wv * g[p];
            }
        }
    }
}

// Retained-mode bookkeeping: packed index q = px*(2m)+py enumerates the four
// low-|k| corner blocks of the full DFT.
struct ModeTable {
    int count = 0;
    std::vector<int> k;     // flat index kx*n + ky
    std::vector<int> kneg;  // flat index of (-kx mod n, -ky mod n)

    ModeTable(int n, int m) {
        const int two_m = 2 * m;
        count = two_m * two_m;
        k.resize(count);
        kneg.resize(count);
        for (int px = 0; px < two_m; ++px) {
            const int kx = px < m ? px : n - two_m + px;
            const int nkx = (n - kx) % n;
            for (int py = 0; py < two_m; ++py) {
                const int ky = py < m ? py : n - two_m + py;
                const int nky = (n - ky) % n;
                k[px * two_m + py] = kx * n + ky;
                kneg[px * two_m + py] = nkx * n + nky;
            }
        }
    }
};

template <typename T>
std::vector<std::complex<T>>& tl_plane(size_t plane) {
    static thread_local std::vector<std::complex<T>> buf;
    buf.resize(plane);
    return buf;
}

// FFT of real channels two at a time (as re/im of one complex transform),
// Hermitian-split at the retained modes into SoA buffers laid out [q][b][c].
template <typename T>
void fft_extract_retained(int batch, int width, size_t plane, const FftPlan<T>& fplan,
                          const ModeTable& modes, const T* fields, T* xre, T* xim) {
    const int pairs = (width + 1) / 2;
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < batch; ++b) {
        for (int cp = 0; cp < pairs; ++cp) {
            const int ca = 2 * cp;
            const int cb = ca + 1;
            auto& buf = tl_plane<T>(plane);
            const T* fa = fields + (static_cast<size_t>(b) * width + ca) * plane;
            if (cb < width) {
                const T* fb = fields + (static_cast<size_t>(b) * width + cb) * plane;
                for (size_t p = 0; p < plane; ++p) buf[p] = {fa[p], fb[p]};
            } else {
                for (size_t p = 0; p < plane; ++p) buf[p] = {fa[p], T(0)};
            }
            fft2(buf.data(), fplan, false);
            for (int q = 0; q < modes.count; ++q) {
                const std::complex<T> zk = buf[modes.k[q]];
                const std::complex<T> zn = buf[modes.kneg[q]];
                const size_t base = (static_cast<size_t>(q) * batch + b) * width;
                if (cb < width) {
                    xre[base + ca] = T(0.5) * (zk.real() + zn.real());
                    xim[base + ca] = T(0.5) * (zk.imag() - zn.imag());
                    xre[base + cb] = T(0.5) * (zk.imag() + zn.imag());
                    xim[base + cb] = T(0.5) * (zn.real() - zk.real());
                } else {
                    xre[base + ca] = zk.real();
                    xim[base + ca] = zk.imag();
                }
            }
        }
    }
}

// Inverse of the step above: scatter retained spectra (Hermitianized, two
// channels packed per transform), inverse-transform, and write or accumulate
// the two real fields.
template <typename T>
void ifft_scatter_retained(int batch, int width, size_t plane, const FftPlan<T>& fplan,
                           const ModeTable& modes, const T* yre, const T* yim, T* fields,
                           bool accumulate) {
    const int pairs = (width + 1) / 2;
#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < batch; ++b) {
        for (int cp = 0; cp < pairs; ++cp) {
            const int ca = 2 * cp;
            const int cb = ca + 1;
            auto& buf = tl_plane<T>(plane);
            std::fill(buf.begin(), buf.end(), std::complex<T>{});
            for (int q = 0; q < modes.count; ++q) {
                const size_t base = (static_cast<size_t>(q) * batch + b) * width;
                const T ar = yre[base + ca], ai = yim[base + ca];
                T br = T(0), bi = T(0);
                if (cb < width) {
                    br = yre[base + cb];
                    bi = yim[base + cb];
                }
                buf[modes.k[q]] += std::complex<T>(T(0.5) * (ar - bi), T(0.5) * (ai + br));
                buf[modes.kneg[q]] += std::complex<T>(T(0.5) * (ar + bi), T(0.5) * (br - ai));
            }
            fft2(buf.data(), fplan, true);
            T* fa = fields + (static_cast<size_t>(b) * width + ca) * plane;
            if (accumulate) {
                for (size_t p = 0; p < plane; ++p) fa[p] += buf[p].real();
            } else {
                for (size_t p = 0; p < plane; ++p) fa[p] = buf[p].real();
            }
            if (cb < width) {
                T* fb = fields + (static_cast<size_t>(b) * width + cb) * plane;
                if (accumulate) {
                    for (size_t p = 0; p < plane; ++p) fb[p] += buf[p].imag();
                } else {
                    for (size_t p = 0; p < plane; ++p) fb[p] = buf[p].imag();
                }
            }
        }
    }
}

// Y[q][b][o] = sum_i X[q][b][i] * W[q][i][o]
template <typename T>
void spectral_apply(int batch, int width, const ModeTable& modes, const T* xre, const T* xim,
                    const T* wre, const T* wim, T* yre, T* yim) {
#pragma omp parallel for schedule(static)
    for (int q = 0; q < modes.count; ++q) {
        const size_t wbase = static_cast<size_t>(q) * width * width;
        for (int b = 0; b < batch; ++b) {
            const size_t xbase = (static_cast<size_t>(q) * batch + b) * width;
            T* yr = yre + xbase;
            T* yi = yim + xbase;
            for (int o = 0; o < width; ++o) {
                yr[o] = T(0);
                yi[o] = T(0);
            }
            for (int i = 0; i < width; ++i) {
                const T xr = xre[xbase + i];
                const T xi = xim[xbase + i];
                const T* wr = wre + wbase + static_cast<size_t>(i) * width;
                const T* wi = wim + wbase + static_cast<size_t>(i) * width;
                for (int o = 0; o < width; ++o) {
                    yr[o] += xr * wr[o] - xi * wi[o];
                    yi[o] += xr * wi[o] + xi * wr[o];
                }
            }
        }
    }
}

// gW[q][i][o] += (1/plane) * sum_b G[q][b][o] * conj(X[q][b][i])
template <typename T>
void spectral_grad_weights(int batch, int width, size_t plane, const ModeTable& modes,
                           const T* gre, const T* gim, const T* xre, const T* xim, T* gwre,
                           T* gwim) {
    const T inv_plane = static_cast<T>(1.0 / static_cast<double>(plane));
#pragma omp parallel for schedule(static)
    for (int q = 0; q < modes.count; ++q) {
        const size_t wbase = static_cast<size_t>(q) * width * width;
        for (int b = 0; b < batch; ++b) {
            const size_t xbase = (static_cast<size_t>(q) * batch + b) * width;
            for (int i = 0; i < width; ++i) {
                const T xr = xre[xbase + i] * inv_plane;
                const T xi = xim[xbase + i] * inv_plane;
                T* wr = gwre + wbase + static_cast<size_t>(i) * width;
                T* wi = gwim + wbase + static_cast<size_t>(i) * width;
                const T* gr = gre + xbase;
                const T* gi = gim + xbase;
                for (int o = 0; o < width; ++o) {
                    wr[o] += gr[o] * xr + gi[o] * xi;
                    wi[o] += gi[o] * xr - gr[o] * xi;
                }
            }
        }
    }
}

// gX[q][b][i] = sum_o G[q][b][o] * conj(W[q][i][o])
template <typename T>
void spectral_grad_input(int batch, int width, const ModeTable& modes, const T* gre,
                         const T* gim, const T* wre, const T* wim, T* gxre, T* gxim) {
#pragma omp parallel for schedule(static)
    for (int q = 0; q < modes.count; ++q) {
        const size_t wbase = static_cast<size_t>(q) * width * width;
        for (int b = 0; b < batch; ++b) {
            const size_t xbase = (static_cast<size_t>(q) * batch + b) * width;
            const T* gr = gre + xbase;
            const T* gi = gim + xbase;
            for (int i = 0; i < width; ++i) {
                const T* wr = wre + wbase + static_cast<size_t>(i) * width;
                const T* wi = wim + wbase + static_cast<size_t>(i) * width;
                T ar0(0), ar1(0), ai0(0), ai1(0);
                int o = 0;
                for (; o + 2 <= width; o += 2) {
                    ar0 += gr[o] * wr[o] + gi[o] * wi[o];
                    ar1 += gr[o + 1] * wr[o + 1] + gi[o + 1] * wi[o + 1];
                    ai0 += gi[o] * wr[o] - gr[o] * wi[o];
                    ai1 += gi[o + 1] * wr[o + 1] - gr[o + 1] * wi[o + 1];
                }
                for (; o < width; ++o) {
                    ar0 += gr[o] * wr[o] + gi[o] * wi[o];
                    ai0 += gi[o] * wr[o] - gr[o] * wi[o];
                }
                gxre[xbase + i] = ar0 + ar1;
                gxim[xbase + i] = ai0 + ai1;
            }
        }
    }
}

template <typename T>
void resize_workspace(FnoWorkspace<T>& ws, const FnoConfig& cfg, const Grid& grid, int batch) {
    const size_t plane = static_cast<size_t>(grid.node_count());
    const size_t vb = static_cast<size_t>(batch) * cfg.width * plane;
    const size_t rbw = static_cast<size_t>(4 * cfg.modes * cfg.modes) * batch * cfg.width;
    const int L = cfg.n_layers;
    ws.v.resize(L + 1);
    for (auto& t : ws.v) t.resize(vb);
    ws.z.resize(L > 1 ? L - 1 : 0);
    for (auto& t : ws.z) t.resize(vb);
    ws.xre.resize(L);
    ws.xim.resize(L);
    for (int l = 0; l < L; ++l) {
        ws.xre[l].resize(rbw);
        ws.xim[l].resize(rbw);
    }
    ws.hidden_pre.resize(static_cast<size_t>(batch) * cfg.projection_hidden * plane);
    ws.ghid.resize(ws.hidden_pre.size());
    ws.pred.resize(static_cast<size_t>(batch) * plane);
    ws.yre.resize(rbw);
    ws.yim.resize(rbw);
    ws.gre.resize(rbw);
    ws.gim.resize(rbw);
    ws.gxre.resize(rbw);
    ws.gxim.resize(rbw);
    ws.gz.resize(vb);
    ws.gv.resize(vb);
}

template <typename T>
void forward_impl(const FnoModel<T>& model, const BatchTensor<T>& input, FnoWorkspace<T>& ws) {
    const FnoConfig& cfg = model.config;
    cfg.validate_for_grid(input.grid);
    if (input.channels != cfg.in_channels)
        throw std::invalid_argument("fno_forward: channel count mismatch");

    const int n = input.grid.n;
    const size_t plane = input.plane();
    const int B = input.batch;
    const int w = cfg.width;
    const int L = cfg.n_layers;
    resize_workspace(ws, cfg, input.grid, B);
    const FftPlan<T> fplan(n);
    const ModeTable modes(n, cfg.modes);

    pointwise_affine(B, cfg.in_channels, w, plane, model.params.lift_w.data(),
                     model.params.lift_b.data(), input.values.data(), ws.v[0].data(), false);

    for (int l = 0; l < L; ++l) {
        const auto& layer = model.params.layers[l];
        T* zbuf = (l < L - 1) ? ws.z[l].data() : ws.v[L].data();
        fft_extract_retained(B, w, plane, fplan, modes, ws.v[l].data(), ws.xre[l].data(),
                             ws.xim[l].data());
        spectral_apply(B, w, modes, ws.xre[l].data(), ws.xim[l].data(), layer.spec_re.data(),
                       layer.spec_im.data(), ws.yre.data(), ws.yim.data());
        ifft_scatter_retained(B, w, plane, fplan, modes, ws.yre.data(), ws.yim.data(), zbuf,
                              false);
        pointwise_affine(B, w, w, plane, layer.byp_w.data(), layer.byp_b.data(),
                         ws.v[l].data(), zbuf, true);
        if (l < L - 1) {
            T* next = ws.v[l + 1].data();
            const T* src = zbuf;
#pragma omp parallel for schedule(static)
            for (size_t k = 0; k < ws.v[l + 1].size(); ++k) next[k] = gelu(src[k]);
        }
    }

    pointwise_affine(B, w, cfg.projection_hidden, plane, model.params.proj1_w.data(),
                     model.params.proj1_b.data(), ws.v[L].data(), ws.hidden_pre.data(), false);
    T* hact = ws.ghid.data();  // holds the activated hidden until backward reuses it
    const T* hpre = ws.hidden_pre.data();
#pragma omp parallel for schedule(static)
    for (size_t k = 0; k < ws.hidden_pre.size(); ++k) hact[k] = gelu(hpre[k]);
    pointwise_affine(B, cfg.projection_hidden, 1, plane, model.params.proj2_w.data(),
                     model.params.proj2_b.data(), hact, ws.pred.data(), false);

    for (T vv : ws.pred)
        if (!std::isfinite(static_cast<double>(vv)))
            throw std::runtime_error("fno_forward: non-finite activation in output");
}

}  // namespace

template <typename T>
BatchTensor<T> fno_forward(const FnoModel<T>& model, const BatchTensor<T>& input,
                           FnoWorkspace<T>* ws) {
    FnoWorkspace<T> local;
    FnoWorkspace<T>& w = ws ? *ws : local;
    forward_impl(model, input, w);
    BatchTensor<T> out(input.grid, input.batch, 1);
    out.values.assign(w.pred.begin(), w.pred.end());
    return out;
}

template <typename T>
Field2D fno_forward_field(const FnoModel<T>& model, const Field2D& f, const BoundarySpec* bc,
                          InputEncoding enc) {
    if (encoding_channels(enc) != model.config.in_channels)
        throw std::invalid_argument("fno_forward_field: encoding does not match model");
    const BatchTensor<T> in = encode_input<T>(f, bc, enc);
    const BatchTensor<T> out = fno_forward(model, in);
    Field2D field(f.grid);
    for (size_t k = 0; k < field.values.size(); ++k)
        field.values[k] = static_cast<double>(out.values[k]);
    return field;
}

template <typename T>
double fno_loss_and_gradients(const FnoModel<T>& model, const BatchTensor<T>& input,
                              const BatchTensor<T>& targets, FnoParams<T>& grads,
                              FnoWorkspace<T>* ws) {
    if (targets.batch != input.batch || targets.channels != 1 || !(targets.grid == input.grid))
        throw std::invalid_argument("fno_loss_and_gradients: target shape mismatch");
    FnoWorkspace<T> local;
    FnoWorkspace<T>& w = ws ? *ws : local;
    forward_impl(model, input, w);

    const FnoConfig& cfg = model.config;
    const int B = input.batch;
    const int wd = cfg.width;
    const int L = cfg.n_layers;
    const size_t plane = input.plane();
    const FftPlan<T> fplan(input.grid.n);
    const ModeTable modes(input.grid.n, cfg.modes);

    grads.set_zero();

    double loss = 0.0;
    for (size_t k = 0; k < w.pred.size(); ++k) {
        const double d = static_cast<double>(w.pred[k]) - static_cast<double>(targets.values[k]);
        loss += d * d;
    }
    const double denom = static_cast<double>(B) * static_cast<double>(plane);
    loss /= denom;

    // d loss / d pred, written over the prediction buffer
    const T scale = static_cast<T>(2.0 / denom);
#pragma omp parallel for schedule(static)
    for (size_t k = 0; k < w.pred.size(); ++k)
        w.pred[k] = scale * (w.pred[k] - targets.values[k]);

    // projection head backward; w.ghid currently holds the activated hidden
    pointwise_grad_weights(B, cfg.projection_hidden, 1, plane, w.pred.data(), w.ghid.data(),
                           grads.proj2_w.data(), grads.proj2_b.data());
    pointwise_grad_input(B, cfg.projection_hidden, 1, plane, model.params.proj2_w.data(),
                         w.pred.data(), w.ghid.data());
    {
        T* gh = w.ghid.data();
        const T* hpre = w.hidden_pre.data();
#pragma omp parallel for schedule(static)
        for (size_t k = 0; k < w.ghid.size(); ++k) gh[k] *= gelu_grad(hpre[k]);
    }
    pointwise_grad_weights(B, wd, cfg.projection_hidden, plane, w.ghid.data(), w.v[L].data(),
                           grads.proj1_w.data(), grads.proj1_b.data());
    pointwise_grad_input(B, wd, cfg.projection_hidden, plane, model.params.proj1_w.data(),
                         w.ghid.data(), w.gv.data());

    for (int l = L - 1; l >= 0; --l) {
        const auto& layer = model.params.layers[l];
        auto& glayer = grads.layers[l];
        // gradient w.r.t. the pre-activation z_l
        if (l == L - 1) {
            std::copy(w.gv.begin(), w.gv.end(), w.gz.begin());
        } else {
            const T* zpre = w.z[l].data();
            const T* gv = w.gv.data();
            T* gz = w.gz.data();
#pragma omp parallel for schedule(static)
            for (size_t k = 0; k < w.gz.size(); ++k) gz[k] = gv[k] * gelu_grad(zpre[k]);
        }
        pointwise_grad_weights(B, wd, wd, plane, w.gz.data(), w.v[l].data(),
                               glayer.byp_w.data(), glayer.byp_b.data());
        pointwise_grad_input(B, wd, wd, plane, layer.byp_w.data(), w.gz.data(), w.gv.data());

        fft_extract_retained(B, wd, plane, fplan, modes, w.gz.data(), w.gre.data(),
                             w.gim.data());
        spectral_grad_weights(B, wd, plane, modes, w.gre.data(), w.gim.data(),
                              w.xre[l].data(), w.xim[l].data(), glayer.spec_re.data(),
                              glayer.spec_im.data());
        spectral_grad_input(B, wd, modes, w.gre.data(), w.gim.data(), layer.spec_re.data(),
                            layer.spec_im.data(), w.gxre.data(), w.gxim.data());
        ifft_scatter_retained(B, wd, plane, fplan, modes, w.gxre.data(), w.gxim.data(),
                              w.gv.data(), true);
    }

    pointwise_grad_weights(B, cfg.in_channels, wd, plane, w.gv.data(), input.values.data(),
                           grads.lift_w.data(), grads.lift_b.data());
    return loss;
}

// ---------------------------------------------------------------------------
// reference forward (double, unbatched, unpacked)

Field2D fno_forward_reference(const FnoModel<double>& model, const BatchTensor<double>& input,
                              int sample, double* max_imag) {
    const FnoConfig& cfg = model.config;
    cfg.validate_for_grid(input.grid);
    const int n = input.grid.n;
    const size_t plane = input.plane();
    const int w = cfg.width;
    const FftPlan<double> fplan(n);
    const ModeTable modes(n, cfg.modes);
    double imag_peak = 0.0;

    std::vector<std::vector<double>> v(w, std::vector<double>(plane, 0.0));
    for (int o = 0; o < w; ++o) {
        for (size_t p = 0; p < plane; ++p) {
            double acc = model.params.lift_b[o];
            for (int i = 0; i < cfg.in_channels; ++i)
                acc += model.params.lift_w[static_cast<size_t>(o) * cfg.in_channels + i] *
                       input.at(sample, i)[p];
            v[o][p] = acc;
        }
    }

    std::vector<std::vector<std::complex<double>>> spectra(w);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const auto& layer = model.params.layers[l];
        for (int c = 0; c < w; ++c) {
            spectra[c].assign(plane, {});
            for (size_t p = 0; p < plane; ++p) spectra[c][p] = {v[c][p], 0.0};
            fft2(spectra[c].data(), fplan, false);
        }
        std::vector<std::vector<double>> z(w, std::vector<double>(plane, 0.0));
        std::vector<std::complex<double>> yhat(plane);
        for (int o = 0; o < w; ++o) {
            // Symmetrization happens spectrally: H(k) = (Y(k)+conj(Y(-k)))/2
            // is the exact Hermitian part, so the inverse transform is real
            // up to roundoff and the residue below is a consistency check.
            std::fill(yhat.begin(), yhat.end(), std::complex<double>{});
            for (int q = 0; q < modes.count; ++q) {
                std::complex<double> acc{};
                for (int i = 0; i < w; ++i) {
                    const size_t wi = (static_cast<size_t>(q) * w + i) * w + o;
                    acc += spectra[i][modes.k[q]] *
                           std::complex<double>(layer.spec_re[wi], layer.spec_im[wi]);
                }
                yhat[modes.k[q]] += 0.5 * acc;
                yhat[modes.kneg[q]] += 0.5 * std::conj(acc);
            }
            fft2(yhat.data(), fplan, true);
            for (size_t p = 0; p < plane; ++p) {
                imag_peak = std::max(imag_peak, std::abs(yhat[p].imag()));
                z[o][p] = yhat[p].real();
            }
            for (size_t p = 0; p < plane; ++p) {
                double acc = layer.byp_b[o];
                for (int i = 0; i < w; ++i)
                    acc += layer.byp_w[static_cast<size_t>(o) * w + i] * v[i][p];
                z[o][p] += acc;
            }
        }
        for (int c = 0; c < w; ++c)
            for (size_t p = 0; p < plane; ++p)
                v[c][p] = (l < cfg.n_layers - 1) ? gelu(z[c][p]) : z[c][p];
    }

    Field2D out(input.grid);
    std::vector<double> hidden(cfg.projection_hidden);
    for (size_t p = 0; p < plane; ++p) {
        for (int o = 0; o < cfg.projection_hidden; ++o) {
            double acc = model.params.proj1_b[o];
            for (int i = 0; i < w; ++i)
                acc += model.params.proj1_w[static_cast<size_t>(o) * w + i] * v[i][p];
            hidden[o] = gelu(acc);
        }
        double acc = model.params.proj2_b[0];
        for (int i = 0; i < cfg.projection_hidden; ++i) acc += model.params.proj2_w[i] * hidden[i];
        out.values[p] = acc;
    }
    if (max_imag) *max_imag = imag_peak;
    return out;
}

// ---------------------------------------------------------------------------
// optimizer and training loop

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate <= 0");
    if (steps < 0) throw std::invalid_argument("TrainConfig: steps < 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size < 1");
    if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
        throw std::invalid_argument("TrainConfig: betas must lie in (0,1)");
    if (adam_eps <= 0.0) throw std::invalid_argument("TrainConfig: adam_eps <= 0");
    if (log_every < 1) throw std::invalid_argument("TrainConfig: log_every < 1");
}

template <typename T>
AdamState<T> AdamState<T>::shaped(const FnoConfig& cfg) {
    return AdamState<T>{FnoParams<T>::shaped(cfg), FnoParams<T>::shaped(cfg), 0};
}

template <typename T>
void adam_step(FnoModel<T>& model, const FnoParams<T>& grads, AdamState<T>& state,
               const TrainConfig& cfg) {
    state.t += 1;
    const T lr = static_cast<T>(cfg.learning_rate);
    const T b1 = static_cast<T>(cfg.adam_beta1);
    const T b2 = static_cast<T>(cfg.adam_beta2);
    const T eps = static_cast<T>(cfg.adam_eps);
    const T c1 = static_cast<T>(1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t)));
    const T c2 = static_cast<T>(1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t)));

    std::vector<std::vector<T>*> theta, m, v;
    std::vector<const std::vector<T>*> g;
    visit_params(model.params, [&](const std::string&, std::vector<T>& x) { theta.push_back(&x); });
    visit_params(grads, [&](const std::string&, const std::vector<T>& x) { g.push_back(&x); });
    visit_params(state.m, [&](const std::string&, std::vector<T>& x) { m.push_back(&x); });
    visit_params(state.v, [&](const std::string&, std::vector<T>& x) { v.push_back(&x); });

    for (size_t a = 0; a < theta.size(); ++a) {
        T* th = theta[a]->data();
        const T* gr = g[a]->data();
        T* mm = m[a]->data();
        T* vv = v[a]->data();
        const size_t len = theta[a]->size();
        if (g[a]->size() != len) throw std::invalid_argument("adam_step: gradient shape mismatch");
#pragma omp parallel for schedule(static)
        for (size_t k = 0; k < len; ++k) {
            mm[k] = b1 * mm[k] + (T(1) - b1) * gr[k];
            vv[k] = b2 * vv[k] + (T(1) - b2) * gr[k] * gr[k];
            const T mhat = mm[k] / c1;
            const T vhat = vv[k] / c2;
            th[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

namespace {

template <typename T>
void assemble_batch(const Dataset& ds, const std::vector<int>& indices, InputEncoding enc,
                    BatchTensor<T>& input, BatchTensor<T>& target) {
    const int channels = encoding_channels(enc);
    const size_t plane = static_cast<size_t>(ds.grid.node_count());
    const int B = static_cast<int>(indices.size());
    if (input.batch != B || input.channels != channels || !(input.grid == ds.grid)) {
        input = BatchTensor<T>(ds.grid, B, channels);
        target = BatchTensor<T>(ds.grid, B, 1);
    }
    for (int b = 0; b < B; ++b) {
        const Field2D f = ds.forcing_field(indices[b]);
        if (enc == InputEncoding::kBoundaryAware) {
            const BoundarySpec bc = ds.boundary(indices[b]);
            encode_input_into(f, &bc, enc, input.at(b, 0));
        } else {
            encode_input_into(f, static_cast<const BoundarySpec*>(nullptr), enc, input.at(b, 0));
        }
        const auto& u = ds.samples[indices[b]].u;
        T* t = target.at(b, 0);
        for (size_t p = 0; p < plane; ++p) t[p] = static_cast<T>(u[p]);
    }
}

}  // namespace

template <typename T>
double holdout_rel_l2(const FnoModel<T>& model, const Dataset& ds, InputEncoding enc) {
    if (ds.count() == 0) throw std::invalid_argument("holdout_rel_l2: empty dataset");
    std::vector<int> idx(ds.count());
    for (int i = 0; i < ds.count(); ++i) idx[i] = i;
    BatchTensor<T> input, target;
    assemble_batch(ds, idx, enc, input, target);
    const BatchTensor<T> pred = fno_forward(model, input);
    double sum = 0.0;
    int used = 0;
    const size_t plane = input.plane();
    for (int b = 0; b < ds.count(); ++b) {
        const double e = relative_l2(std::span<const T>(pred.at(b, 0), plane),
                                     std::span<const T>(target.at(b, 0), plane));
        if (std::isnan(e)) continue;  // zero-norm truth: skip
        sum += e;
        ++used;
    }
    return used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
}

template <typename T>
FnoModel<T> fno_train(const Dataset& data, const Dataset& holdout, InputEncoding enc,
                      const FnoConfig& cfg, const TrainConfig& tcfg,
                      std::vector<TrainLogEntry>* log) {
    tcfg.validate();
    if (data.count() == 0) throw std::invalid_argument("fno_train: empty dataset");
    FnoConfig mcfg = cfg;
    mcfg.in_channels = encoding_channels(enc);
    mcfg.validate_for_grid(data.grid);

    FnoModel<T> model = fno_init<T>(mcfg, tcfg.seed);
    AdamState<T> state = AdamState<T>::shaped(mcfg);
    FnoParams<T> grads = FnoParams<T>::shaped(mcfg);
    FnoWorkspace<T> ws;
    SampleRng batch_rng(tcfg.seed, streams::kBatchOrder);

    BatchTensor<T> input, target;
    std::vector<int> indices(tcfg.batch_size);
    for (int step = 1; step <= tcfg.steps; ++step) {
        for (auto& ix : indices)
            ix = static_cast<int>(batch_rng.next_below(static_cast<uint64_t>(data.count())));
        assemble_batch(data, indices, enc, input, target);
        const double loss = fno_loss_and_gradients(model, input, target, grads, &ws);
        adam_step(model, grads, state, tcfg);
        if (log) {
            const bool score = holdout.count() > 0 &&
                               ((step - 1) % tcfg.log_every == 0 || step == tcfg.steps);
            TrainLogEntry entry;
            entry.step = step;
            entry.train_mse = loss;
            entry.holdout_rel_l2 = score ? holdout_rel_l2(model, holdout, enc)
                                         : std::numeric_limits<double>::quiet_NaN();
            log->push_back(entry);
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// explicit instantiations

template void encode_input_into<float>(const Field2D&, const BoundarySpec*, InputEncoding, float*);
template void encode_input_into<double>(const Field2D&, const BoundarySpec*, InputEncoding, double*);
template BatchTensor<float> encode_input<float>(const Field2D&, const BoundarySpec*, InputEncoding);
template BatchTensor<double> encode_input<double>(const Field2D&, const BoundarySpec*, InputEncoding);
template struct FnoParams<float>;
template struct FnoParams<double>;
template FnoModel<float> fno_init<float>(const FnoConfig&, uint64_t);
template FnoModel<double> fno_init<double>(const FnoConfig&, uint64_t);
template BatchTensor<float> fno_forward<float>(const FnoModel<float>&, const BatchTensor<float>&, FnoWorkspace<float>*);
template BatchTensor<double> fno_forward<double>(const FnoModel<double>&, const BatchTensor<double>&, FnoWorkspace<double>*);
template Field2D fno_forward_field<float>(const FnoModel<float>&, const Field2D&, const BoundarySpec*, InputEncoding);
template Field2D fno_forward_field<double>(const FnoModel<double>&, const Field2D&, const BoundarySpec*, InputEncoding);
template double fno_loss_and_gradients<float>(const FnoModel<float>&, const BatchTensor<float>&, const BatchTensor<float>&, FnoParams<float>&, FnoWorkspace<float>*);
template double fno_loss_and_gradients<double>(const FnoModel<double>&, const BatchTensor<double>&, const BatchTensor<double>&, FnoParams<double>&, FnoWorkspace<double>*);
template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(FnoModel<float>&, const FnoParams<float>&, AdamState<float>&, const TrainConfig&);
template void adam_step<double>(FnoModel<double>&, const FnoParams<double>&, AdamState<double>&, const TrainConfig&);
template double holdout_rel_l2<float>(const FnoModel<float>&, const Dataset&, InputEncoding);
template double holdout_rel_l2<double>(const FnoModel<double>&, const Dataset&, InputEncoding);
template FnoModel<float> fno_train<float>(const Dataset&, const Dataset&, InputEncoding, const FnoConfig&, const TrainConfig&, std::vector<TrainLogEntry>*);
template FnoModel<double> fno_train<double>(const Dataset&, const Dataset&, InputEncoding, const FnoConfig&, const TrainConfig&, std::vector<TrainLogEntry>*);

}  // namespace bpde
