#include "bpde/dft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

namespace bpde {

namespace {

// FFTW_UNALIGNED lets plans execute on any new array (std::vector storage)
// at a small speed cost; FFTW_ESTIMATE keeps planning deterministic.
constexpr unsigned kPlanFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

}  // namespace

template <>
FftPlan<float>::FftPlan(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("FftPlan: n < 1");
    std::vector<std::complex<float>> dummy(static_cast<size_t>(n) * n);
    auto* d = reinterpret_cast<fftwf_complex*>(dummy.data());
    fwd_ = fftwf_plan_dft_2d(n, n, d, d, FFTW_FORWARD, kPlanFlags);
    bwd_ = fftwf_plan_dft_2d(n, n, d, d, FFTW_BACKWARD, kPlanFlags);
    if (!fwd_ || !bwd_) throw std::runtime_error("FftPlan: fftwf plan creation failed");
}

template <>
FftPlan<double>::FftPlan(int n) : n_(n) {
    if (n < 1) throw std::invalid_argument("FftPlan: n < 1");
    std::vector<std::complex<double>> dummy(static_cast<size_t>(n) * n);
    auto* d = reinterpret_cast<fftw_complex*>(dummy.data());
    fwd_ = fftw_plan_dft_2d(n, n, d, d, FFTW_FORWARD, kPlanFlags);
    bwd_ = fftw_plan_dft_2d(n, n, d, d, FFTW_BACKWARD, kPlanFlags);
    if (!fwd_ || !bwd_) throw std::runtime_error("FftPlan: fftw plan creation failed");
}

template <>
FftPlan<float>::~FftPlan() {
    if (fwd_) fftwf_destroy_plan(static_cast<fftwf_plan>(fwd_));
    if (bwd_) fftwf_destroy_plan(static_cast<fftwf_plan>(bwd_));
}

template <>
FftPlan<double>::~FftPlan() {
    if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

template <>
void FftPlan<float>::transform2d(std::complex<float>* data, bool inverse) const {
    auto* d = reinterpret_cast<fftwf_complex*>(data);
    fftwf_execute_dft(static_cast<fftwf_plan>(inverse ? bwd_ : fwd_), d, d);
    if (inverse) {
        const float scale = 1.0f / (static_cast<float>(n_) * static_cast<float>(n_));
        const size_t total = static_cast<size_t>(n_) * n_;
        for (size_t k = 0; k < total; ++k) data[k] *= scale;
    }
}

template <>
void FftPlan<double>::transform2d(std::complex<double>* data, bool inverse) const {
    auto* d = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(static_cast<fftw_plan>(inverse ? bwd_ : fwd_), d, d);
    if (inverse) {
        const double scale = 1.0 / (static_cast<double>(n_) * n_);
        const size_t total = static_cast<size_t>(n_) * n_;
        for (size_t k = 0; k < total; ++k) data[k] *= scale;
    }
}

template <typename T>
void fft2(std::complex<T>* data, const FftPlan<T>& plan, bool inverse) {
    plan.transform2d(data, inverse);
}

template <typename T>
void fft2_batch(std::complex<T>* data, int count, const FftPlan<T>& plan, bool inverse) {
    const size_t stride = static_cast<size_t>(plan.size()) * plan.size();
#pragma omp parallel for schedule(static)
    for (int c = 0; c < count; ++c) fft2(data + c * stride, plan, inverse);
}

template <typename T>
std::vector<std::complex<T>> dft2_reference(const std::complex<T>* data, int n, bool inverse) {
    std::vector<std::complex<T>> out(static_cast<size_t>(n) * n);
    const double sign = inverse ? 1.0 : -1.0;
    for (int kx = 0; kx < n; ++kx) {
        for (int ky = 0; ky < n; ++ky) {
            std::complex<double> acc{};
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const double ang =
                        sign * 2.0 * std::numbers::pi *
                        (static_cast<double>(kx) * i + static_cast<double>(ky) * j) / n;
                    const std::complex<T> v = data[static_cast<size_t>(i) * n + j];
                    acc += std::complex<double>(v.real(), v.imag()) *
                           std::complex<double>(std::cos(ang), std::sin(ang));
                }
            }
            if (inverse) acc /= static_cast<double>(n) * n;
            out[static_cast<size_t>(kx) * n + ky] = {static_cast<T>(acc.real()),
                                                     static_cast<T>(acc.imag())};
        }
    }
    return out;
}

template void fft2<float>(std::complex<float>*, const FftPlan<float>&, bool);
template void fft2<double>(std::complex<double>*, const FftPlan<double>&, bool);
template void fft2_batch<float>(std::complex<float>*, int, const FftPlan<float>&, bool);
template void fft2_batch<double>(std::complex<double>*, int, const FftPlan<double>&, bool);
template std::vector<std::complex<float>> dft2_reference<float>(const std::complex<float>*, int, bool);
template std::vector<std::complex<double>> dft2_reference<double>(const std::complex<double>*, int, bool);

}  // namespace bpde
