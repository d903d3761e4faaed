// Complex 2-D DFT used by the spectral layers, backed by FFTW single- and
// double-precision plans (FFTW_ESTIMATE: planning is heuristic and
// deterministic, never timing-based). A textbook O(n^4) transform is kept
// as the independent oracle for tests.
#pragma once

#include <complex>
#include <vector>

namespace bpde {

template <typename T>
class FftPlan {
public:
    explicit FftPlan(int n);
    ~FftPlan();
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    int size() const { return n_; }

    // In-place 2-D transform of one row-major n x n array. Forward is
    // unnormalized; inverse applies the full 1/n^2. Plan creation is not
    // thread-safe; execution on distinct arrays is.
    void transform2d(std::complex<T>* data, bool inverse) const;

private:
    int n_ = 0;
    void* fwd_ = nullptr;
    void* bwd_ = nullptr;
};

template <typename T>
void fft2(std::complex<T>* data, const FftPlan<T>& plan, bool inverse);

// `count` independent n x n transforms, OpenMP-parallel across transforms.
template <typename T>
void fft2_batch(std::complex<T>* data, int count, const FftPlan<T>& plan, bool inverse);

// O(n^4) reference 2-D DFT (same conventions), for oracle tests.
template <typename T>
std::vector<std::complex<T>> dft2_reference(const std::complex<T>* data, int n, bool inverse);

}  // namespace bpde
