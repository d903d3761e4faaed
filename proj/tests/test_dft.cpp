#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <complex>
#include <vector>

#include "bpde/dft.hpp"
#include "bpde/rng.hpp"

using namespace bpde;

namespace {

template <typename T>
std::vector<std::complex<T>> random_plane(int n, uint64_t stream) {
    SampleRng rng(7, stream);
    std::vector<std::complex<T>> v(static_cast<size_t>(n) * n);
    for (auto& z : v)
        z = {static_cast<T>(rng.next_normal()), static_cast<T>(rng.next_normal())};
    return v;
}

}  // namespace

TEST_CASE("fft2 matches the reference transform (power of two)") {
    const int n = 8;
    auto data = random_plane<double>(n, 1);
    const auto expect = dft2_reference(data.data(), n, false);
    FftPlan<double> plan(n);
    fft2(data.data(), plan, false);
    for (size_t k = 0; k < data.size(); ++k)
        CHECK(std::abs(data[k] - expect[k]) < 1e-10);
}

TEST_CASE("fft2 matches the reference transform (non power of two)") {
    const int n = 6;
    auto data = random_plane<double>(n, 2);
    const auto expect = dft2_reference(data.data(), n, true);
    FftPlan<double> plan(n);
    fft2(data.data(), plan, true);
    for (size_t k = 0; k < data.size(); ++k)
        CHECK(std::abs(data[k] - expect[k]) < 1e-10);
}

TEST_CASE("inverse undoes forward") {
    for (int n : {4, 16, 64}) {
        auto data = random_plane<double>(n, 3);
        const auto orig = data;
        FftPlan<double> plan(n);
        fft2(data.data(), plan, false);
        fft2(data.data(), plan, true);
        for (size_t k = 0; k < data.size(); ++k)
            CHECK(std::abs(data[k] - orig[k]) < 1e-12);
    }
}

TEST_CASE("impulse transforms to a flat spectrum") {
    const int n = 16;
    std::vector<std::complex<double>> data(static_cast<size_t>(n) * n, {0.0, 0.0});
    data[0] = {1.0, 0.0};
    FftPlan<double> plan(n);
    fft2(data.data(), plan, false);
    for (const auto& z : data) {
        CHECK(z.real() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(z.imag()) < 1e-14);
    }
}

TEST_CASE("float transforms stay near the double reference") {
    const int n = 32;
    auto dataf = random_plane<float>(n, 4);
    std::vector<std::complex<double>> datad(dataf.size());
    for (size_t k = 0; k < dataf.size(); ++k)
        datad[k] = {dataf[k].real(), dataf[k].imag()};
    FftPlan<float> planf(n);
    FftPlan<double> pland(n);
    fft2(dataf.data(), planf, false);
    fft2(datad.data(), pland, false);
    for (size_t k = 0; k < dataf.size(); ++k)
        CHECK(std::abs(std::complex<double>(dataf[k].real(), dataf[k].imag()) - datad[k]) <
              1e-3);
}

TEST_CASE("batched transform equals per-plane transforms bitwise") {
    const int n = 16, count = 9;
    std::vector<std::complex<float>> batch;
    for (int c = 0; c < count; ++c) {
        const auto p = random_plane<float>(n, 100 + c);
        batch.insert(batch.end(), p.begin(), p.end());
    }
    auto expect = batch;
    FftPlan<float> plan(n);
    for (int c = 0; c < count; ++c)
        fft2(expect.data() + static_cast<size_t>(c) * n * n, plan, false);
    fft2_batch(batch.data(), count, plan, false);
    for (size_t k = 0; k < batch.size(); ++k) {
        CHECK(batch[k].real() == expect[k].real());
        CHECK(batch[k].imag() == expect[k].imag());
    }
}
