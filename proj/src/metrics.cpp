#include "bpde/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bpde {

namespace {

template <typename T>
double rel_l2_impl(std::span<const T> pred, std::span<const T> truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("relative_l2: size mismatch");
    double num = 0.0, den = 0.0;
    for (size_t k = 0; k < pred.size(); ++k) {
        const double d = static_cast<double>(pred[k]) - static_cast<double>(truth[k]);
        num += d * d;
        den += static_cast<double>(truth[k]) * static_cast<double>(truth[k]);
    }
    if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::sqrt(num / den);
}

}  // namespace

double relative_l2(std::span<const double> pred, std::span<const double> truth) {
    return rel_l2_impl(pred, truth);
}

double relative_l2(std::span<const float> pred, std::span<const float> truth) {
    return rel_l2_impl(pred, truth);
}

double relative_l2(const Field2D& pred, const Field2D& truth) {
    if (!(pred.grid == truth.grid)) throw std::invalid_argument("relative_l2: grid mismatch");
    return rel_l2_impl(std::span<const double>(pred.values), std::span<const double>(truth.values));
}

ErrorStat aggregate(std::span<const double> per_batch_means) {
    if (per_batch_means.empty()) throw std::invalid_argument("aggregate: empty list");
    ErrorStat stat;
    stat.count = static_cast<int>(per_batch_means.size());
    double sum = 0.0;
    for (double v : per_batch_means) sum += v;
    stat.mean = sum / stat.count;
    if (stat.count > 1) {
        double ss = 0.0;
        for (double v : per_batch_means) ss += (v - stat.mean) * (v - stat.mean);
        stat.std = std::sqrt(ss / (stat.count - 1));
    }
    return stat;
}

}  // namespace bpde
