// Relative L2 error and across-batch statistics.
#pragma once

#include <span>
#include <vector>

#include "bpde/grid.hpp"

namespace bpde {

struct ErrorStat {
    double mean = 0.0;
    double std = 0.0;
    int count = 0;
};

// sqrt(mean (pred-truth)^2) / sqrt(mean truth^2) over all n^2 nodes.
// Returns NaN for identically-zero truth (undefined; callers skip and warn).
double relative_l2(std::span<const double> pred, std::span<const double> truth);
double relative_l2(std::span<const float> pred, std::span<const float> truth);
double relative_l2(const Field2D& pred, const Field2D& truth);

// Sample mean and standard deviation (divisor count-1; a single entry gets
// std 0). Throws on an empty list.
ErrorStat aggregate(std::span<const double> per_batch_means);

}  // namespace bpde
