#include "bpde/grid.hpp"

namespace bpde {

std::pair<Field2D, Field2D> coordinate_channels(const Grid& grid) {
    Field2D xs(grid), ys(grid);
    const double h = grid.spacing();
    for (int i = 0; i < grid.n; ++i) {
        for (int j = 0; j < grid.n; ++j) {
            xs.at(i, j) = i * h;
            ys.at(i, j) = j * h;
        }
    }
    return {std::move(xs), std::move(ys)};
}

Field2D field_linear_combine(double a, const Field2D& u, double b, const Field2D& v) {
    if (!(u.grid == v.grid))
        throw std::invalid_argument("field_linear_combine: grid mismatch");
    Field2D out(u.grid);
    for (size_t k = 0; k < out.values.size(); ++k)
        out.values[k] = a * u.values[k] + b * v.values[k];
    return out;
}

}  // namespace bpde
