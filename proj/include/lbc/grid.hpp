#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "lbc/common.hpp"

namespace lbc {

// Strictly increasing tuning-parameter values theta_0 < ... < theta_K.
// K + 1 grid points define K contiguous two-sided splittings.
struct ParameterGrid {
    std::vector<double> values;

    ParameterGrid() = default;

    explicit ParameterGrid(std::vector<double> v) : values(std::move(v)) { validate(); }

    static ParameterGrid linspace(double lo, double hi, std::size_t n) {
        if (n < 2) throw UsageError("ParameterGrid::linspace: need at least 2 points");
        std::vector<double> v(n);
        const double step = (hi - lo) / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) v[i] = lo + static_cast<double>(i) * step;
        v.back() = hi;
        return ParameterGrid(std::move(v));
    }

    void validate() const {
        if (values.size() < 2) throw UsageError("ParameterGrid: need at least 2 points");
        for (std::size_t i = 1; i < values.size(); ++i)
            if (!(values[i - 1] < values[i]))
                throw UsageError("ParameterGrid: values must be strictly increasing");
    }

    std::size_t points() const { return values.size(); }
    std::size_t splittings() const { return values.size() - 1; }
};

// Tentative splitting k: boundary at the midpoint between grid points k and
// k+1, lower side = grid indices 0..k, upper side = k+1..K.
struct Splitting {
    std::size_t index;
    double boundary;
    std::size_t left_points;   // |Theta^<| in grid points
    std::size_t right_points;  // |Theta^>|

    bool is_left(std::size_t grid_index) const { return grid_index <= index; }
};

inline std::vector<Splitting> make_splittings(const ParameterGrid& grid) {
    grid.validate();
    const std::size_t k_count = grid.splittings();
    std::vector<Splitting> out;
    out.reserve(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        out.push_back(Splitting{k, 0.5 * (grid.values[k] + grid.values[k + 1]), k + 1,
                                k_count - k});
    }
    return out;
}

}  // namespace lbc
