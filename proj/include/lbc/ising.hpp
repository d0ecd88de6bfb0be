#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "lbc/common.hpp"
#include "lbc/dataset.hpp"
#include "lbc/grid.hpp"
#include "lbc/rng.hpp"

namespace lbc::ising {

// Ferromagnetic Ising model on an L x L square lattice with periodic
// boundaries, E = -J sum_<ij> s_i s_j. Dimensionless convention J = 1,
// k_B = 1; temperatures below are k_B*T/J.
inline constexpr double coupling = 1.0;

// Onsager's exact critical temperature, 2 / ln(1 + sqrt(2)).
inline const double critical_temperature = 2.0 / std::log(1.0 + std::sqrt(2.0));

struct SpinConfiguration {
    int side = 0;
    std::vector<std::int8_t> spins;  // row-major, entries +1 or -1

    SpinConfiguration() = default;
    SpinConfiguration(int side_length, std::int8_t fill) : side(side_length) {
        if (side_length < 2) throw UsageError("SpinConfiguration: side length must be >= 2");
        if (fill != 1 && fill != -1) throw UsageError("SpinConfiguration: spins must be +1 or -1");
        spins.assign(static_cast<std::size_t>(side_length) * side_length, fill);
    }

    static SpinConfiguration all_up(int side_length) { return {side_length, +1}; }

    std::int8_t& at(int r, int c) { return spins[static_cast<std::size_t>(r) * side + c]; }
    std::int8_t at(int r, int c) const { return spins[static_cast<std::size_t>(r) * side + c]; }

    std::size_t sites() const { return spins.size(); }
};

// Total energy in units of J. Each of the 2L^2 nearest-neighbor bonds is
// counted once via the right and down neighbor of every site.
inline int energy(const SpinConfiguration& config) {
    const int L = config.side;
    int sum = 0;
    for (int r = 0; r < L; ++r) {
        const int rd = (r + 1 == L) ? 0 : r + 1;
        for (int c = 0; c < L; ++c) {
            const int cr = (c + 1 == L) ? 0 : c + 1;
            sum += config.at(r, c) * (config.at(r, cr) + config.at(rd, c));
        }
    }
    return -sum;
}

// Energy change from flipping the spin at (row, col), O(1) from its four
// incident bonds: delta = 2 s * (up + down + left + right).
inline int local_energy_delta(const SpinConfiguration& config, int row, int col) {
    const int L = config.side;
    if (row < 0 || row >= L || col < 0 || col >= L)
        throw UsageError("local_energy_delta: site out of bounds");
    const int up = (row == 0) ? L - 1 : row - 1;
    const int down = (row + 1 == L) ? 0 : row + 1;
    const int left = (col == 0) ? L - 1 : col - 1;
    const int right = (col + 1 == L) ? 0 : col + 1;
    const int nn = config.at(up, col) + config.at(down, col) + config.at(row, left) +
                   config.at(row, right);
    return 2 * config.at(row, col) * nn;
}

// Mean spin, in [-1, 1].
inline double magnetization(const SpinConfiguration& config) {
    long long m = 0;
    for (std::int8_t s : config.spins) m += s;
    return static_cast<double>(m) / static_cast<double>(config.sites());
}

struct ThermalState {
    double temperature;
    Rng rng;

    ThermalState(double t, std::uint64_t rng_seed) : temperature(t), rng(rng_seed) {
        if (!(t > 0.0)) throw UsageError("ThermalState: temperature must be positive");
    }
};

// Metropolis acceptance rule, min(1, exp(-delta_e / T)) against u in [0, 1).
inline bool metropolis_accept(int delta_e, double temperature, double u) {
    if (delta_e <= 0) return true;
    return u < std::exp(-static_cast<double>(delta_e) / temperature);
}

// One sweep = L^2 single-site update attempts at uniformly random sites.
// Returns the number of accepted flips.
inline int metropolis_sweep(SpinConfiguration& config, ThermalState& state) {
    const int L = config.side;
    const std::size_t n = config.sites();
    // Square-lattice deltas are in {-8, -4, 0, 4, 8}; cache the two positive cases.
    const double accept4 = std::exp(-4.0 / state.temperature);
    const double accept8 = std::exp(-8.0 / state.temperature);
    int accepted = 0;
    for (std::size_t attempt = 0; attempt < n; ++attempt) {
        const auto site = static_cast<int>(state.rng.next_below(n));
        const int row = site / L;
        const int col = site % L;
        const int delta = local_energy_delta(config, row, col);
        bool accept;
        if (delta <= 0) {
            accept = true;
        } else {
            const double u = state.rng.next_double();
            accept = u < (delta == 4 ? accept4 : accept8);
        }
        if (accept) {
            config.at(row, col) = static_cast<std::int8_t>(-config.at(row, col));
            ++accepted;
        }
    }
    return accepted;
}

struct SamplerConfig {
    std::uint64_t thermalization_sweeps = 1000;
    std::uint64_t decorrelation_sweeps = 10;  // between collected samples
    std::uint32_t samples_per_point = 1;      // M
    int lattice_side = 20;
};

namespace detail {
inline void append_features(const SpinConfiguration& config, std::vector<float>& out) {
    for (std::int8_t s : config.spins) out.push_back(static_cast<float>(s));
}
}  // namespace detail

// Samples M configurations per grid point. One chain: all spins up at the
// lowest temperature, then thermalize / collect / raise the temperature,
// carrying the configuration over to the next grid point. Features are the
// spins as floats, flattened row-major.
inline GridSamples sample_grid(const ParameterGrid& grid, const SamplerConfig& sampler,
                               std::uint64_t seed) {
    grid.validate();
    if (!(grid.values.front() > 0.0))
        throw UsageError("sample_grid: temperatures must be positive");
    if (sampler.samples_per_point < 1)
        throw UsageError("sample_grid: samples_per_point must be >= 1");
    if (sampler.lattice_side < 2) throw UsageError("sample_grid: lattice side must be >= 2");

    GridSamples gs;
    gs.grid = grid;
    gs.samples_per_point = sampler.samples_per_point;
    gs.feature_dim = static_cast<std::uint32_t>(sampler.lattice_side) *
                     static_cast<std::uint32_t>(sampler.lattice_side);
    gs.features.reserve(grid.points() * static_cast<std::size_t>(gs.samples_per_point) *
                        gs.feature_dim);

    auto config = SpinConfiguration::all_up(sampler.lattice_side);
    ThermalState state(grid.values.front(), derive_seed(seed, 0));
    for (std::size_t p = 0; p < grid.points(); ++p) {
        state.temperature = grid.values[p];
        for (std::uint64_t s = 0; s < sampler.thermalization_sweeps; ++s)
            metropolis_sweep(config, state);
        for (std::uint32_t m = 0; m < sampler.samples_per_point; ++m) {
            for (std::uint64_t s = 0; s < sampler.decorrelation_sweeps; ++s)
                metropolis_sweep(config, state);
            detail::append_features(config, gs.features);
        }
    }
    return gs;
}

// Interprets a feature vector written by sample_grid (or an ingested file
// with the same encoding) back as a spin configuration.
inline SpinConfiguration decode_features(std::span<const float> features) {
    const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(features.size()))));
    if (side < 2 || static_cast<std::size_t>(side) * side != features.size())
        throw DataFormatError("decode_features: feature length is not a square lattice");
    SpinConfiguration config(side, +1);
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i] == 1.0f) {
            config.spins[i] = 1;
        } else if (features[i] == -1.0f) {
            config.spins[i] = -1;
        } else {
            throw DataFormatError("decode_features: entries must be exactly +1 or -1");
        }
    }
    return config;
}

}  // namespace lbc::ising
