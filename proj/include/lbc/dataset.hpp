#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lbc/binio.hpp"
#include "lbc/common.hpp"
#include "lbc/grid.hpp"
#include "lbc/rng.hpp"

namespace lbc {

// ---------------------------------------------------------------------------
// Raw sample store: a fixed number of feature vectors per grid point, before
// any train/validation assignment. Mirrors the on-disk LBCD layout.
//
// LBCD v1 (little-endian):
//   magic "LBCD" | u16 version | u32 points | u32 samples_per_point |
//   u32 feature_dim | f64 grid values [points] |
//   f32 features [points * samples_per_point * feature_dim], grid-point major
// ---------------------------------------------------------------------------
struct GridSamples {
    ParameterGrid grid;
    std::uint32_t samples_per_point = 0;
    std::uint32_t feature_dim = 0;
    std::vector<float> features;

    std::span<const float> sample(std::size_t point, std::size_t idx) const {
        const std::size_t off =
            (point * samples_per_point + idx) * static_cast<std::size_t>(feature_dim);
        return {features.data() + off, feature_dim};
    }

    void write_lbcd(const std::string& path) const {
        BinaryWriter w(path);
        w.bytes("LBCD", 4);
        w.u16(1);
        w.u32(static_cast<std::uint32_t>(grid.points()));
        w.u32(samples_per_point);
        w.u32(feature_dim);
        w.f64_array(grid.values);
        w.f32_array(features);
        w.close();
    }

    static GridSamples read_lbcd(const std::string& path) {
        BinaryReader r(path);
        char magic[4];
        r.bytes(magic, 4);
        if (std::string(magic, 4) != "LBCD")
            throw DataFormatError(path + ": bad magic, not an LBCD file");
        const std::uint16_t version = r.u16();
        if (version != 1)
            throw DataFormatError(path + ": unsupported LBCD version " + std::to_string(version));
        GridSamples gs;
        const std::uint32_t points = r.u32();
        gs.samples_per_point = r.u32();
        gs.feature_dim = r.u32();
        if (points < 2) throw DataFormatError(path + ": fewer than 2 grid points");
        if (gs.samples_per_point == 0 || gs.feature_dim == 0)
            throw DataFormatError(path + ": zero samples per point or zero feature length");
        std::vector<double> values(points);
        r.f64_array(values);
        try {
            gs.grid = ParameterGrid(std::move(values));
        } catch (const UsageError& e) {
            throw DataFormatError(path + ": " + e.what());
        }
        const std::size_t n = static_cast<std::size_t>(points) * gs.samples_per_point *
                              gs.feature_dim;
        gs.features.resize(n);
        r.f32_array(gs.features);
        if (!r.at_eof()) throw DataFormatError(path + ": trailing bytes after feature block");
        return gs;
    }

    // CSV ingestion: one sample per row, "grid_index,feature_0,feature_1,...".
    // An optional non-numeric header row is skipped. Every grid point must
    // appear with the same number of rows and a uniform feature length.
    // When no grid is supplied, grid values default to the indices 0..P-1.
    static GridSamples read_csv(const std::string& path,
                                std::optional<ParameterGrid> grid = std::nullopt);
};

namespace detail {

inline bool parse_double_field(const std::string& s, std::size_t& pos, double& out) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    std::size_t end = s.find(',', pos);
    if (end == std::string::npos) end = s.size();
    std::size_t last = end;
    while (last > pos && (s[last - 1] == ' ' || s[last - 1] == '\t' || s[last - 1] == '\r'))
        --last;
    const char* b = s.data() + pos;
    const char* e = s.data() + last;
    auto [p, ec] = std::from_chars(b, e, out);
    const bool ok = ec == std::errc{} && p == e && b != e;
    pos = end < s.size() ? end + 1 : std::string::npos;
    return ok;
}

}  // namespace detail

inline GridSamples GridSamples::read_csv(const std::string& path,
                                         std::optional<ParameterGrid> grid) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open for reading: " + path);

    std::vector<std::vector<float>> rows;   // per sample
    std::vector<std::size_t> row_point;     // grid index per sample
    std::size_t feature_dim = 0;
    std::size_t line_no = 0;
    std::string line;
    bool first_data_seen = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::size_t pos = 0;
        double idx_val = 0.0;
        if (!detail::parse_double_field(line, pos, idx_val)) {
            if (!first_data_seen) continue;  // header row
            throw DataFormatError(path + ": line " + std::to_string(line_no) +
                                  ": grid index is not a number");
        }
        if (idx_val < 0 || idx_val != static_cast<double>(static_cast<std::size_t>(idx_val)))
            throw DataFormatError(path + ": line " + std::to_string(line_no) +
                                  ": grid index must be a non-negative integer");
        std::vector<float> feats;
        while (pos != std::string::npos) {
            double v = 0.0;
            if (!detail::parse_double_field(line, pos, v))
                throw DataFormatError(path + ": line " + std::to_string(line_no) +
                                      ": malformed feature value");
            feats.push_back(static_cast<float>(v));
        }
        if (feats.empty())
            throw DataFormatError(path + ": line " + std::to_string(line_no) +
                                  ": row has no features");
        if (!first_data_seen) {
            feature_dim = feats.size();
            first_data_seen = true;
        } else if (feats.size() != feature_dim) {
            throw DataFormatError(path + ": line " + std::to_string(line_no) +
                                  ": expected " + std::to_string(feature_dim) +
                                  " features, got " + std::to_string(feats.size()));
        }
        row_point.push_back(static_cast<std::size_t>(idx_val));
        rows.push_back(std::move(feats));
    }
    if (rows.empty()) throw DataFormatError(path + ": no data rows");

    std::size_t points = 0;
    for (std::size_t p : row_point) points = std::max(points, p + 1);
    if (points < 2) throw DataFormatError(path + ": fewer than 2 grid points");

    std::vector<std::size_t> counts(points, 0);
    for (std::size_t p : row_point) ++counts[p];
    for (std::size_t p = 0; p < points; ++p) {
        if (counts[p] == 0)
            throw DataFormatError(path + ": grid point " + std::to_string(p) + " has no rows");
        if (counts[p] != counts[0])
            throw DataFormatError(path + ": grid point " + std::to_string(p) + " has " +
                                  std::to_string(counts[p]) + " rows, expected " +
                                  std::to_string(counts[0]));
    }

    GridSamples gs;
    if (grid) {
        if (grid->points() != points)
            throw DataFormatError(path + ": grid has " + std::to_string(grid->points()) +
                                  " values but the file covers " + std::to_string(points) +
                                  " grid indices");
        gs.grid = std::move(*grid);
    } else {
        std::vector<double> v(points);
        for (std::size_t i = 0; i < points; ++i) v[i] = static_cast<double>(i);
        gs.grid = ParameterGrid(std::move(v));
    }
    gs.samples_per_point = static_cast<std::uint32_t>(counts[0]);
    gs.feature_dim = static_cast<std::uint32_t>(feature_dim);
    gs.features.assign(static_cast<std::size_t>(points) * gs.samples_per_point * feature_dim,
                       0.0f);
    std::vector<std::size_t> fill(points, 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::size_t p = row_point[r];
        const std::size_t off = (p * gs.samples_per_point + fill[p]++) * feature_dim;
        std::copy(rows[r].begin(), rows[r].end(), gs.features.begin() + off);
    }
    return gs;
}

// ---------------------------------------------------------------------------
// Partitioned dataset used by training and evaluation.
// ---------------------------------------------------------------------------
enum class SplitMode { fixed, shuffled };

struct GriddedDataset {
    ParameterGrid grid;
    std::uint32_t feature_dim = 0;
    std::uint32_t train_per_point = 0;
    std::uint32_t valid_per_point = 0;
    std::vector<float> train_features;  // grid-point major
    std::vector<float> valid_features;

    std::size_t points() const { return grid.points(); }
    std::size_t splittings() const { return grid.splittings(); }
    std::size_t train_total() const { return points() * train_per_point; }
    std::size_t valid_total() const { return points() * valid_per_point; }

    std::span<const float> train_row(std::size_t point, std::size_t idx) const {
        const std::size_t off = (point * train_per_point + idx) * feature_dim;
        return {train_features.data() + off, feature_dim};
    }
    std::span<const float> valid_row(std::size_t point, std::size_t idx) const {
        const std::size_t off = (point * valid_per_point + idx) * feature_dim;
        return {valid_features.data() + off, feature_dim};
    }
};

// Assigns samples at every grid point to train/validation. Fixed mode takes
// the first m_train then the next m_valid samples in stored order; shuffled
// mode permutes each point's samples first (seeded, per-run randomization).
inline GriddedDataset make_dataset(const GridSamples& gs, std::uint32_t m_train,
                                   std::uint32_t m_valid, SplitMode mode,
                                   std::uint64_t seed = 0) {
    if (m_valid == 0) throw UsageError("make_dataset: need at least 1 validation sample per point");
    if (m_train + m_valid > gs.samples_per_point)
        throw UsageError("make_dataset: m_train + m_valid = " +
                         std::to_string(m_train + m_valid) + " exceeds samples per point (" +
                         std::to_string(gs.samples_per_point) + ")");
    GriddedDataset ds;
    ds.grid = gs.grid;
    ds.feature_dim = gs.feature_dim;
    ds.train_per_point = m_train;
    ds.valid_per_point = m_valid;
    ds.train_features.resize(ds.train_total() * gs.feature_dim);
    ds.valid_features.resize(ds.valid_total() * gs.feature_dim);

    Rng rng(derive_seed(seed, 11));
    std::vector<std::uint32_t> order(gs.samples_per_point);
    for (std::size_t p = 0; p < gs.grid.points(); ++p) {
        for (std::uint32_t i = 0; i < gs.samples_per_point; ++i) order[i] = i;
        if (mode == SplitMode::shuffled) shuffle(std::span<std::uint32_t>(order), rng);
        for (std::uint32_t i = 0; i < m_train + m_valid; ++i) {
            const auto src = gs.sample(p, order[i]);
            float* dst = i < m_train
                             ? ds.train_features.data() +
                                   (p * m_train + i) * static_cast<std::size_t>(gs.feature_dim)
                             : ds.valid_features.data() +
                                   (p * m_valid + (i - m_train)) *
                                       static_cast<std::size_t>(gs.feature_dim);
            std::copy(src.begin(), src.end(), dst);
        }
    }
    return ds;
}

// Keeps every stride-th grid point (indices 0, s, 2s, ..., P-1). Used by the
// benchmark to scan the splitting count K on one underlying dataset.
inline GriddedDataset subgrid_by_stride(const GriddedDataset& ds, std::size_t stride) {
    if (stride == 0) throw UsageError("subgrid_by_stride: stride must be positive");
    if ((ds.points() - 1) % stride != 0)
        throw UsageError("subgrid_by_stride: stride " + std::to_string(stride) +
                         " does not evenly divide " + std::to_string(ds.points() - 1) +
                         " grid intervals");
    GriddedDataset out;
    std::vector<double> values;
    for (std::size_t p = 0; p < ds.points(); p += stride) values.push_back(ds.grid.values[p]);
    out.grid = ParameterGrid(std::move(values));
    out.feature_dim = ds.feature_dim;
    out.train_per_point = ds.train_per_point;
    out.valid_per_point = ds.valid_per_point;
    out.train_features.reserve(out.train_total() * ds.feature_dim);
    out.valid_features.reserve(out.valid_total() * ds.feature_dim);
    for (std::size_t p = 0; p < ds.points(); p += stride) {
        for (std::uint32_t i = 0; i < ds.train_per_point; ++i) {
            const auto r = ds.train_row(p, i);
            out.train_features.insert(out.train_features.end(), r.begin(), r.end());
        }
        for (std::uint32_t i = 0; i < ds.valid_per_point; ++i) {
            const auto r = ds.valid_row(p, i);
            out.valid_features.insert(out.valid_features.end(), r.begin(), r.end());
        }
    }
    return out;
}

}  // namespace lbc
