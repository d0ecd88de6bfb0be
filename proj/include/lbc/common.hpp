#pragma once

#include <charconv>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace lbc {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: UsageError -> 2, DataFormatError -> 3, NumericalError -> 4.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pairwise (divide-and-conquer) summation, split at floor(n/2).
// Summing a concatenation [v, v] therefore yields exactly 2 * sum(v):
// both halves reduce over identical trees, and doubling is exact in
// binary floating point. Class-rebalance invariants rely on this.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 2) {
        if (v.empty()) return 0.0;
        return v.size() == 1 ? v[0] : v[0] + v[1];
    }
    const std::size_t mid = v.size() / 2;
    return pairwise_sum(v.first(mid)) + pairwise_sum(v.subspan(mid));
}

inline double pairwise_mean(std::span<const double> v) {
    if (v.empty()) throw UsageError("pairwise_mean: empty range");
    return pairwise_sum(v) / static_cast<double>(v.size());
}

// Shortest round-trip decimal form; identical double bits always print
// identical bytes, which keeps CSV outputs reproducible.
inline std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw NumericalError("format_double failed");
    return std::string(buf, ptr);
}

}  // namespace lbc
