#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "lbc/common.hpp"

namespace lbc {

// Little-endian binary file helpers for the dataset and checkpoint formats.

namespace detail {
template <typename T>
T byteswap_int(T v) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    return std::bit_cast<T>(bytes);
}
template <typename T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    return byteswap_int(v);
}
}  // namespace detail

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw DataFormatError("cannot open for writing: " + path);
        path_ = path;
    }

    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) { v = detail::to_le(v); bytes(&v, 2); }
    void u32(std::uint32_t v) { v = detail::to_le(v); bytes(&v, 4); }
    void u64(std::uint64_t v) { v = detail::to_le(v); bytes(&v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void f32_array(std::span<const float> v) {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(v.data(), v.size() * 4);
        } else {
            for (float x : v) f32(x);
        }
    }
    void f64_array(std::span<const double> v) {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(v.data(), v.size() * 8);
        } else {
            for (double x : v) f64(x);
        }
    }

    void close() {
        out_.close();
        if (!out_) throw DataFormatError("write failed: " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw DataFormatError("cannot open for reading: " + path);
    }

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
            throw DataFormatError("unexpected end of file: " + path_);
    }
    std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
    std::uint16_t u16() { std::uint16_t v; bytes(&v, 2); return detail::to_le(v); }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return detail::to_le(v); }
    std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return detail::to_le(v); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    void f32_array(std::span<float> v) {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(v.data(), v.size() * 4);
        } else {
            for (float& x : v) x = f32();
        }
    }
    void f64_array(std::span<double> v) {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(v.data(), v.size() * 8);
        } else {
            for (double& x : v) x = f64();
        }
    }

    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }

    const std::string& path() const { return path_; }

private:
    std::ifstream in_;
    std::string path_;
};

}  // namespace lbc
