#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "wavesense/error.hpp"

namespace wavesense::io {

// Binary payloads are little-endian f32 throughout. The targets this runs
// on are little-endian; a static check keeps that assumption visible.
static_assert(std::endian::native == std::endian::little,
              "binary file formats assume a little-endian host");

inline void write_f32(const std::filesystem::path& path, const std::vector<float>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-open", "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!out) throw Error("io-write", "short write: " + path.string());
}

inline void append_f32(std::ofstream& out, const float* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(float)));
}

inline std::vector<float> read_f32(const std::filesystem::path& path, std::size_t expected_count) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw Error("io-open", "cannot open for reading: " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected_count * sizeof(float))
        throw Error("io-size", path.string() + ": expected " +
                                    std::to_string(expected_count * sizeof(float)) + " bytes, found " +
                                    std::to_string(bytes));
    std::vector<float> data(expected_count);
    in.seekg(0);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw Error("io-read", "short read: " + path.string());
    return data;
}

}  // namespace wavesense::io
