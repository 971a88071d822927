#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

namespace eegret::detail {

struct RawContainer {
    nlohmann::json meta;
    std::vector<std::size_t> shape;
    std::vector<float> values;
};

inline constexpr const char* kMetaFile = "meta.json";
inline constexpr const char* kDataFile = "data.bin";
inline constexpr const char* kDtype = "f32le";

// meta must not contain "shape" or "dtype"; they are filled in here.
// Content is written into a sibling temp directory which then replaces dir,
// so readers never observe a half-written container.
void write_container(const std::filesystem::path& dir, nlohmann::json meta,
                     const std::vector<std::size_t>& shape, std::span<const float> values);

// Throws FormatError for a missing/corrupt header, IntegrityError when the
// payload size disagrees with the shape, DataError on NaN/Inf payload.
RawContainer read_container(const std::filesystem::path& dir);

std::size_t shape_product(const std::vector<std::size_t>& shape);

// Little-endian f32 (de)serialisation independent of host byte order.
std::vector<char> encode_f32le(std::span<const float> values);
std::vector<float> decode_f32le(std::span<const char> bytes);

// Atomically replaces file at path with bytes (temp file then rename).
void write_file_atomic(const std::filesystem::path& path, std::span<const char> bytes);
std::vector<char> read_file(const std::filesystem::path& path);

}  // namespace eegret::detail
