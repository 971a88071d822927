#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegret/dataset.hpp"

namespace eegret {

// Single-array NPY v1.0 file. Only little-endian f4/f8 in C order are
// accepted; values are widened to double on read.
struct NpyArray {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::string descr;  // "<f4" or "<f8"
};

NpyArray read_npy(const std::filesystem::path& path);
void write_npy(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               std::span<const float> values);
void write_npy(const std::filesystem::path& path, const std::vector<std::size_t>& shape,
               std::span<const double> values);

// [n, reps, channels, time] or [n, channels, time]. Without labels every
// sample is its own class (the 200-way test layout).
EegDataset import_npy_dataset(const std::filesystem::path& path, std::optional<std::vector<int>> labels,
                              SplitTag split);

// [n, streams, dim] or [n, dim] (single stream).
FeatureBank import_npy_bank(const std::filesystem::path& path, std::vector<std::string> stream_names,
                            std::vector<std::string> image_ids, std::string provider_tag);

}  // namespace eegret
