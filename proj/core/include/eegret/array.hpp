#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace eegret {

// Dense row-major f32 array with an explicit shape. Used for latents,
// similarity-matrix dumps and anything else that does not need the richer
// dataset or feature-bank metadata.
struct FloatArray {
    std::vector<std::size_t> shape;
    std::vector<float> values;

    std::size_t size() const noexcept;
};

// Container layout: <dir>/meta.json {"shape":[...],"dtype":"f32le"} plus
// <dir>/data.bin holding the raw little-endian payload.
void write_array(const std::filesystem::path& dir, const FloatArray& array);
FloatArray read_array(const std::filesystem::path& dir);

}  // namespace eegret
