#pragma once

#include <filesystem>

#include "eegret/image.hpp"

namespace eegret {

// 8-bit sRGB PNG, converted to and from [0, 1] by /255. Grey and alpha
// inputs are expanded/stripped to RGB.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace eegret
