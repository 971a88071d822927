#pragma once

#include <cstddef>
#include <vector>

namespace eegret {

// sRGB image with channel-interleaved pixels in [0, 1], row-major
// [height][width][3].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int h, int w, double fill = 0.0);

    double& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    // ParameterError / DataError when empty, non-finite or out of [0, 1].
    void validate() const;
};

// Half-pixel-centred bilinear resampling with edge clamping.
Image resize_bilinear(const Image& img, int height, int width);

// Rec. 601 luma, [height][width].
std::vector<double> luminance(const Image& img);

}  // namespace eegret
