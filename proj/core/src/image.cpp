#include "eegret/image.hpp"

#include <algorithm>
#include <cmath>

#include "eegret/errors.hpp"

namespace eegret {

Image::Image(int h, int w, double fill) : height(h), width(w) {
    if (h < 1 || w < 1) throw ParameterError("image dimensions must be positive");
    pixels.assign(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * 3, fill);
}

void Image::validate() const {
    if (height < 1 || width < 1) throw ParameterError("image dimensions must be positive");
    if (pixels.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * 3)
        throw ShapeError("image pixel buffer does not match its dimensions");
    for (double v : pixels)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) throw DataError("image values must be finite and in [0, 1]");
}

Image resize_bilinear(const Image& img, int height, int width) {
    if (height < 1 || width < 1) throw ParameterError("resize target must be positive");
    if (height == img.height && width == img.width) return img;
    Image out(height, width);
    const double sy = static_cast<double>(img.height) / height;
    const double sx = static_cast<double>(img.width) / width;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = img.at(y0, x0, c) * (1.0 - wx) + img.at(y0, x1, c) * wx;
                const double bottom = img.at(y1, x0, c) * (1.0 - wx) + img.at(y1, x1, c) * wx;
                out.at(y, x, c) = top * (1.0 - wy) + bottom * wy;
            }
        }
    }
    return out;
}

std::vector<double> luminance(const Image& img) {
    std::vector<double> y(static_cast<std::size_t>(img.height) * static_cast<std::size_t>(img.width));
    for (std::size_t i = 0; i < y.size(); ++i)
        y[i] = 0.299 * img.pixels[i * 3] + 0.587 * img.pixels[i * 3 + 1] + 0.114 * img.pixels[i * 3 + 2];
    return y;
}

}  // namespace eegret
