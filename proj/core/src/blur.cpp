#include "eegret/blur.hpp"

#include <algorithm>
#include <cmath>

#include "eegret/errors.hpp"

namespace eegret {

namespace {

void check_kernel_size(int k) {
    if (k < 1 || k % 2 == 0) throw ParameterError("blur kernel size must be odd and positive, got " + std::to_string(k));
}

}  // namespace

void BlurSpec::validate() const {
    if (kernel_sizes.empty()) throw ParameterError("blur spec needs at least one kernel size");
    for (int k : kernel_sizes) check_kernel_size(k);
}

double blur_sigma(int kernel_size) {
    return 0.3 * ((kernel_size - 1) * 0.5 - 1.0) + 0.8;
}

std::vector<double> gaussian_kernel_1d(int kernel_size) {
    check_kernel_size(kernel_size);
    if (kernel_size == 1) return {1.0};
    const double sigma = blur_sigma(kernel_size);
    const int r = kernel_size / 2;
    std::vector<double> taps(static_cast<std::size_t>(kernel_size));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
        taps[static_cast<std::size_t>(i + r)] = v;
        sum += v;
    }
    for (double& t : taps) t /= sum;
    return taps;
}

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

Image gaussian_blur_unclamped(const Image& img, int kernel_size) {
    check_kernel_size(kernel_size);
    if (kernel_size == 1) return img;
    const auto taps = gaussian_kernel_1d(kernel_size);
    const int r = kernel_size / 2;
    const int h = img.height, w = img.width;

    Image tmp(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int t = -r; t <= r; ++t) acc += taps[static_cast<std::size_t>(t + r)] * img.at(y, reflect_index(x + t, w), c);
                tmp.at(y, x, c) = acc;
            }
    Image out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int t = -r; t <= r; ++t) acc += taps[static_cast<std::size_t>(t + r)] * tmp.at(reflect_index(y + t, h), x, c);
                out.at(y, x, c) = acc;
            }
    return out;
}

Image gaussian_blur(const Image& img, int kernel_size) {
    Image out = gaussian_blur_unclamped(img, kernel_size);
    for (double& v : out.pixels) v = std::clamp(v, 0.0, 1.0);
    return out;
}

std::vector<Image> build_blur_pyramid(const Image& img, const BlurSpec& spec) {
    spec.validate();
    std::vector<Image> levels;
    levels.reserve(spec.kernel_sizes.size());
    for (int k : spec.kernel_sizes) levels.push_back(gaussian_blur(img, k));
    return levels;
}

}  // namespace eegret
