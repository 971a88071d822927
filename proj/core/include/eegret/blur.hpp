#pragma once

#include <span>
#include <vector>

#include "eegret/image.hpp"

namespace eegret {

struct BlurSpec {
    std::vector<int> kernel_sizes{1, 3, 15, 21, 33, 45, 57, 63};

    // ParameterError unless non-empty and every size is odd and positive.
    void validate() const;
};

// Kernel-size to sigma rule: 0.3 * ((k - 1) / 2 - 1) + 0.8.
double blur_sigma(int kernel_size);

// Normalised 1-D Gaussian taps of length k (k odd). k == 1 gives {1}.
std::vector<double> gaussian_kernel_1d(int kernel_size);

// Mirror index into [0, n) without repeating the edge sample
// (... c b | a b c d | c b ...).
int reflect_index(int i, int n);

// Separable Gaussian blur of each channel with reflect padding. The
// unclamped variant is linear in img; gaussian_blur clamps to [0, 1].
Image gaussian_blur_unclamped(const Image& img, int kernel_size);
Image gaussian_blur(const Image& img, int kernel_size);

// One level per kernel size, each blurred from the original image.
std::vector<Image> build_blur_pyramid(const Image& img, const BlurSpec& spec);

}  // namespace eegret
