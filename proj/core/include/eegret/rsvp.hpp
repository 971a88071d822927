#pragma once

#include <array>

#include "eegret/image.hpp"

namespace eegret {

// Recreation of the acquisition display: stimulus centred on a grey canvas
// with a filled fixation dot drawn on top.
struct RsvpSpec {
    int canvas_size = 224;
    double background_gray = 0.5;
    int dot_radius = 4;
    std::array<double, 3> dot_color{0.8, 0.1, 0.1};
    double image_area_fraction = 0.25;
};

Image compose_rsvp(const Image& img, const RsvpSpec& spec);

}  // namespace eegret
