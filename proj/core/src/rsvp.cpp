#include "eegret/rsvp.hpp"

#include <algorithm>
#include <cmath>

#include "eegret/errors.hpp"

namespace eegret {

Image compose_rsvp(const Image& img, const RsvpSpec& spec) {
    img.validate();
    if (spec.canvas_size < 1) throw ParameterError("RSVP canvas must be at least one pixel");
    if (!(spec.image_area_fraction > 0.0)) throw ParameterError("RSVP image_area_fraction must be positive");
    if (spec.dot_radius < 0) throw ParameterError("RSVP dot_radius must be non-negative");

    const double canvas = spec.canvas_size;
    const double scale = std::sqrt(spec.image_area_fraction * canvas * canvas / (static_cast<double>(img.height) * img.width));
    const int h = std::max(1, static_cast<int>(std::lround(img.height * scale)));
    const int w = std::max(1, static_cast<int>(std::lround(img.width * scale)));
    if (h > spec.canvas_size || w > spec.canvas_size)
        throw ParameterError("scaled stimulus " + std::to_string(h) + "x" + std::to_string(w) +
                             " does not fit the RSVP canvas");

    Image out(spec.canvas_size, spec.canvas_size, spec.background_gray);
    const Image inner = resize_bilinear(img, h, w);
    const int oy = (spec.canvas_size - h) / 2;
    const int ox = (spec.canvas_size - w) / 2;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) out.at(oy + y, ox + x, c) = inner.at(y, x, c);

    if (spec.dot_radius > 0) {
        const double centre = canvas / 2.0;
        const double r2 = static_cast<double>(spec.dot_radius) * spec.dot_radius;
        for (int y = 0; y < spec.canvas_size; ++y)
            for (int x = 0; x < spec.canvas_size; ++x) {
                const double dy = y + 0.5 - centre;
                const double dx = x + 0.5 - centre;
                if (dx * dx + dy * dy <= r2)
                    for (int c = 0; c < 3; ++c) out.at(y, x, c) = spec.dot_color[static_cast<std::size_t>(c)];
            }
    }
    return out;
}

}  // namespace eegret
