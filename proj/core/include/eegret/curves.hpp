#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace eegret {

// One training run as plotted: per-epoch Top-1 and loss.
struct CurveSeries {
    std::uint64_t seed = 0;
    std::vector<double> top1;
    std::vector<double> loss;
};

// Plot-area mapping of one 900 x 360 panel. Epoch e of n maps linearly onto
// [left, width - right]; values in [lo, hi] map onto [height - bottom, top].
struct PanelGeometry {
    double width = 900.0;
    double height = 360.0;
    double left = 64.0;
    double right = 24.0;
    double top = 36.0;
    double bottom = 44.0;

    double x(std::size_t epoch, std::size_t n_epochs) const;
    double y(double value, double lo, double hi) const;
};

// Palette: seed lines #9ecae1, mean line #08519c, band #6baed6 at 0.35
// opacity, axes #444444.
//
// Two side-by-side panels (Top-1 vs epoch with a fixed [0, 1] axis; loss vs
// epoch with [0, 1.05 * max]). Several runs give thin per-seed lines, a mean
// line and a +/-1 sample-std band; a single run gives one line and no band.
// Coordinates are printed with three decimals. ParameterError when runs
// differ in epoch count or are empty.
std::string render_curves_svg(std::span<const CurveSeries> runs);
void emit_curves(std::span<const CurveSeries> runs, const std::filesystem::path& path);

// Loss-panel upper bound used by render_curves_svg.
double loss_axis_max(std::span<const CurveSeries> runs);

}  // namespace eegret
