#include "eegret/curves.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "container.hpp"
#include "eegret/errors.hpp"

namespace eegret {

namespace {

constexpr const char* kSeedColor = "#9ecae1";
constexpr const char* kMeanColor = "#08519c";
constexpr const char* kBandColor = "#6baed6";
constexpr const char* kAxisColor = "#444444";

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

struct Stats {
    std::vector<double> mean, std;
};

Stats per_epoch(std::span<const CurveSeries> runs, std::vector<double> CurveSeries::*field) {
    const std::size_t n_epochs = (runs.front().*field).size();
    Stats s;
    s.mean.assign(n_epochs, 0.0);
    s.std.assign(n_epochs, 0.0);
    const double n = static_cast<double>(runs.size());
    for (std::size_t e = 0; e < n_epochs; ++e) {
        double sum = 0.0;
        for (const auto& r : runs) sum += (r.*field)[e];
        s.mean[e] = sum / n;
        if (runs.size() > 1) {
            double ss = 0.0;
            for (const auto& r : runs) ss += ((r.*field)[e] - s.mean[e]) * ((r.*field)[e] - s.mean[e]);
            s.std[e] = std::sqrt(ss / (n - 1.0));
        }
    }
    return s;
}

std::string polyline(const PanelGeometry& g, const std::vector<double>& ys, double lo, double hi) {
    std::string pts;
    for (std::size_t e = 0; e < ys.size(); ++e) {
        if (e) pts += ' ';
        pts += fmt(g.x(e, ys.size())) + "," + fmt(g.y(ys[e], lo, hi));
    }
    return pts;
}

void panel(std::ostringstream& os, const PanelGeometry& g, double offset_x, const std::string& title,
           const std::string& id, std::span<const CurveSeries> runs, std::vector<double> CurveSeries::*field,
           double lo, double hi) {
    const std::size_t n_epochs = (runs.front().*field).size();
    os << "<g id=\"" << id << "\" transform=\"translate(" << fmt(offset_x) << ",0)\">\n";
    os << "<text x=\"" << fmt(g.width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
       << "</text>\n";
    const double x0 = g.left, x1 = g.width - g.right, y0 = g.height - g.bottom, y1 = g.top;
    os << "<polyline class=\"axis\" fill=\"none\" stroke=\"" << kAxisColor << "\" points=\"" << fmt(x0) << ","
       << fmt(y1) << " " << fmt(x0) << "," << fmt(y0) << " " << fmt(x1) << "," << fmt(y0) << "\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        os << "<text x=\"" << fmt(x0 - 6) << "\" y=\"" << fmt(g.y(v, lo, hi) + 4)
           << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(v) << "</text>\n";
    }
    os << "<text x=\"" << fmt(x0) << "\" y=\"" << fmt(y0 + 16) << "\" font-size=\"10\">0</text>\n";
    os << "<text x=\"" << fmt(x1) << "\" y=\"" << fmt(y0 + 16) << "\" text-anchor=\"end\" font-size=\"10\">"
       << (n_epochs - 1) << "</text>\n";
    os << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << fmt(g.height - 8)
       << "\" text-anchor=\"middle\" font-size=\"11\">epoch</text>\n";

    const Stats s = per_epoch(runs, field);
    if (runs.size() > 1) {
        std::string pts;
        for (std::size_t e = 0; e < n_epochs; ++e)
            pts += fmt(g.x(e, n_epochs)) + "," + fmt(g.y(s.mean[e] + s.std[e], lo, hi)) + " ";
        for (std::size_t e = n_epochs; e-- > 0;) {
            pts += fmt(g.x(e, n_epochs)) + "," + fmt(g.y(s.mean[e] - s.std[e], lo, hi));
            if (e) pts += ' ';
        }
        os << "<polygon class=\"band\" fill=\"" << kBandColor << "\" fill-opacity=\"0.35\" stroke=\"none\" points=\""
           << pts << "\"/>\n";
        for (const auto& r : runs)
            os << "<polyline class=\"seed\" data-seed=\"" << r.seed << "\" fill=\"none\" stroke=\"" << kSeedColor
               << "\" stroke-width=\"0.8\" points=\"" << polyline(g, r.*field, lo, hi) << "\"/>\n";
    }
    os << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << kMeanColor << "\" stroke-width=\"2\" points=\""
       << polyline(g, s.mean, lo, hi) << "\"/>\n";
    os << "</g>\n";
}

}  // namespace

double PanelGeometry::x(std::size_t epoch, std::size_t n_epochs) const {
    const double span = width - left - right;
    if (n_epochs <= 1) return left + span / 2.0;
    return left + span * static_cast<double>(epoch) / static_cast<double>(n_epochs - 1);
}

double PanelGeometry::y(double value, double lo, double hi) const {
    const double span = height - top - bottom;
    return (height - bottom) - span * (value - lo) / (hi - lo);
}

double loss_axis_max(std::span<const CurveSeries> runs) {
    double hi = 0.0;
    for (const auto& r : runs)
        for (double v : r.loss) hi = std::max(hi, v);
    if (runs.size() > 1) {
        const Stats s = per_epoch(runs, &CurveSeries::loss);
        for (std::size_t e = 0; e < s.mean.size(); ++e) hi = std::max(hi, s.mean[e] + s.std[e]);
    }
    return hi > 0.0 ? 1.05 * hi : 1.0;
}

std::string render_curves_svg(std::span<const CurveSeries> runs) {
    if (runs.empty()) throw ParameterError("no runs to plot");
    const std::size_t n_epochs = runs.front().top1.size();
    if (n_epochs == 0) throw ParameterError("runs have no epochs");
    for (const auto& r : runs)
        if (r.top1.size() != n_epochs || r.loss.size() != n_epochs)
            throw ParameterError("all runs must share the same epoch count");

    const PanelGeometry g;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(2 * g.width) << "\" height=\""
       << fmt(g.height) << "\" viewBox=\"0 0 " << fmt(2 * g.width) << " " << fmt(g.height) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    panel(os, g, 0.0, "Top-1 test accuracy", "top1", runs, &CurveSeries::top1, 0.0, 1.0);
    panel(os, g, g.width, "InfoNCE training loss", "loss", runs, &CurveSeries::loss, 0.0, loss_axis_max(runs));
    os << "</svg>\n";
    return os.str();
}

void emit_curves(std::span<const CurveSeries> runs, const std::filesystem::path& path) {
    const std::string svg = render_curves_svg(runs);
    detail::write_file_atomic(path, std::span<const char>(svg.data(), svg.size()));
}

}  // namespace eegret
