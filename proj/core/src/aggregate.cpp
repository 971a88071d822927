#include "eegret/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace eegret {

Aggregate aggregate(std::span<const double> values) {
    Aggregate a;
    a.n = values.size();
    if (values.empty()) return a;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double v : sorted) sum += v;
    a.mean = sum / static_cast<double>(a.n);
    if (a.n >= 2) {
        double ss = 0.0;
        for (double v : sorted) ss += (v - a.mean) * (v - a.mean);
        a.std = std::sqrt(ss / static_cast<double>(a.n - 1));
    }
    return a;
}

std::string format_percent(const Aggregate& a) {
    char buf[64];
    if (a.std_defined())
        std::snprintf(buf, sizeof buf, "%.2f%% ± %.2f%%", 100.0 * a.mean, 100.0 * a.std);
    else
        std::snprintf(buf, sizeof buf, "%.2f%% ± n/a", 100.0 * a.mean);
    return buf;
}

std::string format_plain(const Aggregate& a, int decimals) {
    char buf[64];
    if (a.std_defined())
        std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, a.mean, decimals, a.std);
    else
        std::snprintf(buf, sizeof buf, "%.*f ± n/a", decimals, a.mean);
    return buf;
}

}  // namespace eegret
