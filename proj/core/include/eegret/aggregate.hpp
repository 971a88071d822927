#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace eegret {

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // sample (n-1) standard deviation; 0 when n < 2
    std::size_t n = 0;

    bool std_defined() const noexcept { return n >= 2; }
};

// Order-independent: values are summed in sorted order, so any permutation
// of the input gives bit-identical results.
Aggregate aggregate(std::span<const double> values);

// "86.60% ± 1.80%" (fractions rendered as percentages, two decimals). The
// std part reads "n/a" for a single value.
std::string format_percent(const Aggregate& a);
// "0.409 ± 0.005" with the given number of decimals.
std::string format_plain(const Aggregate& a, int decimals = 3);

}  // namespace eegret
