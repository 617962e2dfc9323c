#pragma once

#include "bcpflood/mask.hpp"
#include "bcpflood/raster.hpp"

#include <string>
#include <vector>

namespace bcpflood {

struct OtsuConfig {
    int bins = 256;
    int lee_window = 7;
    bool equalize = true;
    std::string channel = "VV";

    void validate() const;
};

// Additive Lee filter: m + k (x - m) with k = max(0, (v - v_noise) / v),
// local mean m and variance v over the valid cells of the window, and
// v_noise the mean local variance over the image. NaN cells stay NaN.
Grid<double> lee_filter(const Grid<double>& image, int window);

// Equal-width histogram over [lo, hi] of the finite values.
struct Histogram {
    std::vector<double> counts;
    double lo = 0.0;
    double hi = 0.0;

    static Histogram of(const Grid<double>& image, int bins);
    int bins() const { return static_cast<int>(counts.size()); }
    double width() const { return (hi - lo) / bins(); }
    double edge(int k) const { return lo + k * width(); }
    // Bin index of v, clamped to [0, bins - 1].
    int bin_of(double v) const;
};

// Maps each value to the empirical CDF of its bin, so output lies in (0, 1].
Grid<double> histogram_equalization(const Grid<double>& image, int bins);

// Bin edge k in 1..bins-1 splitting the histogram into [0, k) and [k, bins)
// with the smallest weighted within-class variance of the bin centers;
// ties go to the smaller edge. Throws DegenerateHistogramError when fewer
// than two bins are populated.
int otsu_split(const Histogram& histogram);
double otsu_threshold(const Histogram& histogram);
double otsu_threshold(const Grid<double>& image, int bins);

// Event-date image of config.channel: Lee filter, optional equalization,
// Otsu threshold; flood where the processed value is below it.
FloodMask otsu_flood_mask(const RasterStack& stack, const OtsuConfig& config);

}  // namespace bcpflood
