#include "bcpflood/otsu.hpp"
#include "bcpflood/digest.hpp"
#include "bcpflood/errors.hpp"
#include "bcpflood/pixel_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bcpflood {

void OtsuConfig::validate() const {
    if (bins < 2) {
        throw ParameterError("otsu bins must be >= 2, got " + std::to_string(bins));
    }
    if (lee_window < 1 || lee_window % 2 == 0) {
        throw ParameterError("lee window must be odd, got " + std::to_string(lee_window));
    }
}

Grid<double> lee_filter(const Grid<double>& image, int window) {
    if (window < 1 || window % 2 == 0) {
        throw ParameterError("lee window must be odd, got " + std::to_string(window));
    }
    const std::size_t rows = image.rows();
    const std::size_t cols = image.cols();
    const std::size_t half = static_cast<std::size_t>(window / 2);
    Grid<double> mean(rows, cols, std::numeric_limits<double>::quiet_NaN());
    Grid<double> var(rows, cols, std::numeric_limits<double>::quiet_NaN());
    double var_total = 0.0;
    std::size_t var_cells = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t r0 = r >= half ? r - half : 0;
        const std::size_t r1 = std::min(rows - 1, r + half);
        for (std::size_t c = 0; c < cols; ++c) {
            if (is_nodata(image(r, c))) continue;
            const std::size_t c0 = c >= half ? c - half : 0;
            const std::size_t c1 = std::min(cols - 1, c + half);
            double sum = 0.0;
            double n = 0.0;
            for (std::size_t i = r0; i <= r1; ++i) {
                for (std::size_t j = c0; j <= c1; ++j) {
                    if (!is_nodata(image(i, j))) {
                        sum += image(i, j);
                        n += 1.0;
                    }
                }
            }
            const double m = sum / n;
            double ss = 0.0;
            for (std::size_t i = r0; i <= r1; ++i) {
                for (std::size_t j = c0; j <= c1; ++j) {
                    if (!is_nodata(image(i, j))) ss += (image(i, j) - m) * (image(i, j) - m);
                }
            }
            mean(r, c) = m;
            var(r, c) = ss / n;
            var_total += ss / n;
            ++var_cells;
        }
    }
    const double noise = var_cells ? var_total / static_cast<double>(var_cells) : 0.0;
    Grid<double> out(rows, cols, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (is_nodata(image(r, c))) continue;
            const double v = var(r, c);
            const double k = v > 0.0 ? std::max(0.0, (v - noise) / v) : 0.0;
            out(r, c) = mean(r, c) + k * (image(r, c) - mean(r, c));
        }
    }
    return out;
}

Histogram Histogram::of(const Grid<double>& image, int bins) {
    if (bins < 2) {
        throw ParameterError("histogram needs >= 2 bins, got " + std::to_string(bins));
    }
    Histogram h;
    h.counts.assign(static_cast<std::size_t>(bins), 0.0);
    h.lo = std::numeric_limits<double>::infinity();
    h.hi = -std::numeric_limits<double>::infinity();
    for (const double v : image.data()) {
        if (std::isfinite(v)) {
            h.lo = std::min(h.lo, v);
            h.hi = std::max(h.hi, v);
        }
    }
    if (!(h.lo <= h.hi)) {
        throw DegenerateHistogramError("image has no finite values");
    }
    for (const double v : image.data()) {
        if (std::isfinite(v)) h.counts[static_cast<std::size_t>(h.bin_of(v))] += 1.0;
    }
    return h;
}

int Histogram::bin_of(double v) const {
    if (!(hi > lo)) return 0;
    const double pos = std::floor((v - lo) / (hi - lo) * bins());
    return static_cast<int>(std::clamp(pos, 0.0, static_cast<double>(bins() - 1)));
}

Grid<double> histogram_equalization(const Grid<double>& image, int bins) {
    const Histogram h = Histogram::of(image, bins);
    double total = 0.0;
    for (const double c : h.counts) total += c;
    std::vector<double> cdf(h.counts.size());
    double running = 0.0;
    for (std::size_t k = 0; k < cdf.size(); ++k) {
        running += h.counts[k];
        cdf[k] = running / total;
    }
    // A constant image lands wholly in bin 0 and maps to 1.
    Grid<double> out(image.rows(), image.cols(), std::numeric_limits<double>::quiet_NaN());
    const auto in = image.data();
    const auto dst = out.data();
    for (std::size_t k = 0; k < in.size(); ++k) {
        if (std::isfinite(in[k])) dst[k] = cdf[static_cast<std::size_t>(h.bin_of(in[k]))];
    }
    return out;
}

int otsu_split(const Histogram& histogram) {
    const int bins = histogram.bins();
    int populated = 0;
    long double n = 0.0L;
    long double s = 0.0L;
    for (int i = 0; i < bins; ++i) {
        populated += histogram.counts[i] > 0.0 ? 1 : 0;
        n += histogram.counts[i];
        s += histogram.counts[i] * (i + 0.5L);
    }
    if (populated < 2) {
        throw DegenerateHistogramError("histogram has fewer than two populated bins");
    }
    // Minimizing the within-class variance is the same as maximizing
    // n0 n1 (mu0 - mu1)^2, computed here in bin-index units.
    int best = -1;
    long double best_value = 0.0L;
    long double n0 = 0.0L;
    long double s0 = 0.0L;
    for (int k = 1; k < bins; ++k) {
        n0 += histogram.counts[k - 1];
        s0 += histogram.counts[k - 1] * (k - 0.5L);
        const long double n1 = n - n0;
        if (n0 <= 0.0L || n1 <= 0.0L) continue;
        const long double gap = s0 / n0 - (s - s0) / n1;
        const long double value = n0 * n1 * gap * gap;
        if (best < 0 || value > best_value * (1.0L + 1e-12L)) {
            best = k;
            best_value = value;
        }
    }
    return best;
}

double otsu_threshold(const Histogram& histogram) { return histogram.edge(otsu_split(histogram)); }

double otsu_threshold(const Grid<double>& image, int bins) { return otsu_threshold(Histogram::of(image, bins)); }

FloodMask otsu_flood_mask(const RasterStack& stack, const OtsuConfig& config) {
    config.validate();
    stack.validate();
    const auto channel = stack.channel_index(config.channel);
    if (!channel) {
        throw InputError("channel " + config.channel + " not present in the stack");
    }
    const std::size_t last = stack.dates() - 1;
    Grid<double> image = lee_filter(stack.band(last, *channel), config.lee_window);
    if (config.equalize) image = histogram_equalization(image, config.bins);
    const double threshold = otsu_threshold(image, config.bins);

    const nlohmann::json params{{"bins", config.bins},
                                {"lee_window", config.lee_window},
                                {"equalize", config.equalize},
                                {"channel", stack.channel_names()[*channel]}};
    FloodMask out{Grid<std::uint8_t>(stack.rows(), stack.cols()), stack.georef(),
                  Provenance{sha256_hex(params.dump()), stack_digest(stack)}};
    out.provenance.extra = {{"method", "otsu"}, {"params", params}, {"threshold", threshold}};
    for (std::size_t r = 0; r < stack.rows(); ++r) {
        for (std::size_t c = 0; c < stack.cols(); ++c) {
            const double v = image(r, c);
            out.mask(r, c) = is_nodata(v) ? kMaskNoData : (v < threshold ? 1 : 0);
        }
    }
    return out;
}

}  // namespace bcpflood
