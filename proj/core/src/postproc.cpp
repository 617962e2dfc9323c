#include "bcpflood/postproc.hpp"
#include "bcpflood/errors.hpp"

#include <cmath>
#include <limits>

namespace bcpflood {

namespace {

void check_window(int window) {
    if (window < 3 || window % 2 == 0) {
        throw ParameterError("window must be odd and >= 3, got " + std::to_string(window));
    }
}

void check_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ParameterError("threshold must lie in (0, 1), got " + std::to_string(threshold));
    }
}

}  // namespace

void PostprocParams::validate() const {
    check_window(window);
    check_threshold(threshold);
}

std::vector<double> sweep_thresholds() {
    std::vector<double> out;
    for (int k = 1; k <= 9; ++k) out.push_back(k / 10.0);
    return out;
}

Grid<double> box_filter(const Grid<double>& values, int window) {
    check_window(window);
    const std::size_t rows = values.rows();
    const std::size_t cols = values.cols();
    const std::ptrdiff_t half = window / 2;

    // Row pass: sums and valid counts over the horizontal window.
    Grid<double> row_sum(rows, cols);
    Grid<double> row_count(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t lo = c >= static_cast<std::size_t>(half) ? c - half : 0;
            const std::size_t hi = std::min(cols - 1, c + half);
            double sum = 0.0;
            double count = 0.0;
            for (std::size_t k = lo; k <= hi; ++k) {
                if (!is_nodata(values(r, k))) {
                    sum += values(r, k);
                    count += 1.0;
                }
            }
            row_sum(r, c) = sum;
            row_count(r, c) = count;
        }
    }

    Grid<double> out(rows, cols, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t lo = r >= static_cast<std::size_t>(half) ? r - half : 0;
        const std::size_t hi = std::min(rows - 1, r + half);
        for (std::size_t c = 0; c < cols; ++c) {
            if (is_nodata(values(r, c))) continue;
            double sum = 0.0;
            double count = 0.0;
            for (std::size_t k = lo; k <= hi; ++k) {
                sum += row_sum(k, c);
                count += row_count(k, c);
            }
            out(r, c) = sum / count;
        }
    }
    return out;
}

ProbabilityRaster box_filter(const ProbabilityRaster& prob, int window) {
    ProbabilityRaster out{box_filter(prob.values, window), prob.georef, prob.provenance};
    out.provenance.extra["window"] = window;
    return out;
}

FloodMask threshold_mask(const ProbabilityRaster& prob, double threshold) {
    check_threshold(threshold);
    FloodMask out{Grid<std::uint8_t>(prob.values.rows(), prob.values.cols()), prob.georef, prob.provenance};
    const auto in = prob.values.data();
    const auto mask = out.mask.data();
    for (std::size_t k = 0; k < in.size(); ++k) {
        mask[k] = is_nodata(in[k]) ? kMaskNoData : (in[k] > threshold ? 1 : 0);
    }
    out.provenance.extra["threshold"] = threshold;
    return out;
}

FloodMask postprocess(const ProbabilityRaster& prob, const PostprocParams& params) {
    params.validate();
    return threshold_mask(box_filter(prob, params.window), params.threshold);
}

std::vector<MetricsRecord> parameter_sweep(const ProbabilityRaster& prob, const ReferenceMap& reference,
                                           const std::string& site, const std::string& method) {
    if (!prob.values.same_shape(reference.labels) || !prob.georef.matches(reference.georef)) {
        throw GeometryError("probability raster and reference map are on different grids");
    }
    std::vector<ProbabilityRaster> smoothed;
    for (const int w : kSweepWindows) smoothed.push_back(box_filter(prob, w));

    std::vector<MetricsRecord> rows;
    for (const double t : sweep_thresholds()) {
        for (std::size_t k = 0; k < kSweepWindows.size(); ++k) {
            const FloodMask mask = threshold_mask(smoothed[k], t);
            rows.push_back(make_record(site, method, ClassScope::overall,
                                       confusion(mask, reference, ClassScope::overall), t, kSweepWindows[k]));
        }
    }
    return rows;
}

}  // namespace bcpflood
