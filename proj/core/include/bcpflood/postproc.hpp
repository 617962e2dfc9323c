#pragma once

#include "bcpflood/mask.hpp"
#include "bcpflood/metrics.hpp"
#include "bcpflood/pixel_engine.hpp"

#include <array>
#include <vector>

namespace bcpflood {

struct PostprocParams {
    int window = 9;
    double threshold = 0.2;

    // Throws ParameterError for an even or < 3 window, or t outside (0, 1).
    void validate() const;
};

inline constexpr std::array<int, 7> kSweepWindows{3, 5, 7, 9, 11, 13, 15};
// Thresholds 0.1 .. 0.9; computed as k / 10.0 so they print cleanly.
std::vector<double> sweep_thresholds();

// Mean of the valid cells in the w x w window centered on each cell; the
// window is clipped at the grid border. NoData stays NoData.
Grid<double> box_filter(const Grid<double>& values, int window);
ProbabilityRaster box_filter(const ProbabilityRaster& prob, int window);

// value > t; NoData preserved.
FloodMask threshold_mask(const ProbabilityRaster& prob, double threshold);

// Box filter then threshold.
FloodMask postprocess(const ProbabilityRaster& prob, const PostprocParams& params);

// 63 overall-scope records ordered by (t, w).
std::vector<MetricsRecord> parameter_sweep(const ProbabilityRaster& prob, const ReferenceMap& reference,
                                           const std::string& site = "scene", const std::string& method = "bcp");

}  // namespace bcpflood
