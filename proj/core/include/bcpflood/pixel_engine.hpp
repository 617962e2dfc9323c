#pragma once

#include "bcpflood/bcp.hpp"
#include "bcpflood/raster.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bcpflood {

struct Provenance {
    std::string config_digest;
    std::string stack_digest;
    nlohmann::json extra = nlohmann::json::object();  // params, method id, ...

    nlohmann::json to_json() const;
    static Provenance from_json(const nlohmann::json& doc);
};

// Event-date change probability per pixel; NaN marks NoData.
struct ProbabilityRaster {
    Grid<double> values;
    Georeference georef;
    Provenance provenance;
};

struct EngineOptions {
    std::vector<std::string> channels;  // empty: every stack channel
    unsigned workers = 0;               // 0: hardware concurrency
};

// Default worker count: BCPFLOOD_WORKERS if set and positive, else the
// hardware concurrency (at least 1).
unsigned default_workers();

// Seed for one pixel's chain, derived from the global seed and the pixel's
// own observations so that it does not depend on where the pixel sits.
std::uint64_t pixel_seed(std::uint64_t global_seed, const TimeSeriesSample& series);

// Pixel series over the selected channels; invalid dates are flagged, not
// removed.
TimeSeriesSample pixel_series(const RasterStack& stack, const std::vector<std::size_t>& channels,
                              std::size_t row, std::size_t col);

// P(change between the last two valid observations) for every pixel whose
// event date is valid and which has at least two valid dates; NoData
// elsewhere.
ProbabilityRaster run_stack(const RasterStack& stack, const BcpConfig& config,
                            const EngineOptions& options = {});

std::string stack_digest(const RasterStack& stack);
nlohmann::json config_to_json(const BcpConfig& config);
std::string config_digest(const BcpConfig& config, const std::vector<std::string>& channels);

// Float GeoTIFF plus a "<path>.json" provenance sidecar.
void write_probability(const std::filesystem::path& path, const ProbabilityRaster& raster);
ProbabilityRaster read_probability(const std::filesystem::path& path);

}  // namespace bcpflood
