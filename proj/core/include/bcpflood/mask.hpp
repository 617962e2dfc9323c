#pragma once

#include "bcpflood/pixel_engine.hpp"
#include "bcpflood/raster.hpp"

#include <cstdint>
#include <filesystem>

namespace bcpflood {

// 1 = flood, 0 = dry, kMaskNoData = no observation.
struct FloodMask {
    Grid<std::uint8_t> mask;
    Georeference georef;
    Provenance provenance;

    std::size_t flood_count() const;
};

// 8-bit GeoTIFF with NoData 255 plus a "<path>.json" provenance sidecar.
void write_mask(const std::filesystem::path& path, const FloodMask& mask);
FloodMask read_mask(const std::filesystem::path& path);

}  // namespace bcpflood
