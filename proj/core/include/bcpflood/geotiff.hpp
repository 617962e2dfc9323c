#pragma once
// Minimal GeoTIFF reader/writer on top of libtiff. Handles north-up
// rasters described by ModelPixelScale + ModelTiepoint (or
// ModelTransformation on read), an EPSG code in the GeoKey directory and
// the GDAL_NODATA ASCII tag.

#include "bcpflood/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace bcpflood {

struct RasterFile {
    std::vector<Grid<double>> bands;  // NoData cells are NaN
    Georeference georef;
    std::optional<double> nodata;
    int bits_per_sample = 0;
    bool floating_point = false;
};

RasterFile read_geotiff(const std::filesystem::path& path);

// 32-bit float, pixel-interleaved bands, NoData written as NaN with a
// "nan" GDAL_NODATA tag.
void write_float_geotiff(const std::filesystem::path& path, std::span<const Grid<float>> bands,
                         const Georeference& georef);
void write_float_geotiff(const std::filesystem::path& path, const Grid<double>& band,
                         const Georeference& georef);

void write_byte_geotiff(const std::filesystem::path& path, const Grid<std::uint8_t>& band,
                        const Georeference& georef, std::optional<std::uint8_t> nodata);

}  // namespace bcpflood
