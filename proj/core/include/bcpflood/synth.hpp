#pragma once
// Synthetic flood scenes: seasonal dB baselines with Gaussian noise and a
// change injected at the last date inside a polygon.

#include "bcpflood/raster.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace bcpflood {

// Vertices in pixel coordinates: x along columns, y along rows, (0, 0) at
// the top-left corner of the grid. A pixel is inside when its center is.
using Polygon = std::vector<std::array<double, 2>>;

bool point_in_polygon(const Polygon& polygon, double x, double y);
double polygon_area(const Polygon& polygon);

struct SceneSpec {
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t n_dates = 12;
    std::string start_date = "2022-01-03";
    int revisit_days = 30;

    std::vector<std::string> channels{"VV", "VH"};
    std::vector<double> base_level_dB{-10.0, -17.0};

    double seasonal_amplitude_dB = 1.0;
    double seasonal_period_days = 365.0;
    double speckle_sigma_dB = 1.0;

    Polygon flood_polygon{{0.0, 0.0}, {36.0, 0.0}, {28.0, 64.0}, {0.0, 64.0}};
    // Added at the last date; negative darkens.
    double flood_drop_dB = -8.0;

    // Static dark region, labelled 0 in the reference.
    Polygon permanent_water;
    std::vector<double> water_level_dB{-22.0, -28.0};

    // Flooded pixels inside this polygon are labelled 2 and get
    // urban_change_dB instead of flood_drop_dB; the whole polygon sits
    // urban_offset_dB above the background.
    Polygon urban_polygon;
    double urban_offset_dB = 6.0;
    double urban_change_dB = 3.0;

    std::array<double, 6> transform{500000.0, 20.0, 0.0, 4000000.0, 0.0, -20.0};
    std::string crs = "EPSG:32650";

    std::uint64_t seed = 42;

    // Throws SpecError.
    void validate() const;
};

void to_json(nlohmann::json& doc, const SceneSpec& spec);
void from_json(const nlohmann::json& doc, SceneSpec& spec);

struct Scene {
    RasterStack stack;
    ReferenceMap reference;
};

Scene synth_scene(const SceneSpec& spec);

// Default scene with the flood drop removed.
SceneSpec negative_control_spec();
// Default scene plus a static dark band along the right edge.
SceneSpec permanent_water_spec();

}  // namespace bcpflood
