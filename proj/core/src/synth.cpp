#include "bcpflood/synth.hpp"
#include "bcpflood/bcp.hpp"
#include "bcpflood/errors.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <cmath>
#include <numbers>

namespace bcpflood {

using nlohmann::json;

bool point_in_polygon(const Polygon& polygon, double x, double y) {
    bool inside = false;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = polygon[i];
        const auto& b = polygon[j];
        if ((a[1] > y) != (b[1] > y)) {
            const double cross = (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]) + a[0];
            if (x < cross) inside = !inside;
        }
    }
    return inside;
}

double polygon_area(const Polygon& polygon) {
    double twice = 0.0;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        twice += polygon[j][0] * polygon[i][1] - polygon[i][0] * polygon[j][1];
    }
    return std::abs(twice) / 2.0;
}

namespace {

void check_polygon(const Polygon& polygon, const char* name, std::size_t rows, std::size_t cols) {
    if (polygon.size() < 3) {
        throw SpecError(std::string(name) + ": needs at least 3 vertices, got " + std::to_string(polygon.size()));
    }
    for (const auto& v : polygon) {
        if (!std::isfinite(v[0]) || !std::isfinite(v[1])) {
            throw SpecError(std::string(name) + ": non-finite vertex");
        }
    }
    if (!(polygon_area(polygon) > 0.0)) {
        throw SpecError(std::string(name) + ": zero-area polygon");
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (point_in_polygon(polygon, c + 0.5, r + 0.5)) return;
        }
    }
    throw SpecError(std::string(name) + ": polygon covers no pixel of the " + std::to_string(rows) + "x" +
                    std::to_string(cols) + " grid");
}

std::chrono::sys_days parse_day(const std::string& text) {
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    if (std::sscanf(text.c_str(), "%d-%u-%u", &y, &m, &d) != 3) {
        throw SpecError("start_date '" + text + "' is not YYYY-MM-DD");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        throw SpecError("start_date '" + text + "' is not a calendar date");
    }
    return ymd;
}

std::string format_day(std::chrono::sys_days day) {
    const std::chrono::year_month_day ymd{day};
    char text[16];
    std::snprintf(text, sizeof text, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return text;
}

// Box-Muller on our own uniforms so the stream is identical across
// standard library implementations.
class Normal {
public:
    explicit Normal(std::uint64_t seed) : rng_(seed) {}
    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01(rng_);  // (0, 1]
        const double u2 = uniform01(rng_);
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    Rng rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace

void SceneSpec::validate() const {
    if (height == 0 || width == 0) throw SpecError("grid must be non-empty");
    if (n_dates < 2) throw SpecError("n_dates must be at least 2");
    if (revisit_days < 1) throw SpecError("revisit_days must be positive");
    if (channels.empty()) throw SpecError("at least one channel is required");
    if (base_level_dB.size() != channels.size()) {
        throw SpecError("base_level_dB needs one value per channel");
    }
    if (!(speckle_sigma_dB >= 0.0) || !(seasonal_period_days > 0.0)) {
        throw SpecError("speckle_sigma_dB must be >= 0 and seasonal_period_days > 0");
    }
    if (!std::isfinite(flood_drop_dB) || !std::isfinite(seasonal_amplitude_dB)) {
        throw SpecError("non-finite scene amplitude");
    }
    parse_day(start_date);
    check_polygon(flood_polygon, "flood_polygon", height, width);
    if (!permanent_water.empty()) {
        check_polygon(permanent_water, "permanent_water", height, width);
        if (water_level_dB.size() != channels.size()) {
            throw SpecError("water_level_dB needs one value per channel");
        }
    }
    if (!urban_polygon.empty()) {
        check_polygon(urban_polygon, "urban_polygon", height, width);
    }
    if (!(transform[1] > 0.0) || !(transform[5] < 0.0)) {
        throw SpecError("transform must be north-up with positive pixel size");
    }
}

void to_json(json& doc, const SceneSpec& s) {
    doc = json{{"height", s.height},
               {"width", s.width},
               {"n_dates", s.n_dates},
               {"start_date", s.start_date},
               {"revisit_days", s.revisit_days},
               {"channels", s.channels},
               {"base_level_dB", s.base_level_dB},
               {"seasonal_amplitude_dB", s.seasonal_amplitude_dB},
               {"seasonal_period_days", s.seasonal_period_days},
               {"speckle_sigma_dB", s.speckle_sigma_dB},
               {"flood_polygon", s.flood_polygon},
               {"flood_drop_dB", s.flood_drop_dB},
               {"permanent_water", s.permanent_water},
               {"water_level_dB", s.water_level_dB},
               {"urban_polygon", s.urban_polygon},
               {"urban_offset_dB", s.urban_offset_dB},
               {"urban_change_dB", s.urban_change_dB},
               {"transform", s.transform},
               {"crs", s.crs},
               {"seed", s.seed}};
}

void from_json(const json& doc, SceneSpec& s) {
    if (!doc.is_object()) throw SpecError("scene spec must be a JSON object");
    SceneSpec defaults;
    json known;
    to_json(known, defaults);
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) throw SpecError("unknown scene spec field '" + key + "'");
    }
    auto take = [&doc](const char* key, auto& target) {
        if (const auto it = doc.find(key); it != doc.end()) {
            try {
                it->get_to(target);
            } catch (const json::exception& e) {
                throw SpecError(std::string("scene spec field '") + key + "': " + e.what());
            }
        }
    };
    s = defaults;
    take("height", s.height);
    take("width", s.width);
    take("n_dates", s.n_dates);
    take("start_date", s.start_date);
    take("revisit_days", s.revisit_days);
    take("channels", s.channels);
    take("base_level_dB", s.base_level_dB);
    take("seasonal_amplitude_dB", s.seasonal_amplitude_dB);
    take("seasonal_period_days", s.seasonal_period_days);
    take("speckle_sigma_dB", s.speckle_sigma_dB);
    take("flood_polygon", s.flood_polygon);
    take("flood_drop_dB", s.flood_drop_dB);
    take("permanent_water", s.permanent_water);
    take("water_level_dB", s.water_level_dB);
    take("urban_polygon", s.urban_polygon);
    take("urban_offset_dB", s.urban_offset_dB);
    take("urban_change_dB", s.urban_change_dB);
    take("transform", s.transform);
    take("crs", s.crs);
    take("seed", s.seed);
}

Scene synth_scene(const SceneSpec& spec) {
    spec.validate();
    const std::size_t rows = spec.height;
    const std::size_t cols = spec.width;
    const std::size_t channels = spec.channels.size();

    const std::chrono::sys_days start = parse_day(spec.start_date);
    std::vector<std::string> dates;
    std::vector<double> seasonal;
    for (std::size_t t = 0; t < spec.n_dates; ++t) {
        const double day = static_cast<double>(t) * spec.revisit_days;
        dates.push_back(format_day(start + std::chrono::days{static_cast<int>(t) * spec.revisit_days}));
        seasonal.push_back(spec.seasonal_amplitude_dB *
                           std::sin(2.0 * std::numbers::pi * day / spec.seasonal_period_days));
    }

    Georeference georef{spec.transform, spec.crs};
    Scene scene{RasterStack(dates, spec.channels, rows, cols, georef),
                ReferenceMap{Grid<std::uint8_t>(rows, cols, 0), georef}};

    enum Cover : std::uint8_t { land, water, urban };
    Grid<std::uint8_t> cover(rows, cols, land);
    Grid<std::uint8_t> flooded(rows, cols, 0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double x = c + 0.5;
            const double y = r + 0.5;
            if (!spec.urban_polygon.empty() && point_in_polygon(spec.urban_polygon, x, y)) {
                cover(r, c) = urban;
            } else if (!spec.permanent_water.empty() && point_in_polygon(spec.permanent_water, x, y)) {
                cover(r, c) = water;
            }
            // Already-wet pixels cannot flood.
            if (cover(r, c) != water && point_in_polygon(spec.flood_polygon, x, y)) {
                flooded(r, c) = 1;
                scene.reference.labels(r, c) = cover(r, c) == urban ? 2 : 1;
            }
        }
    }

    Normal normal(spec.seed);
    const std::size_t last = spec.n_dates - 1;
    for (std::size_t t = 0; t < spec.n_dates; ++t) {
        for (std::size_t ch = 0; ch < channels; ++ch) {
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    double level = spec.base_level_dB[ch] + seasonal[t];
                    if (cover(r, c) == water) {
                        level = spec.water_level_dB[ch] + seasonal[t];
                    } else if (cover(r, c) == urban) {
                        level += spec.urban_offset_dB;
                    }
                    if (t == last && flooded(r, c)) {
                        level += cover(r, c) == urban ? spec.urban_change_dB : spec.flood_drop_dB;
                    }
                    const double v = level + spec.speckle_sigma_dB * normal();
                    scene.stack.set(t, ch, r, c, static_cast<float>(v));
                }
            }
        }
    }
    return scene;
}

SceneSpec negative_control_spec() {
    SceneSpec spec;
    spec.flood_drop_dB = 0.0;
    return spec;
}

SceneSpec permanent_water_spec() {
    SceneSpec spec;
    spec.permanent_water = {{48.0, 0.0}, {64.0, 0.0}, {64.0, 64.0}, {48.0, 64.0}};
    return spec;
}

}  // namespace bcpflood
