#include "bcpflood/stack_io.hpp"
#include "bcpflood/errors.hpp"
#include "bcpflood/geotiff.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <regex>

namespace bcpflood {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Platform platform) { return platform == Platform::A ? "A" : "B"; }
std::string to_string(Orbit orbit) { return orbit == Orbit::ascending ? "ascending" : "descending"; }
std::string to_string(Units units) { return units == Units::dB ? "dB" : "linear"; }

namespace {

Platform parse_platform(const std::string& s) {
    if (s == "A" || s == "a") return Platform::A;
    if (s == "B" || s == "b") return Platform::B;
    throw ManifestError("unknown platform '" + s + "' (expected A or B)");
}

Orbit parse_orbit(const std::string& s) {
    if (s == "ascending" || s == "ASCENDING") return Orbit::ascending;
    if (s == "descending" || s == "DESCENDING") return Orbit::descending;
    throw ManifestError("unknown orbit '" + s + "' (expected ascending or descending)");
}

Units parse_units(const std::string& s) {
    if (s == "dB" || s == "db") return Units::dB;
    if (s == "linear") return Units::linear;
    throw ManifestError("unknown units '" + s + "' (expected dB or linear)");
}

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ManifestError(where + ": missing field '" + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ManifestError(where + ": field '" + key + "': " + e.what());
    }
}

double convert_units(double v, Units from, Units to) {
    if (from == to || std::isnan(v)) return v;
    if (to == Units::dB) {
        return v > 0.0 ? 10.0 * std::log10(v) : std::numeric_limits<double>::quiet_NaN();
    }
    return std::pow(10.0, v / 10.0);
}

}  // namespace

bool is_iso_date(const std::string& text) {
    static const std::regex pattern(R"((\d{4})-(\d{2})-(\d{2}))");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) return false;
    const std::chrono::year_month_day ymd{std::chrono::year{std::stoi(m[1])},
                                          std::chrono::month{static_cast<unsigned>(std::stoi(m[2]))},
                                          std::chrono::day{static_cast<unsigned>(std::stoi(m[3]))}};
    return ymd.ok();
}

void StackManifest::validate() const {
    if (entries.size() < 2) {
        throw ManifestError("manifest needs at least 2 dates, got " + std::to_string(entries.size()));
    }
    if (channels.empty()) {
        throw ManifestError("manifest lists no channels");
    }
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const StackEntry& e = entries[k];
        if (!is_iso_date(e.date)) {
            throw ManifestError("entry " + std::to_string(k) + ": '" + e.date + "' is not a YYYY-MM-DD date");
        }
        // ISO dates compare correctly as strings.
        if (k > 0 && !(entries[k - 1].date < e.date)) {
            throw ManifestError("dates not strictly increasing at " + e.date);
        }
        if (e.platform != platform || e.orbit != orbit) {
            throw ManifestError("entry " + e.date + " (" + to_string(e.platform) + ", " + to_string(e.orbit) +
                                ") violates the " + to_string(platform) + "/" + to_string(orbit) + " filter");
        }
        for (const std::string& ch : channels) {
            if (!e.channel_files.contains(ch)) {
                throw ManifestError("entry " + e.date + " has no file for channel " + ch);
            }
        }
    }
    if (event_date != entries.back().date) {
        throw ManifestError("event_date " + event_date + " is not the last entry date " + entries.back().date);
    }
}

StackManifest parse_manifest(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) {
        throw ManifestError("manifest must be a JSON object");
    }
    StackManifest m;
    m.base_dir = base_dir;
    m.event_date = field<std::string>(doc, "event_date", "manifest");
    m.platform = parse_platform(field<std::string>(doc, "platform", "manifest"));
    m.orbit = parse_orbit(field<std::string>(doc, "orbit", "manifest"));
    m.channels = field<std::vector<std::string>>(doc, "channels", "manifest");
    m.units = doc.contains("units") ? parse_units(field<std::string>(doc, "units", "manifest")) : Units::dB;
    const json dates = field<json>(doc, "dates", "manifest");
    if (!dates.is_array()) {
        throw ManifestError("manifest: 'dates' must be an array");
    }
    for (const json& item : dates) {
        StackEntry e;
        e.date = field<std::string>(item, "date", "dates[]");
        const std::string where = "date " + e.date;
        e.platform = parse_platform(field<std::string>(item, "platform", where));
        e.orbit = parse_orbit(field<std::string>(item, "orbit", where));
        for (const auto& [ch, path] : field<std::map<std::string, std::string>>(item, "files", where)) {
            e.channel_files[ch] = path;
        }
        m.entries.push_back(std::move(e));
    }
    m.validate();
    return m;
}

StackManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ManifestError("cannot open manifest " + path.string());
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ManifestError("manifest " + path.string() + ": " + e.what());
    }
    return parse_manifest(doc, path.parent_path());
}

json manifest_to_json(const StackManifest& manifest) {
    json dates = json::array();
    for (const StackEntry& e : manifest.entries) {
        json files = json::object();
        for (const auto& [ch, path] : e.channel_files) {
            files[ch] = path.generic_string();
        }
        dates.push_back({{"date", e.date},
                         {"platform", to_string(e.platform)},
                         {"orbit", to_string(e.orbit)},
                         {"files", files}});
    }
    return {{"event_date", manifest.event_date},
            {"platform", to_string(manifest.platform)},
            {"orbit", to_string(manifest.orbit)},
            {"channels", manifest.channels},
            {"units", to_string(manifest.units)},
            {"dates", dates}};
}

RasterStack load_stack(const StackManifest& manifest, const LoadOptions& options) {
    manifest.validate();
    std::vector<std::string> dates;
    for (const StackEntry& e : manifest.entries) dates.push_back(e.date);

    RasterStack stack;
    for (std::size_t t = 0; t < manifest.entries.size(); ++t) {
        const StackEntry& e = manifest.entries[t];
        for (std::size_t c = 0; c < manifest.channels.size(); ++c) {
            fs::path path = e.channel_files.at(manifest.channels[c]);
            if (path.is_relative()) path = manifest.base_dir / path;
            if (!fs::exists(path)) {
                throw InputError("missing raster " + path.string());
            }
            const RasterFile file = read_geotiff(path);
            if (file.bands.size() != 1) {
                throw InputError(path.string() + ": expected a single band, found " +
                                 std::to_string(file.bands.size()));
            }
            const Grid<double>& band = file.bands.front();
            if (t == 0 && c == 0) {
                stack = RasterStack(dates, manifest.channels, band.rows(), band.cols(), file.georef);
            } else if (band.rows() != stack.rows() || band.cols() != stack.cols() ||
                       !file.georef.matches(stack.georef())) {
                throw GeometryError(path.string() + ": grid differs from " +
                                    manifest.entries.front().channel_files.at(manifest.channels.front()).string());
            }
            for (std::size_t r = 0; r < band.rows(); ++r) {
                for (std::size_t col = 0; col < band.cols(); ++col) {
                    if (stack.nodata(t, r, col)) continue;
                    const double v = convert_units(band(r, col), manifest.units, options.working_units);
                    stack.set(t, c, r, col, static_cast<float>(v));
                }
            }
        }
    }
    return options.aggregate ? aggregate_2x2(stack) : stack;
}

StackManifest save_stack(const RasterStack& stack, const fs::path& dir, Platform platform, Orbit orbit) {
    stack.validate();
    fs::create_directories(dir);
    StackManifest m;
    m.base_dir = dir;
    m.platform = platform;
    m.orbit = orbit;
    m.channels = stack.channel_names();
    m.event_date = stack.date_labels().back();
    for (std::size_t t = 0; t < stack.dates(); ++t) {
        StackEntry e{stack.date_labels()[t], platform, orbit, {}};
        for (std::size_t c = 0; c < stack.channels(); ++c) {
            const std::string name = stack.channel_names()[c] + "_" + e.date + ".tif";
            write_float_geotiff(dir / name, stack.band(t, c), stack.georef());
            e.channel_files[stack.channel_names()[c]] = name;
        }
        m.entries.push_back(std::move(e));
    }
    m.validate();
    std::ofstream out(dir / "manifest.json");
    out << manifest_to_json(m).dump(2) << '\n';
    if (!out) {
        throw InputError("cannot write " + (dir / "manifest.json").string());
    }
    return m;
}

ReferenceMap read_reference(const fs::path& path) {
    const RasterFile file = read_geotiff(path);
    if (file.bands.size() != 1) {
        throw InputError(path.string() + ": reference map must have one band");
    }
    const Grid<double>& band = file.bands.front();
    ReferenceMap ref{Grid<std::uint8_t>(band.rows(), band.cols()), file.georef};
    for (std::size_t r = 0; r < band.rows(); ++r) {
        for (std::size_t c = 0; c < band.cols(); ++c) {
            const double v = band(r, c);
            if (std::isnan(v) || v == kMaskNoData) {
                ref.labels(r, c) = kMaskNoData;
            } else if (v == 0.0 || v == 1.0 || v == 2.0) {
                ref.labels(r, c) = static_cast<std::uint8_t>(v);
            } else {
                throw InputError(path.string() + ": label " + std::to_string(v) + " outside {0, 1, 2}");
            }
        }
    }
    return ref;
}

void write_reference(const fs::path& path, const ReferenceMap& reference) {
    reference.validate();
    write_byte_geotiff(path, reference.labels, reference.georef, kMaskNoData);
}

}  // namespace bcpflood
