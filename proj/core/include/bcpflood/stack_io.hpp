#pragma once
// Stack manifests and raster-stack persistence.
//
// Manifest JSON:
//   {
//     "event_date": "2021-07-27",
//     "platform": "A",                 // filter every entry must match
//     "orbit": "ascending",
//     "channels": ["VV", "VH"],
//     "units": "dB",                   // "dB" or "linear", units of the files
//     "dates": [
//       {"date": "2020-08-02", "platform": "A", "orbit": "ascending",
//        "files": {"VV": "vv_2020-08-02.tif", "VH": "vh_2020-08-02.tif"}},
//       ...
//     ]
//   }
// Relative file paths resolve against the manifest's directory.

#include "bcpflood/raster.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace bcpflood {

enum class Platform { A, B };
enum class Orbit { ascending, descending };
enum class Units { dB, linear };

struct StackEntry {
    std::string date;  // YYYY-MM-DD
    Platform platform = Platform::A;
    Orbit orbit = Orbit::ascending;
    std::map<std::string, std::filesystem::path> channel_files;
};

struct StackManifest {
    std::vector<StackEntry> entries;
    std::string event_date;
    Platform platform = Platform::A;
    Orbit orbit = Orbit::ascending;
    std::vector<std::string> channels;
    Units units = Units::dB;
    std::filesystem::path base_dir;

    // Dates strictly increasing, event date equal to the last entry, every
    // entry matching the platform/orbit filter and listing every channel.
    // Throws ManifestError.
    void validate() const;
};

StackManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
StackManifest read_manifest(const std::filesystem::path& path);
nlohmann::json manifest_to_json(const StackManifest& manifest);

// True for a well-formed proleptic Gregorian YYYY-MM-DD string.
bool is_iso_date(const std::string& text);

struct LoadOptions {
    bool aggregate = false;          // 2x2 mean aggregation after reading
    Units working_units = Units::dB;
};

// Reads every date/channel file; a date-pixel is NoData if any channel is.
RasterStack load_stack(const StackManifest& manifest, const LoadOptions& options = {});

// Writes one single-band float GeoTIFF per date and channel plus
// manifest.json into `dir`; returns the manifest written.
StackManifest save_stack(const RasterStack& stack, const std::filesystem::path& dir,
                         Platform platform = Platform::A, Orbit orbit = Orbit::ascending);

ReferenceMap read_reference(const std::filesystem::path& path);
void write_reference(const std::filesystem::path& path, const ReferenceMap& reference);

std::string to_string(Platform platform);
std::string to_string(Orbit orbit);
std::string to_string(Units units);

}  // namespace bcpflood
