#pragma once
// Run manifest: one JSON file naming the inputs, the output directory and
// any parameter overrides for run/sweep/otsu.
//
//   {
//     "stack": "scene/manifest.json",
//     "reference": "scene/reference.tif",      // optional
//     "output": "out",
//     "site": "synthetic",
//     "aggregate": "auto",                     // "auto", true or false
//     "workers": 4,
//     "channel_mode": "vvvh",                  // vv, vh, vvvh, per-channel-max
//     "bcp": {"gamma": 0.2, "lambda": 0.2, "iterations": 500, "burn_in": 50, "seed": 0},
//     "postproc": {"window": 9, "threshold": 0.2},
//     "otsu": {"bins": 256, "lee_window": 7, "equalize": true, "channel": "VV"}
//   }
//
// Relative paths resolve against the manifest's directory.

#include "bcpflood/bcp.hpp"
#include "bcpflood/metrics.hpp"
#include "bcpflood/otsu.hpp"
#include "bcpflood/postproc.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bcpflood::cli {

enum class Aggregate { automatic, on, off };

// Channel selection plus pooling mode behind --channel-mode.
struct ChannelChoice {
    std::string name = "vvvh";
    std::vector<std::string> channels{"VV", "VH"};
    ChannelMode mode = ChannelMode::pooled;
};

// Throws ParameterError for an unknown name.
ChannelChoice parse_channel_mode(const std::string& name);

struct RunManifest {
    std::filesystem::path stack;
    std::optional<std::filesystem::path> reference;
    std::filesystem::path output = "out";
    std::string site = "scene";
    Aggregate aggregate = Aggregate::automatic;
    unsigned workers = 0;
    ChannelChoice channel;
    BcpConfig bcp;
    PostprocParams postproc;
    OtsuConfig otsu;
    OtherClassPolicy other_class = OtherClassPolicy::ignore;

    nlohmann::json to_json() const;
};

// Throws ManifestError on malformed documents.
RunManifest parse_run_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunManifest read_run_manifest(const std::filesystem::path& path);

}  // namespace bcpflood::cli
