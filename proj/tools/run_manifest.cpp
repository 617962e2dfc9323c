#include "run_manifest.hpp"

#include "bcpflood/errors.hpp"

#include <algorithm>
#include <fstream>

namespace bcpflood::cli {

namespace fs = std::filesystem;
using nlohmann::json;

ChannelChoice parse_channel_mode(const std::string& name) {
    if (name == "vv") return {name, {"VV"}, ChannelMode::single};
    if (name == "vh") return {name, {"VH"}, ChannelMode::single};
    if (name == "vvvh") return {name, {"VV", "VH"}, ChannelMode::pooled};
    if (name == "per-channel-max") return {name, {"VV", "VH"}, ChannelMode::per_channel_max};
    throw ParameterError("unknown channel mode '" + name + "' (vv, vh, vvvh, per-channel-max)");
}

namespace {

template <class T>
void take(const json& obj, const char* key, T& target, const std::string& where) {
    if (const auto it = obj.find(key); it != obj.end()) {
        try {
            it->get_to(target);
        } catch (const json::exception& e) {
            throw ManifestError(where + "." + key + ": " + e.what());
        }
    }
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_relative() ? base / p : p; }

const char* aggregate_name(Aggregate a) {
    switch (a) {
        case Aggregate::on: return "on";
        case Aggregate::off: return "off";
        default: return "auto";
    }
}

}  // namespace

RunManifest parse_run_manifest(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) throw ManifestError("run manifest must be a JSON object");
    static const std::vector<std::string> known{"stack",   "reference",    "output", "site", "aggregate",
                                                "workers", "channel_mode", "bcp",    "postproc", "otsu",
                                                "other_class"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ManifestError("run manifest: unknown field '" + key + "'");
        }
    }
    RunManifest m;
    std::string path;
    take(doc, "stack", path, "run");
    if (path.empty()) throw ManifestError("run manifest: 'stack' is required");
    m.stack = resolve(base_dir, path);
    if (doc.contains("reference") && !doc["reference"].is_null()) {
        take(doc, "reference", path, "run");
        m.reference = resolve(base_dir, path);
    }
    if (doc.contains("output")) {
        take(doc, "output", path, "run");
        m.output = resolve(base_dir, path);
    }
    take(doc, "site", m.site, "run");
    if (const auto it = doc.find("aggregate"); it != doc.end()) {
        if (it->is_boolean()) {
            m.aggregate = it->get<bool>() ? Aggregate::on : Aggregate::off;
        } else if (*it != "auto") {
            throw ManifestError("run.aggregate must be true, false or \"auto\"");
        }
    }
    take(doc, "workers", m.workers, "run");
    if (doc.contains("channel_mode")) {
        std::string name;
        take(doc, "channel_mode", name, "run");
        m.channel = parse_channel_mode(name);
    }
    if (doc.contains("other_class")) {
        std::string policy;
        take(doc, "other_class", policy, "run");
        if (policy != "ignore" && policy != "negative") {
            throw ManifestError("run.other_class must be ignore or negative");
        }
        m.other_class = policy == "ignore" ? OtherClassPolicy::ignore : OtherClassPolicy::negative;
    }
    if (const auto it = doc.find("bcp"); it != doc.end()) {
        take(*it, "gamma", m.bcp.gamma, "bcp");
        take(*it, "lambda", m.bcp.lambda, "bcp");
        take(*it, "iterations", m.bcp.iterations, "bcp");
        take(*it, "burn_in", m.bcp.burn_in, "bcp");
        take(*it, "seed", m.bcp.seed, "bcp");
        take(*it, "quadrature_nodes", m.bcp.quadrature_nodes, "bcp");
    }
    if (const auto it = doc.find("postproc"); it != doc.end()) {
        take(*it, "window", m.postproc.window, "postproc");
        take(*it, "threshold", m.postproc.threshold, "postproc");
    }
    if (const auto it = doc.find("otsu"); it != doc.end()) {
        take(*it, "bins", m.otsu.bins, "otsu");
        take(*it, "lee_window", m.otsu.lee_window, "otsu");
        take(*it, "equalize", m.otsu.equalize, "otsu");
        take(*it, "channel", m.otsu.channel, "otsu");
    }
    m.bcp.channel_mode = m.channel.mode;
    return m;
}

RunManifest read_run_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open run manifest " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ManifestError(path.string() + ": " + e.what());
    }
    return parse_run_manifest(doc, path.parent_path());
}

json RunManifest::to_json() const {
    return {{"stack", stack.generic_string()},
            {"reference", reference ? json(reference->generic_string()) : json()},
            {"output", output.generic_string()},
            {"site", site},
            {"aggregate", aggregate_name(aggregate)},
            {"channel_mode", channel.name},
            {"other_class", other_class == OtherClassPolicy::ignore ? "ignore" : "negative"},
            {"bcp",
             {{"gamma", bcp.gamma},
              {"lambda", bcp.lambda},
              {"iterations", bcp.iterations},
              {"burn_in", bcp.burn_in},
              {"seed", bcp.seed},
              {"quadrature_nodes", bcp.quadrature_nodes}}},
            {"postproc", {{"window", postproc.window}, {"threshold", postproc.threshold}}},
            {"otsu",
             {{"bins", otsu.bins},
              {"lee_window", otsu.lee_window},
              {"equalize", otsu.equalize},
              {"channel", otsu.channel}}}};
}

}  // namespace bcpflood::cli
