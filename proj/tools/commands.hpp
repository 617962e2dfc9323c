#pragma once

#include "run_manifest.hpp"

#include "bcpflood/synth.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace bcpflood::cli {

// Name of the pipeline stage that was running when an error escaped.
const std::string& current_stage();

struct SynthOptions {
    std::optional<std::filesystem::path> spec_file;
    std::string preset = "default";  // default, negative, permanent-water
    std::filesystem::path output = "scene";
    std::optional<std::uint64_t> seed;
};

SceneSpec resolve_scene_spec(const SynthOptions& options);

struct Inputs {
    RasterStack stack;
    std::optional<ReferenceMap> reference;
};

// Loads the stack (aggregating 10 m-class grids unless told otherwise) and
// the reference map when one is configured and present.
Inputs load_inputs(const RunManifest& run, std::ostream& log);

int cmd_synth(const SynthOptions& options, std::ostream& out);
int cmd_run(const RunManifest& run, bool emit_plots, std::ostream& out);
int cmd_sweep(const RunManifest& run, bool emit_plots, int chip_size, std::ostream& out);
int cmd_otsu(const RunManifest& run, std::ostream& out);
int cmd_evaluate(const std::filesystem::path& mask, const std::filesystem::path& reference,
                 const std::filesystem::path& csv, const std::string& site, const std::string& method,
                 OtherClassPolicy policy, std::ostream& out);

// F1 heatmap over the sweep grid: windows along x, thresholds along y.
std::string sweep_heatmap_svg(std::span<const MetricsRecord> rows);
// Probability raster as a grey-scale SVG (NoData drawn red).
std::string probability_svg(const ProbabilityRaster& prob);

}  // namespace bcpflood::cli
