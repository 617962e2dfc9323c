#include "commands.hpp"

#include "bcpflood/digest.hpp"
#include "bcpflood/errors.hpp"
#include "bcpflood/pixel_engine.hpp"
#include "bcpflood/stack_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bcpflood::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_stage = "startup";

void enter(const char* stage) { g_stage = stage; }

std::string fixed(double v, int digits = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return sha256_hex(bytes.str());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw InputError("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string method_id(const RunManifest& run) { return "bcp-" + run.channel.name; }

std::vector<MetricsRecord> evaluate_all(const FloodMask& mask, const ReferenceMap& reference, const std::string& site,
                                        const std::string& method, OtherClassPolicy policy,
                                        std::optional<double> t = {}, std::optional<int> w = {}) {
    std::vector<MetricsRecord> rows;
    for (const ClassScope scope : {ClassScope::overall, ClassScope::open, ClassScope::urban}) {
        rows.push_back(make_record(site, method, scope, confusion(mask, reference, scope, policy), t, w));
    }
    return rows;
}

ProbabilityRaster detect(const RunManifest& run, const RasterStack& stack, std::ostream& out) {
    enter("detect");
    EngineOptions options;
    options.channels = run.channel.channels;
    options.workers = run.workers ? run.workers : default_workers();
    out << "running BCP (" << run.channel.name << ", " << run.bcp.iterations << "/" << run.bcp.burn_in
        << " sweeps) on " << stack.rows() << "x" << stack.cols() << "x" << stack.dates() << " with "
        << options.workers << " worker(s)\n";
    ProbabilityRaster prob = run_stack(stack, run.bcp, options);
    prob.provenance.extra = {{"method", method_id(run)}, {"bcp", config_to_json(run.bcp)},
                             {"channels", run.channel.channels}};
    return prob;
}

}  // namespace

const std::string& current_stage() { return g_stage; }

SceneSpec resolve_scene_spec(const SynthOptions& options) {
    enter("spec");
    SceneSpec spec;
    if (options.spec_file) {
        std::ifstream in(*options.spec_file);
        if (!in) throw SpecError("cannot open scene spec " + options.spec_file->string());
        try {
            spec = json::parse(in).get<SceneSpec>();
        } catch (const json::exception& e) {
            throw SpecError(options.spec_file->string() + ": " + e.what());
        }
    } else if (options.preset == "default") {
        spec = SceneSpec{};
    } else if (options.preset == "negative") {
        spec = negative_control_spec();
    } else if (options.preset == "permanent-water") {
        spec = permanent_water_spec();
    } else {
        throw ParameterError("unknown preset '" + options.preset + "' (default, negative, permanent-water)");
    }
    if (options.seed) spec.seed = *options.seed;
    spec.validate();
    return spec;
}

Inputs load_inputs(const RunManifest& run, std::ostream& log) {
    enter("load");
    Inputs inputs;
    const StackManifest manifest = read_manifest(run.stack);
    inputs.stack = load_stack(manifest);
    const bool fine = inputs.stack.resolution_m() < 15.0;
    if (run.aggregate == Aggregate::on || (run.aggregate == Aggregate::automatic && fine)) {
        enter("aggregate");
        inputs.stack = aggregate_2x2(inputs.stack);
        log << "aggregated to " << inputs.stack.resolution_m() << " m grid\n";
    }
    if (run.reference) {
        enter("load-reference");
        if (!fs::exists(*run.reference)) {
            log << "warning: reference map " << run.reference->string() << " not found; skipping evaluation\n";
        } else {
            inputs.reference = read_reference(*run.reference);
            const Grid<std::uint8_t>& labels = inputs.reference->labels;
            if (labels.rows() != inputs.stack.rows() || labels.cols() != inputs.stack.cols() ||
                !inputs.reference->georef.matches(inputs.stack.georef())) {
                throw GeometryError("reference map grid does not match the stack grid");
            }
        }
    } else {
        log << "warning: no reference map configured; skipping evaluation\n";
    }
    return inputs;
}

int cmd_synth(const SynthOptions& options, std::ostream& out) {
    const SceneSpec spec = resolve_scene_spec(options);
    enter("synthesize");
    const Scene scene = synth_scene(spec);
    enter("write");
    fs::create_directories(options.output);
    save_stack(scene.stack, options.output);
    write_reference(options.output / "reference.tif", scene.reference);
    write_json(options.output / "scene.json", json(spec));
    out << "wrote " << spec.height << "x" << spec.width << "x" << spec.n_dates << " scene to "
        << options.output.string() << "\n";
    out << "stack_digest " << stack_digest(scene.stack) << "\n";
    out << "reference_digest " << file_digest(options.output / "reference.tif") << "\n";
    return 0;
}

int cmd_run(const RunManifest& run, bool emit_plots, std::ostream& out) {
    enter("config");
    run.bcp.validate();
    run.postproc.validate();
    const Inputs inputs = load_inputs(run, out);
    const ProbabilityRaster prob = detect(run, inputs.stack, out);

    enter("postproc");
    const FloodMask mask = postprocess(prob, run.postproc);

    enter("write");
    fs::create_directories(run.output);
    write_probability(run.output / "probability.tif", prob);
    write_mask(run.output / "flood_mask.tif", mask);
    if (emit_plots) write_text(run.output / "probability.svg", probability_svg(prob));
    json summary{{"run", run.to_json()},
                 {"provenance", mask.provenance.to_json()},
                 {"flood_pixels", mask.flood_count()}};

    if (inputs.reference) {
        enter("evaluate");
        const auto rows = evaluate_all(mask, *inputs.reference, run.site, method_id(run), run.other_class,
                                       run.postproc.threshold, run.postproc.window);
        write_metrics_csv(run.output / "metrics.csv", rows);
        for (const MetricsRecord& r : rows) {
            out << to_string(r.scope) << ": precision " << fixed(r.scores.precision) << " recall "
                << fixed(r.scores.recall) << " F1 " << fixed(r.scores.f1) << " IoU " << fixed(r.scores.iou) << "\n";
        }
        summary["f1"] = rows.front().scores.f1;
    }
    write_json(run.output / "run.json", summary);
    out << "flood pixels: " << mask.flood_count() << "\n";
    return 0;
}

int cmd_sweep(const RunManifest& run, bool emit_plots, int chip_size, std::ostream& out) {
    enter("config");
    run.bcp.validate();
    if (chip_size < 1) throw ParameterError("chip size must be positive");
    const Inputs inputs = load_inputs(run, out);
    if (!inputs.reference) throw InputError("sweep needs a reference map");
    const ReferenceMap& reference = *inputs.reference;
    const ProbabilityRaster prob = detect(run, inputs.stack, out);

    enter("sweep");
    const std::vector<MetricsRecord> rows = parameter_sweep(prob, reference, run.site, method_id(run));
    std::size_t best = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        if (rows[k].scores.f1 > rows[best].scores.f1) best = k;
    }

    // Per-chip F1 for every cell, then a paired test of each cell against
    // the best one.
    const std::size_t chip = static_cast<std::size_t>(chip_size);
    const std::size_t chip_rows = (prob.values.rows() + chip - 1) / chip;
    const std::size_t chip_cols = (prob.values.cols() + chip - 1) / chip;
    std::vector<std::vector<double>> chip_f1(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const FloodMask mask = threshold_mask(box_filter(prob, *rows[k].window), *rows[k].threshold);
        for (std::size_t cr = 0; cr < chip_rows; ++cr) {
            for (std::size_t cc = 0; cc < chip_cols; ++cc) {
                ConfusionCounts counts;
                for (std::size_t r = cr * chip; r < std::min(mask.mask.rows(), (cr + 1) * chip); ++r) {
                    for (std::size_t c = cc * chip; c < std::min(mask.mask.cols(), (cc + 1) * chip); ++c) {
                        const std::uint8_t p = mask.mask(r, c);
                        const std::uint8_t l = reference.labels(r, c);
                        if (p == kMaskNoData || l == kMaskNoData) continue;
                        const bool pos = l == 1 || l == 2;
                        if (p == 1) {
                            ++(pos ? counts.tp : counts.fp);
                        } else {
                            ++(pos ? counts.fn : counts.tn);
                        }
                    }
                }
                chip_f1[k].push_back(metrics(counts).f1);
            }
        }
    }

    enter("write");
    fs::create_directories(run.output);
    write_probability(run.output / "probability.tif", prob);
    write_sweep_csv(run.output / "sweep.csv", rows);
    std::ostringstream table;
    table << "t,w,f1,mean_chip_f1,std_chip_f1,p_value\n";
    const bool testable = chip_f1[best].size() >= 5;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& v = chip_f1[k];
        double mean = 0.0;
        for (const double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (const double x : v) var += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
        table << *rows[k].threshold << ',' << *rows[k].window << ',' << fixed(rows[k].scores.f1, 6) << ','
              << fixed(mean, 6) << ',' << fixed(sd, 6) << ','
              << (testable ? fixed(paired_significance(chip_f1[best], v), 6) : std::string("")) << '\n';
    }
    write_text(run.output / "sweep_significance.csv", table.str());
    if (emit_plots) write_text(run.output / "sweep_f1.svg", sweep_heatmap_svg(rows));
    write_json(run.output / "sweep.json",
               {{"run", run.to_json()},
                {"provenance", prob.provenance.to_json()},
                {"best", {{"t", *rows[best].threshold}, {"w", *rows[best].window}, {"f1", rows[best].scores.f1}}},
                {"chips", chip_f1[best].size()}});
    out << rows.size() << " sweep rows; best t=" << *rows[best].threshold << " w=" << *rows[best].window
        << " F1 " << fixed(rows[best].scores.f1) << "\n";
    return 0;
}

int cmd_otsu(const RunManifest& run, std::ostream& out) {
    enter("config");
    run.otsu.validate();
    const Inputs inputs = load_inputs(run, out);
    enter("otsu");
    const FloodMask mask = otsu_flood_mask(inputs.stack, run.otsu);
    std::string channel = run.otsu.channel;
    std::transform(channel.begin(), channel.end(), channel.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const std::string method = "otsu-" + channel;

    enter("write");
    fs::create_directories(run.output);
    write_mask(run.output / (method + "_mask.tif"), mask);
    json summary{{"run", run.to_json()}, {"provenance", mask.provenance.to_json()},
                 {"flood_pixels", mask.flood_count()}};
    if (inputs.reference) {
        enter("evaluate");
        const auto rows = evaluate_all(mask, *inputs.reference, run.site, method, run.other_class);
        write_metrics_csv(run.output / (method + "_metrics.csv"), rows);
        for (const MetricsRecord& r : rows) {
            out << method << " " << to_string(r.scope) << ": precision " << fixed(r.scores.precision) << " recall "
                << fixed(r.scores.recall) << " F1 " << fixed(r.scores.f1) << "\n";
        }
        summary["f1"] = rows.front().scores.f1;
    }
    write_json(run.output / (method + ".json"), summary);
    out << "threshold " << mask.provenance.extra["threshold"].get<double>() << ", flood pixels "
        << mask.flood_count() << "\n";
    return 0;
}

int cmd_evaluate(const fs::path& mask_path, const fs::path& reference_path, const fs::path& csv,
                 const std::string& site, const std::string& method, OtherClassPolicy policy, std::ostream& out) {
    enter("load");
    const FloodMask mask = read_mask(mask_path);
    const ReferenceMap reference = read_reference(reference_path);
    enter("evaluate");
    const auto rows = evaluate_all(mask, reference, site, method, policy);
    enter("write");
    if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
    write_metrics_csv(csv, rows);
    for (const MetricsRecord& r : rows) {
        out << to_string(r.scope) << ": TP " << r.counts.tp << " FP " << r.counts.fp << " FN " << r.counts.fn
            << " F1 " << fixed(r.scores.f1) << " IoU " << fixed(r.scores.iou) << "\n";
    }
    return 0;
}

std::string sweep_heatmap_svg(std::span<const MetricsRecord> rows) {
    constexpr int cell = 48;
    constexpr int left = 60;
    constexpr int top = 30;
    const auto thresholds = sweep_thresholds();
    const int width = left + cell * static_cast<int>(kSweepWindows.size()) + 20;
    const int height = top + cell * static_cast<int>(thresholds.size()) + 50;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">F1 by window (x) and threshold (y)</text>\n";
    for (const MetricsRecord& r : rows) {
        const auto wi = std::find(kSweepWindows.begin(), kSweepWindows.end(), *r.window) - kSweepWindows.begin();
        const auto ti = std::lround(*r.threshold * 10.0) - 1;
        const int x = left + static_cast<int>(wi) * cell;
        const int y = top + static_cast<int>(ti) * cell;
        // Dark blue (low) to yellow (high).
        const double f = std::clamp(r.scores.f1, 0.0, 1.0);
        const int red = static_cast<int>(std::lround(40 + 215 * f));
        const int green = static_cast<int>(std::lround(30 + 200 * f));
        const int blue = static_cast<int>(std::lround(120 * (1.0 - f)));
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
            << "\" fill=\"rgb(" << red << "," << green << "," << blue << ")\"/>\n";
        svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
            << (f > 0.5 ? "black" : "white") << "\">" << fixed(r.scores.f1, 2) << "</text>\n";
    }
    for (std::size_t k = 0; k < kSweepWindows.size(); ++k) {
        svg << "<text x=\"" << left + static_cast<int>(k) * cell + cell / 2 << "\" y=\""
            << top + cell * static_cast<int>(thresholds.size()) + 16 << "\" text-anchor=\"middle\">"
            << kSweepWindows[k] << "</text>\n";
    }
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
        svg << "<text x=\"" << left - 8 << "\" y=\"" << top + static_cast<int>(k) * cell + cell / 2 + 4
            << "\" text-anchor=\"end\">" << fixed(thresholds[k], 1) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string probability_svg(const ProbabilityRaster& prob) {
    constexpr int px = 4;
    const Grid<double>& v = prob.values;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << v.cols() * px << "\" height=\"" << v.rows() * px
        << "\" shape-rendering=\"crispEdges\">\n";
    for (std::size_t r = 0; r < v.rows(); ++r) {
        for (std::size_t c = 0; c < v.cols(); ++c) {
            std::string fill = "rgb(200,0,0)";
            if (!is_nodata(v(r, c))) {
                const int g = static_cast<int>(std::lround(255.0 * std::clamp(v(r, c), 0.0, 1.0)));
                fill = "rgb(" + std::to_string(g) + "," + std::to_string(g) + "," + std::to_string(g) + ")";
            }
            svg << "<rect x=\"" << c * px << "\" y=\"" << r * px << "\" width=\"" << px << "\" height=\"" << px
                << "\" fill=\"" << fill << "\"/>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace bcpflood::cli
