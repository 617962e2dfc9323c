#include "commands.hpp"

#include "bcpflood/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace bcpflood;
using namespace bcpflood::cli;

// Exit codes.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kInternal = 3;

struct RunFlags {
    std::string manifest;
    std::string stack;
    std::string reference;
    std::string output;
    std::string site;
    std::uint64_t seed = 0;
    double gamma = 0.2;
    double lambda = 0.2;
    int iterations = 500;
    int burn_in = 50;
    int window = 9;
    double threshold = 0.2;
    std::string channel_mode;
    unsigned workers = 0;
    bool no_aggregate = false;
    bool emit_plots = false;
    bool negative_other = false;
    std::string otsu_channel;
    int chip_size = 16;
};

struct RunOptions {
    CLI::Option* seed = nullptr;
    CLI::Option* gamma = nullptr;
    CLI::Option* lambda = nullptr;
    CLI::Option* iterations = nullptr;
    CLI::Option* burn_in = nullptr;
    CLI::Option* window = nullptr;
    CLI::Option* threshold = nullptr;
    CLI::Option* workers = nullptr;
};

RunOptions add_run_flags(CLI::App& cmd, RunFlags& f) {
    RunOptions o;
    cmd.add_option("--manifest,-m", f.manifest, "Run manifest JSON");
    cmd.add_option("--stack", f.stack, "Stack manifest JSON (instead of --manifest)");
    cmd.add_option("--reference", f.reference, "Reference map GeoTIFF");
    cmd.add_option("--out,-o", f.output, "Output directory");
    cmd.add_option("--site", f.site, "Site id written to metrics");
    o.seed = cmd.add_option("--seed", f.seed, "Global sampler seed");
    o.gamma = cmd.add_option("--gamma", f.gamma, "Changepoint prior bound");
    o.lambda = cmd.add_option("--lambda", f.lambda, "Variance-ratio prior bound");
    o.iterations = cmd.add_option("--iters", f.iterations, "Retained Gibbs sweeps");
    o.burn_in = cmd.add_option("--burn-in", f.burn_in, "Discarded Gibbs sweeps");
    o.window = cmd.add_option("--window", f.window, "Box filter window");
    o.threshold = cmd.add_option("--threshold", f.threshold, "Probability threshold");
    cmd.add_option("--channel-mode", f.channel_mode, "vv, vh, vvvh or per-channel-max")
        ->check(CLI::IsMember({"vv", "vh", "vvvh", "per-channel-max"}));
    o.workers = cmd.add_option("--workers", f.workers, "Worker threads (default: BCPFLOOD_WORKERS or all cores)");
    cmd.add_flag("--no-aggregate", f.no_aggregate, "Never aggregate 2x2 before analysis");
    cmd.add_flag("--emit-plots", f.emit_plots, "Write SVG figures next to the outputs");
    cmd.add_flag("--negative-other-class", f.negative_other,
                 "Per-class scores count the other flood class as negatives");
    return o;
}

RunManifest build_run(const RunFlags& f, const RunOptions& o) {
    RunManifest run;
    if (!f.manifest.empty()) {
        run = read_run_manifest(f.manifest);
    } else if (!f.stack.empty()) {
        run.stack = f.stack;
    } else {
        throw ParameterError("either --manifest or --stack is required");
    }
    if (!f.stack.empty()) run.stack = f.stack;
    if (!f.reference.empty()) run.reference = f.reference;
    if (!f.output.empty()) run.output = f.output;
    if (!f.site.empty()) run.site = f.site;
    if (!f.channel_mode.empty()) run.channel = parse_channel_mode(f.channel_mode);
    run.bcp.channel_mode = run.channel.mode;
    if (o.seed->count()) run.bcp.seed = f.seed;
    if (o.gamma->count()) run.bcp.gamma = f.gamma;
    if (o.lambda->count()) run.bcp.lambda = f.lambda;
    if (o.iterations->count()) run.bcp.iterations = f.iterations;
    if (o.burn_in->count()) run.bcp.burn_in = f.burn_in;
    if (o.window->count()) run.postproc.window = f.window;
    if (o.threshold->count()) run.postproc.threshold = f.threshold;
    if (o.workers->count()) run.workers = f.workers;
    if (f.no_aggregate) run.aggregate = Aggregate::off;
    if (f.negative_other) run.other_class = OtherClassPolicy::negative;
    if (!f.otsu_channel.empty()) run.otsu.channel = f.otsu_channel;
    return run;
}

int classify(const std::exception& e) {
    if (dynamic_cast<const ParameterError*>(&e)) return kUsage;
    if (dynamic_cast<const ContractError*>(&e)) return kInternal;
    if (dynamic_cast<const Error*>(&e)) return kData;
    return kInternal;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free SAR flood mapping with Bayesian changepoint detection"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "bcpflood 0.1.0");

    SynthOptions synth;
    std::string spec_file;
    std::uint64_t synth_seed = 0;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic flood scene");
    synth_cmd->add_option("spec", spec_file, "Scene spec JSON (defaults to --preset)");
    synth_cmd->add_option("--preset", synth.preset, "default, negative or permanent-water")
        ->check(CLI::IsMember({"default", "negative", "permanent-water"}));
    synth_cmd->add_option("--out,-o", synth.output, "Output directory");
    auto* synth_seed_opt = synth_cmd->add_option("--seed", synth_seed, "Override the scene seed");

    RunFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "Detect floods: BCP, smoothing, threshold, evaluation");
    const RunOptions run_opts = add_run_flags(*run_cmd, run_flags);

    RunFlags sweep_flags;
    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate all 63 window/threshold combinations");
    const RunOptions sweep_opts = add_run_flags(*sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--chip-size", sweep_flags.chip_size, "Chip edge in pixels for per-chip F1");

    RunFlags otsu_flags;
    auto* otsu_cmd = app.add_subcommand("otsu", "Otsu thresholding baseline on the event date");
    const RunOptions otsu_opts = add_run_flags(*otsu_cmd, otsu_flags);
    otsu_cmd->add_option("--channel", otsu_flags.otsu_channel, "Channel to threshold (VV or VH)");

    std::string eval_mask;
    std::string eval_reference;
    std::string eval_csv = "metrics.csv";
    std::string eval_site = "scene";
    std::string eval_method = "mask";
    bool eval_negative = false;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a flood mask against a reference map");
    eval_cmd->add_option("--mask", eval_mask, "Flood mask GeoTIFF")->required();
    eval_cmd->add_option("--reference", eval_reference, "Reference map GeoTIFF")->required();
    eval_cmd->add_option("--out,-o", eval_csv, "Metrics CSV");
    eval_cmd->add_option("--site", eval_site, "Site id");
    eval_cmd->add_option("--method", eval_method, "Method id");
    eval_cmd->add_flag("--negative-other-class", eval_negative,
                       "Per-class scores count the other flood class as negatives");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*synth_cmd) {
            if (!spec_file.empty()) synth.spec_file = spec_file;
            if (synth_seed_opt->count()) synth.seed = synth_seed;
            return cmd_synth(synth, std::cout);
        }
        if (*run_cmd) return cmd_run(build_run(run_flags, run_opts), run_flags.emit_plots, std::cout);
        if (*sweep_cmd) {
            return cmd_sweep(build_run(sweep_flags, sweep_opts), sweep_flags.emit_plots, sweep_flags.chip_size,
                             std::cout);
        }
        if (*otsu_cmd) return cmd_otsu(build_run(otsu_flags, otsu_opts), std::cout);
        if (*eval_cmd) {
            return cmd_evaluate(eval_mask, eval_reference, eval_csv, eval_site, eval_method,
                                eval_negative ? OtherClassPolicy::negative : OtherClassPolicy::ignore, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error [" << current_stage() << "]: " << e.what() << "\n";
        return classify(e);
    }
    return kOk;
}
