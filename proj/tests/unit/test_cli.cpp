#include "oracles.hpp"

#include "../../tools/run_manifest.hpp"

#include "bcpflood/errors.hpp"
#include "bcpflood/synth.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace bcpflood;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Result run_cli(const fs::path& dir, const std::string& args) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string command = std::string("BCPFLOOD_WORKERS=2 '") + BCPFLOOD_CLI_PATH + "' " + args + " > '" +
                                out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(command.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

// 16x16 scene with few dates keeps the sampler runs short.
fs::path small_spec(const fs::path& dir) {
    SceneSpec spec;
    spec.height = spec.width = 16;
    spec.n_dates = 8;
    spec.flood_polygon = {{0, 0}, {8, 0}, {8, 16}, {0, 16}};
    const fs::path path = dir / "small.json";
    std::ofstream(path) << nlohmann::json(spec).dump(2);
    return path;
}

std::string quick() { return " --iters 100 --burn-in 10 --seed 3"; }

}  // namespace

TEST(Cli, SynthGoldenDigest) {
    const fs::path dir = oracle::temp_dir("cli_golden");
    const Result r = run_cli(dir, "synth --out '" + (dir / "scene").string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("stack_digest 91399606c5f08a50e18348c31be1a7be904e0f2af2c81e9c36c492525ade052b"),
              std::string::npos)
        << r.out;
    EXPECT_TRUE(fs::exists(dir / "scene" / "manifest.json"));
    EXPECT_TRUE(fs::exists(dir / "scene" / "reference.tif"));

    const Result other = run_cli(dir, "synth --seed 43 --out '" + (dir / "other").string() + "'");
    ASSERT_EQ(other.code, 0);
    EXPECT_EQ(other.out.find("91399606c5f08a50"), std::string::npos);
}

TEST(Cli, SynthRejectsZeroAreaPolygon) {
    const fs::path dir = oracle::temp_dir("cli_bad_spec");
    std::ofstream(dir / "bad.json") << R"({"flood_polygon": [[0, 0], [5, 5], [10, 10]]})";
    const Result r = run_cli(dir, "synth '" + (dir / "bad.json").string() + "' --out '" + (dir / "s").string() + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, UsageErrors) {
    const fs::path dir = oracle::temp_dir("cli_usage");
    EXPECT_EQ(run_cli(dir, "run --bogus").code, 1);
    EXPECT_EQ(run_cli(dir, "").code, 1);
    EXPECT_EQ(run_cli(dir, "run --stack x.json --channel-mode hh").code, 1);
    EXPECT_EQ(run_cli(dir, "run").code, 1);  // neither --manifest nor --stack
}

TEST(Cli, RunIsReproducible) {
    const fs::path dir = oracle::temp_dir("cli_run");
    ASSERT_EQ(run_cli(dir, "synth '" + small_spec(dir).string() + "' --out '" + (dir / "scene").string() + "'").code,
              0);
    const std::string base = "run --stack '" + (dir / "scene" / "manifest.json").string() + "' --reference '" +
                             (dir / "scene" / "reference.tif").string() + "'" + quick();
    const Result a = run_cli(dir, base + " --out '" + (dir / "a").string() + "'");
    ASSERT_EQ(a.code, 0) << a.err;
    const Result b = run_cli(dir, base + " --workers 1 --out '" + (dir / "b").string() + "'");
    ASSERT_EQ(b.code, 0) << b.err;
    for (const char* name : {"probability.tif", "flood_mask.tif", "metrics.csv"}) {
        ASSERT_TRUE(fs::exists(dir / "a" / name)) << name;
        EXPECT_EQ(slurp(dir / "a" / name), slurp(dir / "b" / name)) << name;
    }
    const std::string csv = slurp(dir / "a" / "metrics.csv");
    EXPECT_EQ(csv.rfind("site,method,class,t,w,TP,FP,FN,TN,precision,recall,f1,iou\n", 0), 0U);
    EXPECT_NE(csv.find(",overall,"), std::string::npos);
    EXPECT_NE(csv.find(",urban,"), std::string::npos);
}

TEST(Cli, MissingReferenceWarns) {
    const fs::path dir = oracle::temp_dir("cli_noref");
    ASSERT_EQ(run_cli(dir, "synth '" + small_spec(dir).string() + "' --out '" + (dir / "scene").string() + "'").code,
              0);
    const Result r = run_cli(dir, "run --stack '" + (dir / "scene" / "manifest.json").string() + "' --reference '" +
                                  (dir / "nope.tif").string() + "' --out '" + (dir / "o").string() + "'" + quick());
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE((r.out + r.err).find("warning"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "o" / "flood_mask.tif"));
    EXPECT_FALSE(fs::exists(dir / "o" / "metrics.csv"));
}

TEST(Cli, SweepWritesSixtyThreeRows) {
    const fs::path dir = oracle::temp_dir("cli_sweep");
    ASSERT_EQ(run_cli(dir, "synth '" + small_spec(dir).string() + "' --out '" + (dir / "scene").string() + "'").code,
              0);
    const Result r = run_cli(dir, "sweep --stack '" + (dir / "scene" / "manifest.json").string() + "' --reference '" +
                                  (dir / "scene" / "reference.tif").string() + "' --chip-size 8 --emit-plots --out '" +
                                  (dir / "o").string() + "'" + quick());
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(dir / "o" / "sweep.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,w,class,TP,FP,FN,precision,recall,f1,iou");
    int rows = 0;
    while (std::getline(in, line)) rows += line.empty() ? 0 : 1;
    EXPECT_EQ(rows, 63);
    EXPECT_TRUE(fs::exists(dir / "o" / "sweep_f1.svg"));
    EXPECT_TRUE(fs::exists(dir / "o" / "sweep_significance.csv"));
}

TEST(Cli, OtsuBaseline) {
    const fs::path dir = oracle::temp_dir("cli_otsu");
    ASSERT_EQ(run_cli(dir, "synth '" + small_spec(dir).string() + "' --out '" + (dir / "scene").string() + "'").code,
              0);
    const std::string base = "otsu --stack '" + (dir / "scene" / "manifest.json").string() + "' --reference '" +
                             (dir / "scene" / "reference.tif").string() + "' --out '" + (dir / "o").string() + "'";
    const Result r = run_cli(dir, base);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "o" / "otsu-vv_mask.tif"));
    EXPECT_NE(slurp(dir / "o" / "otsu-vv_metrics.csv").find(",otsu-vv,overall,"), std::string::npos);
    EXPECT_EQ(run_cli(dir, base + " --channel HH").code, 2);
}

TEST(Cli, EvaluateMask) {
    const fs::path dir = oracle::temp_dir("cli_eval");
    ASSERT_EQ(run_cli(dir, "synth '" + small_spec(dir).string() + "' --out '" + (dir / "scene").string() + "'").code,
              0);
    ASSERT_EQ(run_cli(dir, "otsu --stack '" + (dir / "scene" / "manifest.json").string() + "' --out '" +
                           (dir / "o").string() + "'")
                  .code,
              0);
    const Result r = run_cli(dir, "evaluate --mask '" + (dir / "o" / "otsu-vv_mask.tif").string() + "' --reference '" +
                                  (dir / "scene" / "reference.tif").string() + "' --out '" +
                                  (dir / "eval.csv").string() + "' --method otsu-vv");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(slurp(dir / "eval.csv").find("scene,otsu-vv,overall,,,"), std::string::npos);
}

TEST(RunManifestDoc, ParsesAndResolvesPaths) {
    const nlohmann::json doc{{"stack", "scene/manifest.json"},
                             {"reference", "scene/reference.tif"},
                             {"output", "out"},
                             {"aggregate", false},
                             {"channel_mode", "vh"},
                             {"bcp", {{"gamma", 0.3}, {"iterations", 100}}},
                             {"postproc", {{"window", 5}, {"threshold", 0.4}}},
                             {"otsu", {{"channel", "VH"}}}};
    const cli::RunManifest run = cli::parse_run_manifest(doc, "/data/site");
    EXPECT_EQ(run.stack, fs::path("/data/site/scene/manifest.json"));
    EXPECT_EQ(*run.reference, fs::path("/data/site/scene/reference.tif"));
    EXPECT_EQ(run.aggregate, cli::Aggregate::off);
    EXPECT_EQ(run.channel.mode, ChannelMode::single);
    EXPECT_EQ(run.channel.channels, std::vector<std::string>{"VH"});
    EXPECT_DOUBLE_EQ(run.bcp.gamma, 0.3);
    EXPECT_EQ(run.bcp.iterations, 100);
    EXPECT_EQ(run.bcp.burn_in, 50);
    EXPECT_EQ(run.postproc.window, 5);
    EXPECT_EQ(run.otsu.channel, "VH");

    nlohmann::json bad = doc;
    bad["stak"] = "x";
    EXPECT_THROW(cli::parse_run_manifest(bad, "/"), ManifestError);
    EXPECT_THROW(cli::parse_run_manifest(nlohmann::json{{"output", "o"}}, "/"), ManifestError);
    EXPECT_THROW(cli::parse_channel_mode("hh"), ParameterError);
    EXPECT_EQ(cli::parse_channel_mode("per-channel-max").mode, ChannelMode::per_channel_max);
}
