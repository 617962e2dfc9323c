#include "bcpflood/errors.hpp"
#include "bcpflood/pixel_engine.hpp"
#include "bcpflood/synth.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>

using namespace bcpflood;

namespace {

// Digest of synth_scene(SceneSpec{}) frozen from the first build; any
// change to the generator or its defaults must update it deliberately.
constexpr const char* kDefaultSceneDigest = "91399606c5f08a50e18348c31be1a7be904e0f2af2c81e9c36c492525ade052b";

}  // namespace

TEST(Polygon, PointInPolygonAndArea) {
    const Polygon square{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
    EXPECT_TRUE(point_in_polygon(square, 1.5, 2.5));
    EXPECT_FALSE(point_in_polygon(square, 4.5, 2.5));
    EXPECT_DOUBLE_EQ(polygon_area(square), 16.0);
    const Polygon triangle{{0, 0}, {10, 0}, {0, 10}};
    EXPECT_TRUE(point_in_polygon(triangle, 2.0, 2.0));
    EXPECT_FALSE(point_in_polygon(triangle, 6.0, 6.0));
    EXPECT_DOUBLE_EQ(polygon_area(triangle), 50.0);
}

TEST(SynthScene, DefaultShapeAndLabels) {
    const Scene scene = synth_scene(SceneSpec{});
    EXPECT_EQ(scene.stack.dates(), 12U);
    EXPECT_EQ(scene.stack.channels(), 2U);
    EXPECT_EQ(scene.stack.rows(), 64U);
    EXPECT_EQ(scene.stack.cols(), 64U);
    EXPECT_EQ(scene.stack.date_labels().front(), "2022-01-03");
    EXPECT_EQ(scene.stack.date_labels()[1], "2022-02-02");
    EXPECT_DOUBLE_EQ(scene.stack.resolution_m(), 20.0);
    std::size_t flooded = 0;
    for (std::size_t r = 0; r < 64; ++r) {
        for (std::size_t c = 0; c < 64; ++c) {
            const bool inside = point_in_polygon(SceneSpec{}.flood_polygon, c + 0.5, r + 0.5);
            EXPECT_EQ(scene.reference.labels(r, c), inside ? 1 : 0);
            flooded += inside ? 1 : 0;
        }
    }
    EXPECT_EQ(flooded, 2048U);
}

TEST(SynthScene, GoldenDigest) { EXPECT_EQ(stack_digest(synth_scene(SceneSpec{}).stack), kDefaultSceneDigest); }

TEST(SynthScene, DeterministicInSeed) {
    SceneSpec spec;
    spec.height = spec.width = 20;
    spec.flood_polygon = {{0, 0}, {10, 0}, {10, 20}, {0, 20}};
    EXPECT_EQ(stack_digest(synth_scene(spec).stack), stack_digest(synth_scene(spec).stack));
    SceneSpec other = spec;
    other.seed = spec.seed + 1;
    EXPECT_NE(stack_digest(synth_scene(spec).stack), stack_digest(synth_scene(other).stack));
}

TEST(SynthScene, ZeroDropLeavesStackUnchanged) {
    const Scene flood = synth_scene(SceneSpec{});
    const Scene control = synth_scene(negative_control_spec());
    EXPECT_EQ(control.reference.labels, flood.reference.labels);
    const std::size_t last = 11;
    for (std::size_t t = 0; t < 12; ++t) {
        for (std::size_t r = 0; r < 64; ++r) {
            for (std::size_t c = 0; c < 64; ++c) {
                const bool changed = t == last && flood.reference.labels(r, c) == 1;
                for (std::size_t ch = 0; ch < 2; ++ch) {
                    const float a = flood.stack.value(t, ch, r, c);
                    const float b = control.stack.value(t, ch, r, c);
                    if (changed) {
                        EXPECT_NEAR(a - b, -8.0, 1e-4);
                    } else {
                        EXPECT_EQ(a, b);
                    }
                }
            }
        }
    }
}

TEST(SynthScene, FinalDateDropMatchesSampleMean) {
    const SceneSpec spec;
    const Scene scene = synth_scene(spec);
    const std::size_t last = spec.n_dates - 1;
    const double seasonal =
        spec.seasonal_amplitude_dB * std::sin(2.0 * std::numbers::pi * last * spec.revisit_days / spec.seasonal_period_days);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < spec.height; ++r) {
        for (std::size_t c = 0; c < spec.width; ++c) {
            if (scene.reference.labels(r, c) != 1) continue;
            sum += scene.stack.value(last, 0, r, c) - (spec.base_level_dB[0] + seasonal);
            ++n;
        }
    }
    EXPECT_NEAR(sum / n, spec.flood_drop_dB, 3.0 * spec.speckle_sigma_dB / std::sqrt(static_cast<double>(n)));
}

TEST(SynthScene, PermanentWaterIsStaticAndUnlabelled) {
    const SceneSpec spec = permanent_water_spec();
    const Scene scene = synth_scene(spec);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < 64; ++r) {
        for (std::size_t c = 48; c < 64; ++c) {
            EXPECT_EQ(scene.reference.labels(r, c), 0);
            sum += scene.stack.value(0, 0, r, c);
            ++n;
        }
    }
    EXPECT_NEAR(sum / n, spec.water_level_dB[0], 0.2);
}

TEST(SynthScene, UrbanPolygonLabelsTwo) {
    SceneSpec spec;
    spec.urban_polygon = {{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    const Scene scene = synth_scene(spec);
    EXPECT_EQ(scene.reference.labels(5, 5), 2);
    EXPECT_EQ(scene.reference.labels(30, 5), 1);
}

TEST(SceneSpec, RejectsBadPolygons) {
    SceneSpec spec;
    spec.flood_polygon = {{0, 0}, {10, 10}, {20, 20}};
    EXPECT_THROW(synth_scene(spec), SpecError);
    spec.flood_polygon = {{0, 0}, {10, 10}};
    EXPECT_THROW(synth_scene(spec), SpecError);
    spec.flood_polygon = {{100, 100}, {120, 100}, {120, 120}, {100, 120}};
    EXPECT_THROW(synth_scene(spec), SpecError);
    spec = SceneSpec{};
    spec.n_dates = 1;
    EXPECT_THROW(synth_scene(spec), SpecError);
    spec = SceneSpec{};
    spec.base_level_dB = {-10.0};
    EXPECT_THROW(synth_scene(spec), SpecError);
}

TEST(SceneSpec, JsonRoundTrip) {
    SceneSpec spec = permanent_water_spec();
    spec.seed = 1234567890123ULL;
    spec.flood_drop_dB = -6.5;
    const nlohmann::json doc = spec;
    const SceneSpec back = doc.get<SceneSpec>();
    EXPECT_EQ(nlohmann::json(back), doc);
    EXPECT_EQ(back.seed, spec.seed);

    const SceneSpec partial = nlohmann::json{{"height", 10}, {"width", 40}, {"flood_drop_dB", -3}}.get<SceneSpec>();
    EXPECT_EQ(partial.height, 10U);
    EXPECT_EQ(partial.n_dates, 12U);
    EXPECT_THROW((nlohmann::json{{"heigth", 10}}.get<SceneSpec>()), SpecError);
}
