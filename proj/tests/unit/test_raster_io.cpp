#include "oracles.hpp"

#include "bcpflood/errors.hpp"
#include "bcpflood/geotiff.hpp"
#include "bcpflood/raster.hpp"
#include "bcpflood/stack_io.hpp"
#include "bcpflood/synth.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

using namespace bcpflood;
using nlohmann::json;

namespace {

const double kNaN = std::nan("");

Georeference test_georef() { return Georeference{{300000.0, 10.0, 0.0, 5000000.0, 0.0, -10.0}, "EPSG:32633"}; }

bool bit_equal(float a, float b) {
    if (std::isnan(a) && std::isnan(b)) return true;
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    std::memcpy(&x, &a, 4);
    std::memcpy(&y, &b, 4);
    return x == y;
}

RasterStack random_stack(std::size_t dates, std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::vector<std::string> labels;
    for (std::size_t t = 0; t < dates; ++t) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "2021-%02zu-%02zu", 1 + t / 28, 1 + t % 28);
        labels.emplace_back(buf);
    }
    RasterStack stack(labels, {"VV", "VH"}, rows, cols, test_georef());
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(-12.0F, 3.0F);
    for (std::size_t t = 0; t < dates; ++t) {
        for (std::size_t c = 0; c < 2; ++c) {
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t k = 0; k < cols; ++k) stack.set(t, c, r, k, normal(rng));
            }
        }
        stack.set_nodata(t, rng() % rows, rng() % cols);
    }
    return stack;
}

json manifest_doc(std::size_t dates) {
    json entries = json::array();
    for (std::size_t t = 0; t < dates; ++t) {
        const std::string d = "2021-03-0" + std::to_string(t + 1);
        entries.push_back({{"date", d},
                           {"platform", "A"},
                           {"orbit", "ascending"},
                           {"files", {{"VV", "vv_" + d + ".tif"}}}});
    }
    return {{"event_date", entries.back()["date"]},
            {"platform", "A"},
            {"orbit", "ascending"},
            {"channels", {"VV"}},
            {"dates", entries}};
}

}  // namespace

TEST(Aggregate, BlockExamples) {
    Grid<double> g(2, 2);
    g(0, 0) = 1;
    g(0, 1) = 2;
    g(1, 0) = 3;
    g(1, 1) = 4;
    EXPECT_DOUBLE_EQ(aggregate_2x2(g)(0, 0), 2.5);
    g(0, 1) = kNaN;
    g(1, 1) = kNaN;
    EXPECT_DOUBLE_EQ(aggregate_2x2(g)(0, 0), 2.0);
    Grid<double> empty(2, 2, kNaN);
    EXPECT_TRUE(std::isnan(aggregate_2x2(empty)(0, 0)));
}

TEST(Aggregate, MatchesDoubleLoopOracle) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-20.0, 0.0);
    Grid<double> g(64, 64);
    for (auto& v : g.data()) v = (rng() % 10 == 0) ? kNaN : u(rng);
    const Grid<double> out = aggregate_2x2(g);
    ASSERT_EQ(out.rows(), 32U);
    for (std::size_t r = 0; r < 32; ++r) {
        for (std::size_t c = 0; c < 32; ++c) {
            double sum = 0.0;
            int n = 0;
            for (std::size_t i = 2 * r; i < 2 * r + 2; ++i) {
                for (std::size_t j = 2 * c; j < 2 * c + 2; ++j) {
                    if (!std::isnan(g(i, j))) {
                        sum += g(i, j);
                        ++n;
                    }
                }
            }
            if (n == 0) {
                EXPECT_TRUE(std::isnan(out(r, c)));
            } else {
                EXPECT_EQ(out(r, c), sum / n);
            }
        }
    }
}

TEST(Aggregate, ConservesGrandMean) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-25.0, -2.0);
    Grid<double> g(48, 30);
    double mean = 0.0;
    for (auto& v : g.data()) {
        v = u(rng);
        mean += v / g.size();
    }
    double agg = 0.0;
    const Grid<double> out = aggregate_2x2(g);
    for (double v : out.data()) agg += v / out.size();
    EXPECT_NEAR(agg, mean, 1e-9 * std::abs(mean));
}

TEST(Aggregate, OddSizesPadWithNoData) {
    Grid<double> g(3, 3, 1.0);
    g(2, 2) = 5.0;
    const Grid<double> out = aggregate_2x2(g);
    ASSERT_EQ(out.rows(), 2U);
    ASSERT_EQ(out.cols(), 2U);
    EXPECT_DOUBLE_EQ(out(1, 1), 5.0);
    EXPECT_DOUBLE_EQ(out(0, 1), 1.0);
}

TEST(Aggregate, StackDoublesPixelSize) {
    const RasterStack s = random_stack(3, 8, 6, 1);
    const RasterStack a = aggregate_2x2(s);
    EXPECT_EQ(a.rows(), 4U);
    EXPECT_EQ(a.cols(), 3U);
    EXPECT_DOUBLE_EQ(a.resolution_m(), 20.0);
    EXPECT_DOUBLE_EQ(a.georef().transform[0], s.georef().transform[0]);
}

TEST(RasterStack, NoDataCoversAllChannels) {
    RasterStack s({"2021-01-01", "2021-01-13"}, {"VV", "VH"}, 2, 2, test_georef());
    s.set(0, 0, 1, 1, -5.0F);
    s.set(0, 1, 1, 1, std::nanf(""));
    EXPECT_TRUE(s.nodata(0, 1, 1));
    EXPECT_TRUE(std::isnan(s.value(0, 0, 1, 1)));
    EXPECT_FALSE(s.nodata(1, 1, 1));
    EXPECT_EQ(s.channel_index("vh"), 1U);
    EXPECT_FALSE(s.channel_index("HH"));
}

TEST(GeoTiff, FloatRoundTripIsBitExact) {
    const auto dir = oracle::temp_dir("geotiff_float");
    Grid<double> g(17, 23);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(-30.0F, 5.0F);
    for (auto& v : g.data()) v = u(rng);
    g(4, 5) = kNaN;
    write_float_geotiff(dir / "a.tif", g, test_georef());
    const RasterFile f = read_geotiff(dir / "a.tif");
    ASSERT_EQ(f.bands.size(), 1U);
    EXPECT_TRUE(f.georef.matches(test_georef()));
    EXPECT_EQ(f.georef.crs, "EPSG:32633");
    EXPECT_TRUE(f.floating_point);
    EXPECT_EQ(f.bits_per_sample, 32);
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_TRUE(bit_equal(static_cast<float>(g.data()[k]), static_cast<float>(f.bands[0].data()[k])));
    }
}

TEST(GeoTiff, ByteRoundTripHonorsNoData) {
    const auto dir = oracle::temp_dir("geotiff_byte");
    Grid<std::uint8_t> g(5, 4, 1);
    g(0, 0) = 0;
    g(2, 3) = 255;
    write_byte_geotiff(dir / "b.tif", g, test_georef(), std::uint8_t{255});
    const RasterFile f = read_geotiff(dir / "b.tif");
    EXPECT_EQ(f.nodata, 255.0);
    EXPECT_TRUE(std::isnan(f.bands[0](2, 3)));
    EXPECT_EQ(f.bands[0](0, 0), 0.0);
    EXPECT_EQ(f.bands[0](4, 3), 1.0);
}

TEST(GeoTiff, MissingFileThrows) { EXPECT_THROW(read_geotiff("/nonexistent/x.tif"), InputError); }

TEST(Manifest, ParsesAndValidates) {
    const StackManifest m = parse_manifest(manifest_doc(3), "/data");
    EXPECT_EQ(m.entries.size(), 3U);
    EXPECT_EQ(m.event_date, "2021-03-03");
    EXPECT_EQ(m.units, Units::dB);
    EXPECT_EQ(parse_manifest(manifest_to_json(m), "/data").entries[2].channel_files.at("VV"),
              m.entries[2].channel_files.at("VV"));
}

TEST(Manifest, RejectsOrbitOutsideFilter) {
    json doc = manifest_doc(3);
    doc["dates"][1]["orbit"] = "descending";
    EXPECT_THROW(parse_manifest(doc), ManifestError);
    doc = manifest_doc(3);
    doc["dates"][0]["platform"] = "B";
    EXPECT_THROW(parse_manifest(doc), ManifestError);
}

TEST(Manifest, RejectsNonMonotoneDates) {
    json doc = manifest_doc(3);
    std::swap(doc["dates"][0], doc["dates"][1]);
    EXPECT_THROW(parse_manifest(doc), ManifestError);
    doc = manifest_doc(3);
    doc["dates"][1]["date"] = doc["dates"][0]["date"];
    EXPECT_THROW(parse_manifest(doc), ManifestError);
}

TEST(Manifest, RejectsBadEventDateAndFields) {
    json doc = manifest_doc(3);
    doc["event_date"] = "2021-03-02";
    EXPECT_THROW(parse_manifest(doc), ManifestError);
    doc = manifest_doc(3);
    doc["dates"][2]["date"] = "2021-02-30";
    doc["event_date"] = "2021-02-30";
    EXPECT_THROW(parse_manifest(doc), ManifestError);
    doc = manifest_doc(3);
    doc.erase("orbit");
    EXPECT_THROW(parse_manifest(doc), ManifestError);
    doc = manifest_doc(3);
    doc["dates"][1]["files"].erase("VV");
    EXPECT_THROW(parse_manifest(doc), ManifestError);
}

TEST(IsoDate, CalendarAware) {
    EXPECT_TRUE(is_iso_date("2024-02-29"));
    EXPECT_FALSE(is_iso_date("2023-02-29"));
    EXPECT_FALSE(is_iso_date("2023-13-01"));
    EXPECT_FALSE(is_iso_date("20230101"));
}

TEST(LoadStack, ThreeDatesWithMatchingGrids) {
    const auto dir = oracle::temp_dir("load3");
    for (int t = 1; t <= 3; ++t) {
        Grid<double> g(6, 7, -10.0 - t);
        if (t == 2) g(3, 3) = kNaN;
        write_float_geotiff(dir / ("vv_2021-03-0" + std::to_string(t) + ".tif"), g, test_georef());
    }
    const RasterStack s = load_stack(parse_manifest(manifest_doc(3), dir));
    EXPECT_EQ(s.dates(), 3U);
    EXPECT_EQ(s.rows(), 6U);
    EXPECT_EQ(s.value(2, 0, 0, 0), -13.0F);
    EXPECT_TRUE(s.nodata(1, 3, 3));
    EXPECT_FALSE(s.nodata(0, 3, 3));

    const RasterStack agg = load_stack(parse_manifest(manifest_doc(3), dir), LoadOptions{true, Units::dB});
    EXPECT_EQ(agg.rows(), 3U);
    EXPECT_EQ(agg.cols(), 4U);
}

TEST(LoadStack, GridMismatchIsGeometryError) {
    const auto dir = oracle::temp_dir("mismatch");
    write_float_geotiff(dir / "vv_2021-03-01.tif", Grid<double>(6, 7, -10.0), test_georef());
    write_float_geotiff(dir / "vv_2021-03-02.tif", Grid<double>(6, 8, -10.0), test_georef());
    Georeference shifted = test_georef();
    shifted.transform[0] += 10.0;
    write_float_geotiff(dir / "vv_2021-03-03.tif", Grid<double>(6, 7, -10.0), shifted);
    EXPECT_THROW(load_stack(parse_manifest(manifest_doc(2), dir)), GeometryError);
    json doc = manifest_doc(3);
    doc["dates"][1]["files"]["VV"] = "vv_2021-03-01.tif";
    EXPECT_THROW(load_stack(parse_manifest(doc, dir)), GeometryError);
}

TEST(LoadStack, MissingFileIsInputError) {
    const auto dir = oracle::temp_dir("missing");
    EXPECT_THROW(load_stack(parse_manifest(manifest_doc(2), dir)), InputError);
}

TEST(LoadStack, LinearUnitsConvertToDecibels) {
    const auto dir = oracle::temp_dir("linear");
    write_float_geotiff(dir / "vv_2021-03-01.tif", Grid<double>(2, 2, 0.1), test_georef());
    Grid<double> second(2, 2, 0.01);
    second(0, 1) = 0.0;  // log of zero power is NoData
    write_float_geotiff(dir / "vv_2021-03-02.tif", second, test_georef());
    json doc = manifest_doc(2);
    doc["units"] = "linear";
    const RasterStack s = load_stack(parse_manifest(doc, dir));
    EXPECT_NEAR(s.value(0, 0, 0, 0), -10.0F, 1e-5);
    EXPECT_NEAR(s.value(1, 0, 1, 1), -20.0F, 1e-5);
    EXPECT_TRUE(s.nodata(1, 0, 1));
}

TEST(SaveStack, ThirtyOneDateRoundTripIsBitExact) {
    const auto dir = oracle::temp_dir("roundtrip31");
    const RasterStack s = random_stack(31, 9, 11, 5);
    const StackManifest written = save_stack(s, dir);
    EXPECT_EQ(written.entries.size(), 31U);
    const RasterStack back = load_stack(read_manifest(dir / "manifest.json"));
    ASSERT_EQ(back.dates(), 31U);
    EXPECT_EQ(back.date_labels(), s.date_labels());
    EXPECT_EQ(back.channel_names(), s.channel_names());
    EXPECT_TRUE(back.georef().matches(s.georef()));
    ASSERT_EQ(back.data().size(), s.data().size());
    for (std::size_t k = 0; k < s.data().size(); ++k) ASSERT_TRUE(bit_equal(back.data()[k], s.data()[k])) << k;
    EXPECT_TRUE(std::equal(back.nodata_mask().begin(), back.nodata_mask().end(), s.nodata_mask().begin()));
}

TEST(Reference, RoundTripAndLabelCheck) {
    const auto dir = oracle::temp_dir("reference");
    ReferenceMap ref{Grid<std::uint8_t>(4, 4, 0), test_georef()};
    ref.labels(1, 1) = 1;
    ref.labels(2, 2) = 2;
    ref.labels(3, 3) = kMaskNoData;
    write_reference(dir / "ref.tif", ref);
    const ReferenceMap back = read_reference(dir / "ref.tif");
    EXPECT_EQ(back.labels, ref.labels);

    Grid<std::uint8_t> bad(2, 2, 0);
    bad(0, 0) = 3;
    write_byte_geotiff(dir / "bad.tif", bad, test_georef(), std::nullopt);
    EXPECT_THROW(read_reference(dir / "bad.tif"), InputError);
    ReferenceMap invalid{bad, test_georef()};
    EXPECT_THROW(invalid.validate(), InputError);
}
