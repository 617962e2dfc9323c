#include "oracles.hpp"

#include "bcpflood/errors.hpp"
#include "bcpflood/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace bcpflood;

namespace {

const Georeference kGeo{{0.0, 10.0, 0.0, 0.0, 0.0, -10.0}, "EPSG:32633"};

FloodMask mask_of(std::vector<std::uint8_t> values, std::size_t rows, std::size_t cols) {
    FloodMask m;
    m.mask = Grid<std::uint8_t>(rows, cols);
    std::copy(values.begin(), values.end(), m.mask.data().begin());
    m.georef = kGeo;
    return m;
}

ReferenceMap ref_of(std::vector<std::uint8_t> values, std::size_t rows, std::size_t cols) {
    ReferenceMap r;
    r.labels = Grid<std::uint8_t>(rows, cols);
    std::copy(values.begin(), values.end(), r.labels.data().begin());
    r.georef = kGeo;
    return r;
}

}  // namespace

TEST(Scores, WorkedExample) {
    const Scores s = metrics({2, 1, 1, 6});
    EXPECT_DOUBLE_EQ(s.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.f1, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.iou, 0.5);
}

TEST(Scores, ZeroOverZeroIsZero) {
    const Scores none = metrics({0, 0, 0, 10});
    EXPECT_EQ(none.precision, 0.0);
    EXPECT_EQ(none.recall, 0.0);
    EXPECT_EQ(none.f1, 0.0);
    EXPECT_EQ(none.iou, 0.0);
    EXPECT_EQ(f1_score(0.0, 0.0), 0.0);
}

TEST(Scores, HarmonicMeanOfReportedRates) {
    EXPECT_NEAR(f1_score(0.71, 0.78), 0.743, 5e-4);
    EXPECT_NEAR(f1_score(0.71, 0.78), 2.0 * 0.71 * 0.78 / (0.71 + 0.78), 1e-15);
}

TEST(Scores, IouIdentity) {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
        const ConfusionCounts c{rng() % 50 + 1, rng() % 50, rng() % 50, rng() % 50};
        const Scores s = metrics(c);
        EXPECT_NEAR(s.iou, s.f1 / (2.0 - s.f1), 1e-14);
    }
}

TEST(Confusion, SmallGrid) {
    // ref:  1 1 0 2 / 0 255 0 1
    // pred: 1 0 1 1 / 0 1 255 1
    const ReferenceMap ref = ref_of({1, 1, 0, 2, 0, 255, 0, 1}, 2, 4);
    const FloodMask pred = mask_of({1, 0, 1, 1, 0, 1, 255, 1}, 2, 4);
    EXPECT_EQ(confusion(pred, ref, ClassScope::overall), (ConfusionCounts{3, 1, 1, 1}));
    // open ignores the urban pixel entirely
    EXPECT_EQ(confusion(pred, ref, ClassScope::open), (ConfusionCounts{2, 1, 1, 1}));
    EXPECT_EQ(confusion(pred, ref, ClassScope::urban), (ConfusionCounts{1, 1, 0, 1}));
    // under the negative policy the other class counts as non-flood
    EXPECT_EQ(confusion(pred, ref, ClassScope::urban, OtherClassPolicy::negative), (ConfusionCounts{1, 3, 0, 2}));
}

TEST(Confusion, MatchesRandomOracle) {
    std::mt19937_64 rng(31);
    std::vector<std::uint8_t> ref(256);
    std::vector<std::uint8_t> pred(256);
    for (auto& v : ref) {
        const auto x = rng() % 10;
        v = x == 0 ? 255 : (x < 5 ? 0 : (x < 8 ? 1 : 2));
    }
    for (auto& v : pred) v = rng() % 12 == 0 ? 255 : static_cast<std::uint8_t>(rng() % 2);
    const ReferenceMap r = ref_of(ref, 16, 16);
    const FloodMask p = mask_of(pred, 16, 16);
    for (const auto scope : {ClassScope::overall, ClassScope::open, ClassScope::urban}) {
        for (const auto policy : {OtherClassPolicy::ignore, OtherClassPolicy::negative}) {
            ConfusionCounts want;
            for (std::size_t k = 0; k < 256; ++k) {
                if (ref[k] == 255 || pred[k] == 255) continue;
                bool truth = ref[k] != 0;
                if (scope != ClassScope::overall) {
                    const std::uint8_t own = scope == ClassScope::open ? 1 : 2;
                    const bool other = ref[k] != 0 && ref[k] != own;
                    if (other && policy == OtherClassPolicy::ignore) continue;
                    truth = ref[k] == own;
                }
                const bool said = pred[k] == 1;
                if (truth && said) ++want.tp;
                if (!truth && said) ++want.fp;
                if (truth && !said) ++want.fn;
                if (!truth && !said) ++want.tn;
            }
            EXPECT_EQ(confusion(p, r, scope, policy), want) << to_string(scope);
        }
    }
}

TEST(Confusion, ScopesPartitionPositives) {
    std::mt19937_64 rng(6);
    std::vector<std::uint8_t> ref(400);
    std::vector<std::uint8_t> pred(400);
    for (auto& v : ref) v = static_cast<std::uint8_t>(rng() % 3);
    for (auto& v : pred) v = static_cast<std::uint8_t>(rng() % 2);
    const ReferenceMap r = ref_of(ref, 20, 20);
    const FloodMask p = mask_of(pred, 20, 20);
    const auto all = confusion(p, r, ClassScope::overall);
    const auto open = confusion(p, r, ClassScope::open);
    const auto urban = confusion(p, r, ClassScope::urban);
    EXPECT_EQ(open.tp + urban.tp, all.tp);
    EXPECT_EQ(open.fn + urban.fn, all.fn);
    EXPECT_EQ(open.fp, all.fp);
    EXPECT_EQ(urban.fp, all.fp);
}

TEST(Confusion, MorePredictedFloodNeverLowersRecall) {
    std::mt19937_64 rng(12);
    std::vector<std::uint8_t> ref(300);
    std::vector<std::uint8_t> pred(300, 0);
    for (auto& v : ref) v = static_cast<std::uint8_t>(rng() % 3);
    const ReferenceMap r = ref_of(ref, 15, 20);
    double previous = 0.0;
    for (std::size_t k = 0; k < 300; k += 7) {
        for (std::size_t j = k; j < std::min<std::size_t>(300, k + 7); ++j) pred[j] = 1;
        const double recall = metrics(confusion(mask_of(pred, 15, 20), r, ClassScope::overall)).recall;
        EXPECT_GE(recall, previous);
        previous = recall;
    }
    EXPECT_DOUBLE_EQ(previous, 1.0);
}

TEST(Confusion, GeometryMismatch) {
    const ReferenceMap ref = ref_of({0, 1, 0, 1}, 2, 2);
    EXPECT_THROW(confusion(mask_of({0, 1, 0, 1, 0, 0}, 2, 3), ref, ClassScope::overall), GeometryError);
    FloodMask shifted = mask_of({0, 1, 0, 1}, 2, 2);
    shifted.georef.transform[0] += 10.0;
    EXPECT_THROW(confusion(shifted, ref, ClassScope::overall), GeometryError);
}

TEST(Csv, ColumnOrder) {
    const std::vector<MetricsRecord> records{
        make_record("s", "bcp", ClassScope::overall, {2, 1, 1, 6}, 0.2, 9),
        make_record("s", "otsu-vv", ClassScope::urban, {0, 0, 0, 4}),
    };
    std::ostringstream metrics_out;
    write_metrics_csv(metrics_out, records);
    std::istringstream lines(metrics_out.str());
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(line, "site,method,class,t,w,TP,FP,FN,TN,precision,recall,f1,iou");
    std::getline(lines, line);
    EXPECT_EQ(line.rfind("s,bcp,overall,0.2,9,2,1,1,6,0.6666666667,", 0), 0U) << line;
    std::getline(lines, line);
    EXPECT_EQ(line, "s,otsu-vv,urban,,,0,0,0,4,0,0,0,0");

    std::ostringstream sweep_out;
    write_sweep_csv(sweep_out, records);
    EXPECT_EQ(sweep_out.str().substr(0, sweep_out.str().find('\n')), "t,w,class,TP,FP,FN,precision,recall,f1,iou");
    EXPECT_EQ(parse_scope("urban"), ClassScope::urban);
}

TEST(Wilcoxon, IdenticalSamples) {
    const std::vector<double> a{0.1, 0.5, 0.3, 0.9, 0.2, 0.7};
    EXPECT_EQ(paired_significance(a, a), 1.0);
}

TEST(Wilcoxon, ShiftedSampleIsSignificant) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> a(20);
    std::vector<double> b(20);
    for (std::size_t k = 0; k < 20; ++k) {
        b[k] = unit(rng);
        a[k] = b[k] + 1.0 + 0.1 * unit(rng);
    }
    EXPECT_LT(paired_significance(a, b), 0.01);
}

TEST(Wilcoxon, ExactMatchesEnumeration) {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> a(8);
        std::vector<double> b(8, 0.0);
        // Small integers force ties and the occasional zero difference.
        for (double& v : a) v = static_cast<double>(static_cast<int>(rng() % 9) - 4);
        std::vector<double> nonzero;
        for (double v : a)
            if (v != 0.0) nonzero.push_back(v);
        if (nonzero.empty()) continue;
        std::vector<double> ranks(nonzero.size());
        double positive = 0.0;
        for (std::size_t i = 0; i < nonzero.size(); ++i) {
            double less = 0.0;
            double equal = 0.0;
            for (double w : nonzero) {
                less += std::abs(w) < std::abs(nonzero[i]) ? 1.0 : 0.0;
                equal += std::abs(w) == std::abs(nonzero[i]) ? 1.0 : 0.0;
            }
            ranks[i] = less + (equal + 1.0) / 2.0;
            if (nonzero[i] > 0.0) positive += ranks[i];
        }
        EXPECT_NEAR(paired_significance(a, b), oracle::signed_rank_enumeration(ranks, positive), 1e-12) << trial;
    }
}

TEST(Wilcoxon, FrozenReferenceValues) {
    // scipy.stats.wilcoxon(d, correction=True, method="approx" / "exact").
    std::vector<double> d1;
    for (int k = 0; k < 30; ++k) d1.push_back(static_cast<double>((k * 7) % 11 - 4));
    std::vector<double> d2;
    for (int k = 0; k < 40; ++k) d2.push_back(static_cast<double>((k * 5) % 13 - 3));
    const std::vector<double> zeros30(30, 0.0);
    const std::vector<double> zeros40(40, 0.0);
    EXPECT_NEAR(paired_significance(d1, zeros30), 0.0929306323974395, 1e-12);
    EXPECT_NEAR(paired_significance(d2, zeros40), 0.00017725280971866652, 1e-15);
    const std::vector<double> d3{1.5, -0.5, 2.0, 3.25, -1.0, 0.75, 2.5, 4.0};
    EXPECT_NEAR(paired_significance(d3, std::vector<double>(8, 0.0)), 0.0546875, 1e-15);
}

TEST(Wilcoxon, Contract) {
    const std::vector<double> four{1, 2, 3, 4};
    const std::vector<double> five{1, 2, 3, 4, 5};
    const std::vector<double> six{1, 2, 3, 4, 5, 6};
    EXPECT_THROW(paired_significance(four, four), ContractError);
    EXPECT_THROW(paired_significance(five, six), ContractError);
}
