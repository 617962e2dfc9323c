#pragma once

#include "bcpflood/mask.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace bcpflood {

enum class ClassScope { overall, open, urban };

// What the other flood class counts as under the open/urban scopes.
enum class OtherClassPolicy { ignore, negative };

const char* to_string(ClassScope scope);
ClassScope parse_scope(const std::string& text);

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& other);
    bool operator==(const ConfusionCounts&) const = default;
};

struct Scores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double iou = 0.0;
};

// Ratios with 0/0 taken as 0.
Scores metrics(const ConfusionCounts& counts);
double f1_score(double precision, double recall);

// Pixels that are NoData in either input are skipped. Throws GeometryError
// on a grid mismatch.
ConfusionCounts confusion(const FloodMask& prediction, const ReferenceMap& reference, ClassScope scope,
                          OtherClassPolicy policy = OtherClassPolicy::ignore);

struct MetricsRecord {
    std::string site;
    std::string method;
    ClassScope scope = ClassScope::overall;
    std::optional<double> threshold;
    std::optional<int> window;
    ConfusionCounts counts;
    Scores scores;
};

MetricsRecord make_record(std::string site, std::string method, ClassScope scope, const ConfusionCounts& counts,
                          std::optional<double> threshold = {}, std::optional<int> window = {});

// site,method,class,t,w,TP,FP,FN,TN,precision,recall,f1,iou
void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records);
// t,w,class,TP,FP,FN,precision,recall,f1,iou
void write_sweep_csv(std::ostream& out, std::span<const MetricsRecord> records);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records);
void write_sweep_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records);

// Two-sided Wilcoxon signed-rank p-value for paired samples. Zero
// differences are dropped; exact null distribution up to 25 non-zero
// pairs, normal approximation with tie and continuity corrections above.
// Returns 1 when every difference is zero. Requires equal lengths >= 5.
double paired_significance(std::span<const double> a, std::span<const double> b);

}  // namespace bcpflood
