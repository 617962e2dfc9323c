#include "bcpflood/metrics.hpp"
#include "bcpflood/errors.hpp"
#include "bcpflood/geotiff.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace bcpflood {

using nlohmann::json;

std::size_t FloodMask::flood_count() const {
    std::size_t n = 0;
    for (const std::uint8_t v : mask.data()) n += v == 1 ? 1 : 0;
    return n;
}

void write_mask(const std::filesystem::path& path, const FloodMask& mask) {
    write_byte_geotiff(path, mask.mask, mask.georef, kMaskNoData);
    std::ofstream sidecar(path.string() + ".json");
    sidecar << mask.provenance.to_json().dump(2) << '\n';
    if (!sidecar) {
        throw InputError("cannot write " + path.string() + ".json");
    }
}

FloodMask read_mask(const std::filesystem::path& path) {
    const RasterFile file = read_geotiff(path);
    if (file.bands.size() != 1) {
        throw InputError(path.string() + ": flood mask must have one band");
    }
    const Grid<double>& band = file.bands.front();
    FloodMask out{Grid<std::uint8_t>(band.rows(), band.cols()), file.georef, {}};
    for (std::size_t r = 0; r < band.rows(); ++r) {
        for (std::size_t c = 0; c < band.cols(); ++c) {
            const double v = band(r, c);
            if (std::isnan(v) || v == kMaskNoData) {
                out.mask(r, c) = kMaskNoData;
            } else if (v == 0.0 || v == 1.0) {
                out.mask(r, c) = static_cast<std::uint8_t>(v);
            } else {
                throw InputError(path.string() + ": mask value " + std::to_string(v) + " outside {0, 1}");
            }
        }
    }
    std::ifstream sidecar(path.string() + ".json");
    if (sidecar) {
        try {
            out.provenance = Provenance::from_json(json::parse(sidecar));
        } catch (const json::exception& e) {
            throw InputError(path.string() + ".json: " + e.what());
        }
    }
    return out;
}

const char* to_string(ClassScope scope) {
    switch (scope) {
        case ClassScope::overall: return "overall";
        case ClassScope::open: return "open";
        case ClassScope::urban: return "urban";
    }
    return "?";
}

ClassScope parse_scope(const std::string& text) {
    if (text == "overall") return ClassScope::overall;
    if (text == "open") return ClassScope::open;
    if (text == "urban") return ClassScope::urban;
    throw ParameterError("unknown class scope '" + text + "'");
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
    tp += other.tp;
    fp += other.fp;
    fn += other.fn;
    tn += other.tn;
    return *this;
}

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

double f1_score(double precision, double recall) {
    return ratio(2.0 * precision * recall, precision + recall);
}

Scores metrics(const ConfusionCounts& counts) {
    const double tp = static_cast<double>(counts.tp);
    const double fp = static_cast<double>(counts.fp);
    const double fn = static_cast<double>(counts.fn);
    Scores s;
    s.precision = ratio(tp, tp + fp);
    s.recall = ratio(tp, tp + fn);
    // 2tp/(2tp+fp+fn) equals 2PR/(P+R) without the intermediate rounding.
    s.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn);
    s.iou = ratio(tp, tp + fp + fn);
    return s;
}

ConfusionCounts confusion(const FloodMask& prediction, const ReferenceMap& reference, ClassScope scope,
                          OtherClassPolicy policy) {
    if (!prediction.mask.same_shape(reference.labels)) {
        throw GeometryError("prediction is " + std::to_string(prediction.mask.rows()) + "x" +
                            std::to_string(prediction.mask.cols()) + ", reference is " +
                            std::to_string(reference.labels.rows()) + "x" + std::to_string(reference.labels.cols()));
    }
    if (!prediction.georef.matches(reference.georef)) {
        throw GeometryError("prediction and reference georeferences differ");
    }
    const std::uint8_t target = scope == ClassScope::urban ? 2 : 1;
    const std::uint8_t other = scope == ClassScope::urban ? 1 : 2;
    ConfusionCounts counts;
    const auto pred = prediction.mask.data();
    const auto ref = reference.labels.data();
    for (std::size_t k = 0; k < pred.size(); ++k) {
        if (pred[k] == kMaskNoData || ref[k] == kMaskNoData) continue;
        bool positive = false;
        if (scope == ClassScope::overall) {
            positive = ref[k] == 1 || ref[k] == 2;
        } else {
            if (ref[k] == other && policy == OtherClassPolicy::ignore) continue;
            positive = ref[k] == target;
        }
        const bool predicted = pred[k] == 1;
        if (predicted && positive) {
            ++counts.tp;
        } else if (predicted) {
            ++counts.fp;
        } else if (positive) {
            ++counts.fn;
        } else {
            ++counts.tn;
        }
    }
    return counts;
}

MetricsRecord make_record(std::string site, std::string method, ClassScope scope, const ConfusionCounts& counts,
                          std::optional<double> threshold, std::optional<int> window) {
    return MetricsRecord{std::move(site), std::move(method), scope, threshold, window, counts, metrics(counts)};
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }
std::string opt(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

template <class Writer>
void to_file(const std::filesystem::path& path, std::span<const MetricsRecord> records, Writer writer) {
    std::ofstream out(path);
    writer(out, records);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
}

}  // namespace

void write_metrics_csv(std::ostream& out, std::span<const MetricsRecord> records) {
    out << "site,method,class,t,w,TP,FP,FN,TN,precision,recall,f1,iou\n";
    for (const MetricsRecord& r : records) {
        out << r.site << ',' << r.method << ',' << to_string(r.scope) << ',' << opt(r.threshold) << ','
            << opt(r.window) << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn << ','
            << r.counts.tn << ',' << num(r.scores.precision) << ',' << num(r.scores.recall) << ','
            << num(r.scores.f1) << ',' << num(r.scores.iou) << '\n';
    }
}

void write_sweep_csv(std::ostream& out, std::span<const MetricsRecord> records) {
    out << "t,w,class,TP,FP,FN,precision,recall,f1,iou\n";
    for (const MetricsRecord& r : records) {
        out << opt(r.threshold) << ',' << opt(r.window) << ',' << to_string(r.scope) << ',' << r.counts.tp << ','
            << r.counts.fp << ',' << r.counts.fn << ',' << num(r.scores.precision) << ','
            << num(r.scores.recall) << ',' << num(r.scores.f1) << ',' << num(r.scores.iou) << '\n';
    }
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records) {
    to_file(path, records, [](std::ostream& o, auto recs) { write_metrics_csv(o, recs); });
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const MetricsRecord> records) {
    to_file(path, records, [](std::ostream& o, auto recs) { write_sweep_csv(o, recs); });
}

}  // namespace bcpflood
