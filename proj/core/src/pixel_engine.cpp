#include "bcpflood/pixel_engine.hpp"
#include "bcpflood/digest.hpp"
#include "bcpflood/errors.hpp"
#include "bcpflood/geotiff.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

namespace bcpflood {

using nlohmann::json;

json Provenance::to_json() const {
    return {{"config_digest", config_digest}, {"stack_digest", stack_digest}, {"extra", extra}};
}

Provenance Provenance::from_json(const json& doc) {
    Provenance p;
    p.config_digest = doc.value("config_digest", "");
    p.stack_digest = doc.value("stack_digest", "");
    p.extra = doc.value("extra", json::object());
    return p;
}

unsigned default_workers() {
    if (const char* env = std::getenv("BCPFLOOD_WORKERS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) {
            return static_cast<unsigned>(n);
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<std::size_t> resolve_channels(const RasterStack& stack, const std::vector<std::string>& names) {
    std::vector<std::size_t> out;
    if (names.empty()) {
        for (std::size_t c = 0; c < stack.channels(); ++c) out.push_back(c);
        return out;
    }
    for (const std::string& name : names) {
        const auto idx = stack.channel_index(name);
        if (!idx) {
            throw InputError("channel " + name + " not present in the stack");
        }
        out.push_back(*idx);
    }
    return out;
}

}  // namespace

std::uint64_t pixel_seed(std::uint64_t global_seed, const TimeSeriesSample& series) {
    std::uint64_t h = splitmix(global_seed ^ (series.length() * 0x100000001b3ULL + series.channels()));
    for (std::size_t t = 0; t < series.length(); ++t) {
        h = splitmix(h ^ (series.valid(t) ? 1U : 0U));
        if (!series.valid(t)) continue;
        for (std::size_t c = 0; c < series.channels(); ++c) {
            h = splitmix(h ^ std::bit_cast<std::uint64_t>(series.value(t, c)));
        }
    }
    return h;
}

TimeSeriesSample pixel_series(const RasterStack& stack, const std::vector<std::size_t>& channels,
                              std::size_t row, std::size_t col) {
    const std::size_t n = stack.dates();
    const std::size_t d = channels.size();
    std::vector<double> values(n * d);
    std::vector<bool> valid(n);
    for (std::size_t t = 0; t < n; ++t) {
        valid[t] = !stack.nodata(t, row, col);
        for (std::size_t k = 0; k < d; ++k) {
            values[t * d + k] = valid[t] ? stack.value(t, channels[k], row, col) : 0.0;
        }
    }
    return TimeSeriesSample(n, d, std::move(values), std::move(valid));
}

ProbabilityRaster run_stack(const RasterStack& stack, const BcpConfig& config, const EngineOptions& options) {
    stack.validate();
    config.validate();
    const std::vector<std::size_t> channels = resolve_channels(stack, options.channels);
    if (config.channel_mode == ChannelMode::single && channels.size() != 1) {
        throw ParameterError("single channel mode needs exactly one channel, " + std::to_string(channels.size()) +
                             " selected");
    }
    std::vector<std::string> names;
    for (const std::size_t c : channels) names.push_back(stack.channel_names()[c]);

    const std::size_t rows = stack.rows();
    const std::size_t cols = stack.cols();
    const std::size_t last = stack.dates() - 1;
    ProbabilityRaster out{Grid<double>(rows, cols, std::numeric_limits<double>::quiet_NaN()), stack.georef(),
                          Provenance{config_digest(config, names), stack_digest(stack)}};

    constexpr std::size_t kBlockRows = 4;
    const std::size_t blocks = (rows + kBlockRows - 1) / kBlockRows;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        try {
            for (std::size_t b = next++; b < blocks; b = next++) {
                for (std::size_t r = b * kBlockRows; r < std::min(rows, (b + 1) * kBlockRows); ++r) {
                    for (std::size_t c = 0; c < cols; ++c) {
                        if (stack.nodata(last, r, c)) continue;
                        const TimeSeriesSample series = pixel_series(stack, channels, r, c);
                        std::size_t valid = 0;
                        for (std::size_t t = 0; t <= last; ++t) valid += series.valid(t) ? 1 : 0;
                        if (valid < 2) continue;
                        BcpConfig local = config;
                        local.seed = pixel_seed(config.seed, series);
                        out.values(r, c) = run_bcp(series, local).change_probability.back();
                    }
                }
            }
        } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = blocks;
        }
    };

    const unsigned workers = std::max<std::size_t>(
        1, std::min<std::size_t>(options.workers ? options.workers : default_workers(), blocks));
    std::vector<std::jthread> pool;
    for (unsigned k = 1; k < workers; ++k) pool.emplace_back(worker);
    worker();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::string stack_digest(const RasterStack& stack) {
    Sha256 sha;
    sha.update_value(static_cast<std::uint64_t>(stack.dates()));
    sha.update_value(static_cast<std::uint64_t>(stack.channels()));
    sha.update_value(static_cast<std::uint64_t>(stack.rows()));
    sha.update_value(static_cast<std::uint64_t>(stack.cols()));
    for (const std::string& d : stack.date_labels()) sha.update(d).update("\n");
    for (const std::string& c : stack.channel_names()) sha.update(c).update("\n");
    sha.update_values(std::span<const double>(stack.georef().transform));
    sha.update(stack.georef().crs).update("\n");
    // NaN payloads may differ between producers; hash NoData as a flag.
    const std::span<const float> data = stack.data();
    for (const float v : data) {
        sha.update_value(std::isnan(v) ? std::numeric_limits<float>::quiet_NaN() : v);
    }
    sha.update_values(stack.nodata_mask());
    return sha.hex();
}

json config_to_json(const BcpConfig& config) {
    return {{"gamma", config.gamma},
            {"lambda", config.lambda},
            {"iterations", config.iterations},
            {"burn_in", config.burn_in},
            {"seed", config.seed},
            {"channel_mode", to_string(config.channel_mode)},
            {"zero_variance_epsilon", config.zero_variance_epsilon},
            {"quadrature_nodes", config.quadrature_nodes}};
}

std::string config_digest(const BcpConfig& config, const std::vector<std::string>& channels) {
    json doc = config_to_json(config);
    doc["channels"] = channels;
    return sha256_hex(doc.dump());
}

void write_probability(const std::filesystem::path& path, const ProbabilityRaster& raster) {
    write_float_geotiff(path, raster.values, raster.georef);
    std::ofstream sidecar(path.string() + ".json");
    sidecar << raster.provenance.to_json().dump(2) << '\n';
    if (!sidecar) {
        throw InputError("cannot write " + path.string() + ".json");
    }
}

ProbabilityRaster read_probability(const std::filesystem::path& path) {
    RasterFile file = read_geotiff(path);
    if (file.bands.size() != 1) {
        throw InputError(path.string() + ": probability raster must have one band");
    }
    ProbabilityRaster out{std::move(file.bands.front()), file.georef, {}};
    for (const double v : out.values.data()) {
        if (!std::isnan(v) && !(v >= 0.0 && v <= 1.0)) {
            throw InputError(path.string() + ": probability " + std::to_string(v) + " outside [0, 1]");
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

}  // namespace bcpflood
