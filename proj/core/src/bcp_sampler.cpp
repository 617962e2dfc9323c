#include "bcpflood/bcp.hpp"
#include "bcpflood/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bcpflood {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// W below this fraction of the total sum of squares is rounding noise from
// the prefix sums and is treated as exactly zero.
constexpr double kZeroWithinRelative = 1e-10;

// Memo keys pack n-1 <= 58 indicator bits plus a 6-bit position.
constexpr std::size_t kMemoMaxIndicators = 58;

double probability_from_log_odds(double log_odds) {
    if (log_odds == kInf) {
        return 1.0;
    }
    if (log_odds == -kInf) {
        return 0.0;
    }
    return 1.0 / (1.0 + std::exp(-log_odds));
}

struct BlockStats {
    double within = 0.0;
    double between = 0.0;
};

BlockStats stats_from_sums(double sum, double sum_sq, double length, double grand_mean) {
    const double mean = sum / length;
    const double deviation = mean - grand_mean;
    return {std::max(0.0, sum_sq - sum * mean), length * deviation * deviation};
}

BlockStats series_stats(const PreparedSeries& series, std::size_t begin, std::size_t end) {
    BlockStats out;
    const double length = static_cast<double>(end - begin);
    for (std::size_t c = 0; c < series.channels(); ++c) {
        const BlockStats s = stats_from_sums(series.sum(begin, end, c),
                                             series.sum_sq(begin, end, c), length,
                                             series.grand_mean(c));
        out.within += s.within;
        out.between += s.between;
    }
    return out;
}

}  // namespace

double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

const char* to_string(ChannelMode mode) {
    switch (mode) {
        case ChannelMode::single:
            return "single";
        case ChannelMode::pooled:
            return "pooled";
        case ChannelMode::per_channel_max:
            return "per-channel-max";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// TimeSeriesSample

TimeSeriesSample::TimeSeriesSample(std::size_t length, std::size_t channels,
                                   std::vector<double> values, std::vector<bool> valid)
    : length_(length), channels_(channels), values_(std::move(values)), valid_(std::move(valid)) {
    if (channels_ == 0) {
        throw ContractError("TimeSeriesSample: at least one channel required");
    }
    if (values_.size() != length_ * channels_) {
        throw ContractError("TimeSeriesSample: values size does not match length x channels");
    }
    if (valid_.empty()) {
        valid_.assign(length_, true);
    } else if (valid_.size() != length_) {
        throw ContractError("TimeSeriesSample: validity flags do not match length");
    }
    for (std::size_t t = 0; t < length_; ++t) {
        for (std::size_t c = 0; c < channels_; ++c) {
            if (!std::isfinite(value(t, c))) {
                valid_[t] = false;
            }
        }
    }
}

TimeSeriesSample TimeSeriesSample::univariate(std::vector<double> values) {
    const std::size_t n = values.size();
    return TimeSeriesSample(n, 1, std::move(values));
}

bool TimeSeriesSample::all_valid() const {
    return std::all_of(valid_.begin(), valid_.end(), [](bool v) { return v; });
}

std::pair<TimeSeriesSample, std::vector<std::size_t>> TimeSeriesSample::compact() const {
    std::vector<std::size_t> kept;
    std::vector<double> values;
    for (std::size_t t = 0; t < length_; ++t) {
        if (!valid_[t]) {
            continue;
        }
        kept.push_back(t);
        for (std::size_t c = 0; c < channels_; ++c) {
            values.push_back(value(t, c));
        }
    }
    const std::size_t n = kept.size();
    return {TimeSeriesSample(n, channels_, std::move(values)), std::move(kept)};
}

TimeSeriesSample TimeSeriesSample::channel(std::size_t c) const {
    if (c >= channels_) {
        throw ContractError("TimeSeriesSample::channel: index out of range");
    }
    std::vector<double> values(length_);
    for (std::size_t t = 0; t < length_; ++t) {
        values[t] = value(t, c);
    }
    return TimeSeriesSample(length_, 1, std::move(values), valid_);
}

void BcpConfig::validate() const {
    if (!(gamma > 0.0) || gamma > 1.0) {
        throw ParameterError("gamma must lie in (0, 1]");
    }
    if (!(lambda > 0.0) || lambda > 1.0) {
        throw ParameterError("lambda must lie in (0, 1]");
    }
    if (iterations <= 0) {
        throw ParameterError("iterations must be positive");
    }
    if (burn_in < 0) {
        throw ParameterError("burn_in must be non-negative");
    }
    if (!(zero_variance_epsilon >= 0.0)) {
        throw ParameterError("zero_variance_epsilon must be non-negative");
    }
    if (quadrature_nodes <= 0) {
        throw ParameterError("quadrature_nodes must be positive");
    }
}

// ---------------------------------------------------------------------------
// PreparedSeries

PreparedSeries::PreparedSeries(const TimeSeriesSample& sample, bool standardize,
                               double zero_variance_epsilon)
    : length_(sample.length()), source_channels_(sample.channels()) {
    if (!sample.all_valid()) {
        throw ContractError("PreparedSeries: every time step must be valid");
    }
    if (length_ == 0) {
        throw ContractError("PreparedSeries: empty series");
    }
    const double n = static_cast<double>(length_);
    std::vector<double> ss(source_channels_, 0.0);
    source_mean_.assign(source_channels_, 0.0);
    for (std::size_t c = 0; c < source_channels_; ++c) {
        double sum = 0.0;
        for (std::size_t t = 0; t < length_; ++t) {
            sum += sample.value(t, c);
        }
        const double mean = sum / n;
        double acc = 0.0;
        for (std::size_t t = 0; t < length_; ++t) {
            const double d = sample.value(t, c) - mean;
            acc += d * d;
        }
        source_mean_[c] = mean;
        ss[c] = acc;
        raw_total_ss_ += acc;
    }
    degenerate_ = raw_total_ss_ < zero_variance_epsilon;

    for (std::size_t c = 0; c < source_channels_; ++c) {
        if (source_channels_ == 1 || degenerate_ || ss[c] >= zero_variance_epsilon) {
            active_.push_back(c);
        }
    }

    const std::size_t d = active_.size();
    offset_.resize(d);
    scale_.resize(d);
    grand_mean_.assign(d, 0.0);
    values_.resize(length_ * d);
    prefix_.assign((length_ + 1) * d, 0.0);
    prefix_sq_.assign((length_ + 1) * d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        const std::size_t c = active_[k];
        offset_[k] = source_mean_[c];
        scale_[k] = (standardize && ss[c] > 0.0) ? std::sqrt(ss[c] / n) : 1.0;
        double sum = 0.0;
        for (std::size_t t = 0; t < length_; ++t) {
            const double v = (sample.value(t, c) - offset_[k]) / scale_[k];
            values_[t * d + k] = v;
            prefix_[(t + 1) * d + k] = prefix_[t * d + k] + v;
            prefix_sq_[(t + 1) * d + k] = prefix_sq_[t * d + k] + v * v;
            sum += v;
        }
        grand_mean_[k] = sum / n;
    }
}

// ---------------------------------------------------------------------------
// PartitionState

PartitionState::PartitionState(const PreparedSeries& series)
    : PartitionState(series, Indicators(series.length() - 1, false)) {}

PartitionState::PartitionState(const PreparedSeries& series, const Indicators& indicators)
    : channels_(series.channels()), indicators_(indicators) {
    if (series.length() < 2 || indicators_.size() != series.length() - 1) {
        throw ContractError("PartitionState: need n-1 indicators for a series of length n >= 2");
    }
    rebuild(series);
}

void PartitionState::rebuild(const PreparedSeries& series) {
    blocks_.clear();
    std::size_t begin = 0;
    for (std::size_t i = 0; i < indicators_.size(); ++i) {
        if (indicators_[i]) {
            blocks_.push_back({begin, i + 1});
            begin = i + 1;
        }
    }
    blocks_.push_back({begin, series.length()});
    sums_.resize(blocks_.size() * channels_);
    squares_.resize(blocks_.size() * channels_);
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        for (std::size_t c = 0; c < channels_; ++c) {
            sums_[k * channels_ + c] = series.sum(blocks_[k].begin, blocks_[k].end, c);
            squares_[k * channels_ + c] = series.sum_sq(blocks_[k].begin, blocks_[k].end, c);
        }
    }
}

std::size_t PartitionState::block_containing(std::size_t position) const {
    auto it = std::upper_bound(blocks_.begin(), blocks_.end(), position,
                               [](std::size_t p, const Block& b) { return p < b.begin; });
    return static_cast<std::size_t>(std::distance(blocks_.begin(), it)) - 1;
}

std::size_t PartitionState::block_ending_at(std::size_t end) const {
    const std::size_t k = block_containing(end - 1);
    if (blocks_[k].end != end) {
        throw ContractError("PartitionState: no block boundary at requested position");
    }
    return k;
}

void PartitionState::set(std::size_t i, bool value, const PreparedSeries& series) {
    if (i >= indicators_.size()) {
        throw ContractError("PartitionState::set: position out of range");
    }
    if (indicators_[i] == value) {
        return;
    }
    indicators_[i] = value;
    const auto d = static_cast<std::ptrdiff_t>(channels_);
    if (value) {
        const std::size_t k = block_containing(i);
        const Block whole = blocks_[k];
        const Block left{whole.begin, i + 1};
        const Block right{i + 1, whole.end};
        blocks_[k] = left;
        blocks_.insert(blocks_.begin() + static_cast<std::ptrdiff_t>(k) + 1, right);
        std::vector<double> right_sums(channels_);
        std::vector<double> right_squares(channels_);
        for (std::size_t c = 0; c < channels_; ++c) {
            right_sums[c] = series.sum(right.begin, right.end, c);
            right_squares[c] = series.sum_sq(right.begin, right.end, c);
            sums_[k * channels_ + c] -= right_sums[c];
            squares_[k * channels_ + c] -= right_squares[c];
        }
        const auto at = static_cast<std::ptrdiff_t>(k + 1) * d;
        sums_.insert(sums_.begin() + at, right_sums.begin(), right_sums.end());
        squares_.insert(squares_.begin() + at, right_squares.begin(), right_squares.end());
    } else {
        const std::size_t k = block_ending_at(i + 1);
        blocks_[k].end = blocks_[k + 1].end;
        for (std::size_t c = 0; c < channels_; ++c) {
            sums_[k * channels_ + c] += sums_[(k + 1) * channels_ + c];
            squares_[k * channels_ + c] += squares_[(k + 1) * channels_ + c];
        }
        blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(k) + 1);
        const auto at = static_cast<std::ptrdiff_t>(k + 1) * d;
        sums_.erase(sums_.begin() + at, sums_.begin() + at + d);
        squares_.erase(squares_.begin() + at, squares_.begin() + at + d);
    }
}

BlockSums PartitionState::totals(const PreparedSeries& series) const {
    BlockSums out;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        const double length = static_cast<double>(blocks_[k].end - blocks_[k].begin);
        for (std::size_t c = 0; c < channels_; ++c) {
            const BlockStats s = stats_from_sums(sums_[k * channels_ + c],
                                                 squares_[k * channels_ + c], length,
                                                 series.grand_mean(c));
            out.within += s.within;
            out.between += s.between;
        }
    }
    return out;
}

double PartitionState::cache_deviation(const PreparedSeries& series) const {
    double worst = 0.0;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        for (std::size_t c = 0; c < channels_; ++c) {
            double sum = 0.0;
            double sum_sq = 0.0;
            double magnitude = 0.0;
            for (std::size_t t = blocks_[k].begin; t < blocks_[k].end; ++t) {
                const double v = series.value(t, c);
                sum += v;
                sum_sq += v * v;
                magnitude += std::abs(v);
            }
            const double scale_sum = std::max(magnitude, 1e-300);
            const double scale_sq = std::max(sum_sq, 1e-300);
            worst = std::max(worst, std::abs(sums_[k * channels_ + c] - sum) / scale_sum);
            worst = std::max(worst, std::abs(squares_[k * channels_ + c] - sum_sq) / scale_sq);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// GibbsSampler

GibbsSampler::GibbsSampler(const TimeSeriesSample& sample, const BcpConfig& config)
    : series_((config.validate(), sample), true, config.zero_variance_epsilon), config_(config) {
    if (config.channel_mode == ChannelMode::per_channel_max) {
        throw ContractError("GibbsSampler: per-channel-max runs one sampler per channel");
    }
    if (config.channel_mode == ChannelMode::single && sample.channels() != 1) {
        throw ContractError("GibbsSampler: single mode expects exactly one channel, got " +
                            std::to_string(sample.channels()));
    }
    const std::size_t n = series_.length();
    if (n < 2) {
        throw ContractError("GibbsSampler: series needs at least two observations");
    }
    n_eff_ = static_cast<double>(series_.channels() * (n - 1) + 1);
    beta_ratio_.assign(n, 0.0);
    for (std::size_t b = 1; b < n; ++b) {
        beta_ratio_[b] = incomplete_beta_ratio(static_cast<int>(b), static_cast<int>(n),
                                               config.gamma);
    }
    memoize_ = n - 1 <= kMemoMaxIndicators;
}

double GibbsSampler::compute_log_odds(std::size_t i, const PartitionState& partition) const {
    const std::size_t n = series_.length();
    if (i + 1 >= n) {
        throw ContractError("conditional_change_odds: position out of range");
    }
    if (series_.degenerate()) {
        return -kInf;
    }

    // Blocks untouched by indicator i contribute identically to both states.
    const auto& blocks = partition.blocks();
    std::size_t first = 0;  // affected block(s) are [first, last]
    std::size_t last = 0;
    if (partition.indicator(i)) {
        for (std::size_t k = 1; k < blocks.size(); ++k) {
            if (blocks[k].begin == i + 1) {
                first = k - 1;
                last = k;
                break;
            }
        }
    } else {
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            if (blocks[k].begin <= i && i + 1 < blocks[k].end) {
                first = last = k;
                break;
            }
        }
    }

    BlockStats rest;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (k >= first && k <= last) {
            continue;
        }
        const BlockStats s = series_stats(series_, blocks[k].begin, blocks[k].end);
        rest.within += s.within;
        rest.between += s.between;
    }
    const std::size_t begin = blocks[first].begin;
    const std::size_t end = blocks[last].end;
    const BlockStats merged = series_stats(series_, begin, end);
    const BlockStats left = series_stats(series_, begin, i + 1);
    const BlockStats right = series_stats(series_, i + 1, end);

    double w0 = rest.within + merged.within;
    double b0 = rest.between + merged.between;
    double w1 = rest.within + left.within + right.within;
    double b1 = rest.between + left.between + right.between;

    const double total = static_cast<double>(series_.channels() * n);
    if (w0 < kZeroWithinRelative * total) {
        w0 = 0.0;
    }
    if (w1 < kZeroWithinRelative * total) {
        w1 = 0.0;
    }

    const std::size_t b = partition.indicator(i) ? blocks.size() - 1 : blocks.size();
    const int n_eff = static_cast<int>(n_eff_);
    // Every channel integrates out its own block means, so each block adds
    // d half-powers of w.
    const int d = static_cast<int>(series_.channels());
    const double log_den = variance_ratio_integral(w0, b0, n_eff, config_.lambda,
                                                   d * (static_cast<int>(b) - 1),
                                                   config_.quadrature_nodes);
    if (log_den == kInf) {
        // W0 -> 0: splitting a constant block has vanishing odds.
        return -kInf;
    }
    const double log_num = variance_ratio_integral(w1, b1, n_eff, config_.lambda,
                                                   d * static_cast<int>(b),
                                                   config_.quadrature_nodes);
    if (log_num == kInf) {
        return kInf;
    }
    return beta_ratio_[b] + log_num - log_den;
}

double GibbsSampler::log_odds(std::size_t i, const PartitionState& partition) {
    if (!memoize_) {
        return compute_log_odds(i, partition);
    }
    std::uint64_t key = static_cast<std::uint64_t>(i) << kMemoMaxIndicators;
    const Indicators& u = partition.indicators();
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (u[j] && j != i) {
            key |= std::uint64_t{1} << j;
        }
    }
    auto it = memo_.find(key);
    if (it != memo_.end()) {
        return it->second;
    }
    const double value = compute_log_odds(i, partition);
    memo_.emplace(key, value);
    return value;
}

void GibbsSampler::pass(PartitionState& partition, Rng& rng) {
    const std::size_t positions = series_.length() - 1;
    for (std::size_t i = 0; i < positions; ++i) {
        const double p = probability_from_log_odds(log_odds(i, partition));
        const bool draw = uniform01(rng) < p;
        partition.set(i, draw, series_);
    }
}

// ---------------------------------------------------------------------------
// Free functions

BlockSums block_sums(const TimeSeriesSample& sample, const Indicators& indicators,
                     ChannelMode mode) {
    if (indicators.size() + 1 != sample.length()) {
        throw ContractError("block_sums: partition length does not match the sample");
    }
    if (mode == ChannelMode::single && sample.channels() != 1) {
        throw ContractError("block_sums: single mode expects exactly one channel");
    }
    const PreparedSeries series(sample, mode != ChannelMode::single, 0.0);
    const PartitionState partition(series, indicators);
    return partition.totals(series);
}

double conditional_change_odds(std::size_t i, const TimeSeriesSample& sample,
                               const Indicators& indicators, const BcpConfig& config) {
    if (indicators.size() + 1 != sample.length()) {
        throw ContractError("conditional_change_odds: partition length does not match the sample");
    }
    const GibbsSampler sampler(sample, config);
    const PartitionState partition(sampler.series(), indicators);
    return sampler.compute_log_odds(i, partition);
}

void gibbs_pass(const TimeSeriesSample& sample, PartitionState& partition,
                const BcpConfig& config, Rng& rng) {
    GibbsSampler sampler(sample, config);
    if (partition.indicators().size() + 1 != sampler.series().length()) {
        throw ContractError("gibbs_pass: partition length does not match the sample");
    }
    sampler.pass(partition, rng);
}

namespace {

// One chain on a fully valid sample. `result` receives probabilities and
// means for the sample's channels.
void run_chain(const TimeSeriesSample& sample, const BcpConfig& config, Rng& rng,
               std::vector<double>& probability, std::vector<double>& means) {
    const std::size_t n = sample.length();
    const std::size_t d = sample.channels();
    GibbsSampler sampler(sample, config);
    const PreparedSeries& series = sampler.series();
    probability.assign(n - 1, 0.0);
    means.assign(n * d, 0.0);

    if (series.degenerate()) {
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t c = 0; c < d; ++c) {
                means[t * d + c] = series.source_mean(c);
            }
        }
        return;
    }

    PartitionState partition = sampler.initial_partition();
    for (int s = 0; s < config.burn_in; ++s) {
        sampler.pass(partition, rng);
    }

    std::vector<long long> counts(n - 1, 0);
    std::vector<double> mean_sums(n * d, 0.0);
    std::vector<bool> is_active(d, false);
    for (std::size_t k = 0; k < series.channels(); ++k) {
        is_active[series.source_channel(k)] = true;
    }
    for (int s = 0; s < config.iterations; ++s) {
        sampler.pass(partition, rng);
        const Indicators& u = partition.indicators();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            counts[i] += u[i] ? 1 : 0;
        }
        for (const auto& block : partition.blocks()) {
            const double length = static_cast<double>(block.end - block.begin);
            for (std::size_t k = 0; k < series.channels(); ++k) {
                const double block_mean =
                    series.to_raw(k, series.sum(block.begin, block.end, k) / length);
                const std::size_t c = series.source_channel(k);
                for (std::size_t t = block.begin; t < block.end; ++t) {
                    mean_sums[t * d + c] += block_mean;
                }
            }
        }
    }

    const double sweeps = static_cast<double>(config.iterations);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        probability[i] = static_cast<double>(counts[i]) / sweeps;
    }
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t c = 0; c < d; ++c) {
            means[t * d + c] = is_active[c] ? mean_sums[t * d + c] / sweeps : series.source_mean(c);
        }
    }
}

}  // namespace

BcpResult run_bcp(const TimeSeriesSample& sample, const BcpConfig& config) {
    config.validate();
    auto [compacted, kept] = sample.compact();
    if (compacted.length() < 2) {
        throw InsufficientDataError("run_bcp: fewer than two valid observations");
    }
    if (config.channel_mode == ChannelMode::single && sample.channels() != 1) {
        throw ContractError("run_bcp: single mode expects exactly one channel");
    }

    BcpResult result;
    result.channels = compacted.channels();
    result.sweeps_used = config.iterations;
    result.kept_index = std::move(kept);

    Rng rng(config.seed);
    if (config.channel_mode == ChannelMode::per_channel_max) {
        const std::size_t n = compacted.length();
        const std::size_t d = compacted.channels();
        BcpConfig single = config;
        single.channel_mode = ChannelMode::single;
        result.change_probability.assign(n - 1, 0.0);
        result.posterior_mean.assign(n * d, 0.0);
        std::vector<double> probability;
        std::vector<double> means;
        for (std::size_t c = 0; c < d; ++c) {
            run_chain(compacted.channel(c), single, rng, probability, means);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                result.change_probability[i] = std::max(result.change_probability[i], probability[i]);
            }
            for (std::size_t t = 0; t < n; ++t) {
                result.posterior_mean[t * d + c] = means[t];
            }
        }
        return result;
    }

    run_chain(compacted, config, rng, result.change_probability, result.posterior_mean);
    return result;
}

}  // namespace bcpflood
