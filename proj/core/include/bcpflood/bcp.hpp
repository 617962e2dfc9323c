#pragma once
// Barry-Hartigan product-partition changepoint model for one time series.
//
// A partition of positions 0..n-1 into contiguous blocks is encoded by n-1
// indicators; indicator i set means a new block starts at position i+1.
// Given all other indicators, the conditional odds of indicator i are a
// product of two ratios: one over the changepoint probability p (prior
// p ~ U(0, gamma)) and one over the variance ratio w (prior w ~ U(0, lambda)).
// Both are evaluated in log space. A systematic-scan Gibbs sampler draws
// each indicator from its conditional in turn and the posterior change
// probability is the fraction of retained sweeps with the indicator set.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bcpflood {

using Indicators = std::vector<bool>;
using Rng = std::mt19937_64;

// Uniform draw on [0, 1) from the top 53 bits of one engine output, so the
// stream is identical on every standard library.
double uniform01(Rng& rng);

enum class ChannelMode {
    single,           // exactly one channel
    pooled,           // standardized channels share one partition
    per_channel_max,  // univariate run per channel, elementwise max
};

const char* to_string(ChannelMode mode);

// n time steps by d channels, row-major (value(t, c) = values[t * d + c]).
class TimeSeriesSample {
public:
    TimeSeriesSample() = default;
    TimeSeriesSample(std::size_t length, std::size_t channels, std::vector<double> values,
                     std::vector<bool> valid = {});

    static TimeSeriesSample univariate(std::vector<double> values);

    std::size_t length() const { return length_; }
    std::size_t channels() const { return channels_; }
    double value(std::size_t t, std::size_t c) const { return values_[t * channels_ + c]; }
    bool valid(std::size_t t) const { return valid_[t]; }
    std::span<const double> values() const { return values_; }
    bool all_valid() const;

    // Drops invalid steps. Second member maps each kept step to its
    // original index.
    std::pair<TimeSeriesSample, std::vector<std::size_t>> compact() const;

    TimeSeriesSample channel(std::size_t c) const;

private:
    std::size_t length_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> values_;
    std::vector<bool> valid_;
};

struct BcpConfig {
    double gamma = 0.2;
    double lambda = 0.2;
    int iterations = 500;  // retained sweeps
    int burn_in = 50;
    std::uint64_t seed = 0;
    ChannelMode channel_mode = ChannelMode::single;
    double zero_variance_epsilon = 1e-12;
    int quadrature_nodes = 64;  // Gauss-Legendre nodes per panel

    // Throws ParameterError when a field is out of range.
    void validate() const;
};

struct BlockSums {
    double within = 0.0;   // W
    double between = 0.0;  // B
};

struct BcpResult {
    std::vector<double> change_probability;  // n-1 entries, kept steps
    std::vector<double> posterior_mean;      // n x channels, row-major
    std::size_t channels = 0;
    int sweeps_used = 0;
    std::vector<std::size_t> kept_index;  // original step of each kept step
};

// Channels centered on their mean and, optionally, scaled to unit variance,
// with prefix sums for O(1) block statistics. Requires every step valid.
// Channels whose raw sum of squares is below the zero-variance epsilon are
// dropped from the active set when at least one other channel varies.
class PreparedSeries {
public:
    PreparedSeries(const TimeSeriesSample& sample, bool standardize, double zero_variance_epsilon);

    std::size_t length() const { return length_; }
    // Number of active channels.
    std::size_t channels() const { return active_.size(); }
    // Whole series has (pooled) raw sum of squares below epsilon.
    bool degenerate() const { return degenerate_; }
    double raw_total_ss() const { return raw_total_ss_; }

    // Sum and sum of squares of prepared values over [begin, end).
    double sum(std::size_t begin, std::size_t end, std::size_t c) const {
        return prefix_[end * channels() + c] - prefix_[begin * channels() + c];
    }
    double sum_sq(std::size_t begin, std::size_t end, std::size_t c) const {
        return prefix_sq_[end * channels() + c] - prefix_sq_[begin * channels() + c];
    }
    double value(std::size_t t, std::size_t c) const { return values_[t * channels() + c]; }
    double grand_mean(std::size_t c) const { return grand_mean_[c]; }

    // Maps a prepared-scale value of active channel c back to input units.
    double to_raw(std::size_t c, double prepared) const {
        return prepared * scale_[c] + offset_[c];
    }
    // Input channel index of active channel c.
    std::size_t source_channel(std::size_t c) const { return active_[c]; }
    std::size_t source_channels() const { return source_channels_; }
    double source_mean(std::size_t source) const { return source_mean_[source]; }

private:
    std::size_t length_ = 0;
    std::size_t source_channels_ = 0;
    bool degenerate_ = false;
    double raw_total_ss_ = 0.0;
    std::vector<std::size_t> active_;
    std::vector<double> source_mean_;
    std::vector<double> offset_;
    std::vector<double> scale_;
    std::vector<double> grand_mean_;
    std::vector<double> values_;
    std::vector<double> prefix_;
    std::vector<double> prefix_sq_;
};

// Indicator vector plus cached block boundaries and per-block sums.
class PartitionState {
public:
    struct Block {
        std::size_t begin;
        std::size_t end;  // exclusive
    };

    explicit PartitionState(const PreparedSeries& series);  // all false
    PartitionState(const PreparedSeries& series, const Indicators& indicators);

    const Indicators& indicators() const { return indicators_; }
    bool indicator(std::size_t i) const { return indicators_[i]; }
    std::size_t block_count() const { return blocks_.size(); }
    const std::vector<Block>& blocks() const { return blocks_; }

    // Flips indicator i, splitting or merging the affected block.
    void set(std::size_t i, bool value, const PreparedSeries& series);

    // W and B from the cached block sums.
    BlockSums totals(const PreparedSeries& series) const;

    // Largest relative gap between cached block sums and a from-scratch
    // recomputation over the series values.
    double cache_deviation(const PreparedSeries& series) const;

private:
    void rebuild(const PreparedSeries& series);
    std::size_t block_ending_at(std::size_t end) const;
    std::size_t block_containing(std::size_t position) const;

    std::size_t channels_ = 0;
    Indicators indicators_;
    std::vector<Block> blocks_;
    std::vector<double> sums_;     // blocks x channels
    std::vector<double> squares_;  // blocks x channels
};

// One chain over one prepared series. Conditional log-odds are a pure
// function of (position, other indicators) and are memoized per sampler.
class GibbsSampler {
public:
    GibbsSampler(const TimeSeriesSample& sample, const BcpConfig& config);

    const PreparedSeries& series() const { return series_; }
    const BcpConfig& config() const { return config_; }
    PartitionState initial_partition() const { return PartitionState(series_); }

    // log(p_i / (1 - p_i)); -inf when the series is degenerate.
    double log_odds(std::size_t i, const PartitionState& partition);
    double compute_log_odds(std::size_t i, const PartitionState& partition) const;

    // One systematic scan over i = 0..n-2.
    void pass(PartitionState& partition, Rng& rng);

private:
    PreparedSeries series_;
    BcpConfig config_;
    double n_eff_ = 0.0;
    std::vector<double> beta_ratio_;  // indexed by block count b
    bool memoize_ = false;
    std::unordered_map<std::uint64_t, double> memo_;
};

// W and B of the partition. Single-channel series use the values as given;
// pooled mode sums per-channel quantities over standardized channels.
BlockSums block_sums(const TimeSeriesSample& sample, const Indicators& indicators,
                     ChannelMode mode = ChannelMode::single);

// log of  int_0^gamma p^b (1-p)^(n-b-1) dp / int_0^gamma p^(b-1) (1-p)^(n-b) dp.
double incomplete_beta_ratio(int blocks, int n, double gamma);

// log of  int_0^lambda w^(e/2) / (W + B w)^((n_eff-1)/2) dw,  e = half_exponent.
// Returns +inf when W = 0 and the integral diverges at w = 0.
double variance_ratio_integral(double within, double between, int n_eff, double lambda,
                               int half_exponent, int nodes = 64);

// Conditional log-odds of indicator i given the remaining indicators (the
// value stored at i is ignored).
double conditional_change_odds(std::size_t i, const TimeSeriesSample& sample,
                               const Indicators& indicators, const BcpConfig& config);

void gibbs_pass(const TimeSeriesSample& sample, PartitionState& partition,
                const BcpConfig& config, Rng& rng);

BcpResult run_bcp(const TimeSeriesSample& sample, const BcpConfig& config);

// Exact long-run marginals P(U_i = 1) of the sampler, by power iteration
// of the sweep kernel over all 2^(n-1) partitions started from the
// all-false partition. n <= 16.
std::vector<double> exact_stationary(const TimeSeriesSample& sample, const BcpConfig& config);

}  // namespace bcpflood
