#include "bcpflood/bcp.hpp"
#include "bcpflood/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bcpflood {
namespace {

constexpr std::size_t kMaxLength = 16;
constexpr double kResidualTolerance = 1e-12;
constexpr double kWorkBudget = 4e10;  // state-site updates before giving up

std::vector<double> stationary_marginals(const TimeSeriesSample& sample, const BcpConfig& config) {
    const std::size_t n = sample.length();
    const std::size_t sites = n - 1;
    const std::size_t states = std::size_t{1} << sites;
    std::vector<double> marginals(sites, 0.0);

    const GibbsSampler sampler(sample, config);
    if (sampler.series().degenerate()) {
        return marginals;
    }

    // prob[i * states + s] = P(U_i = 1 | others as in s), filled for s with bit i clear.
    std::vector<double> prob(sites * states, 0.0);
    Indicators bits(sites);
    for (std::size_t s = 0; s < states; ++s) {
        for (std::size_t i = 0; i < sites; ++i) {
            bits[i] = (s >> i) & 1U;
        }
        const PartitionState partition(sampler.series(), bits);
        for (std::size_t i = 0; i < sites; ++i) {
            if (bits[i]) {
                continue;
            }
            const double lo = sampler.compute_log_odds(i, partition);
            double p = 0.0;
            if (lo == std::numeric_limits<double>::infinity()) {
                p = 1.0;
            } else if (lo != -std::numeric_limits<double>::infinity()) {
                p = 1.0 / (1.0 + std::exp(-lo));
            }
            prob[i * states + s] = p;
        }
    }

    // The sampler starts from the all-false partition.
    std::vector<double> dist(states, 0.0);
    dist[0] = 1.0;
    std::vector<double> previous(states);
    const double max_sweeps = kWorkBudget / static_cast<double>(states * sites);
    bool converged = false;
    for (double sweep = 0; sweep < max_sweeps; sweep += 1.0) {
        previous = dist;
        for (std::size_t i = 0; i < sites; ++i) {
            const std::size_t bit = std::size_t{1} << i;
            for (std::size_t s = 0; s < states; ++s) {
                if (s & bit) {
                    continue;
                }
                const double mass = dist[s] + dist[s | bit];
                const double p = prob[i * states + s];
                dist[s] = mass * (1.0 - p);
                dist[s | bit] = mass * p;
            }
        }
        double residual = 0.0;
        for (std::size_t s = 0; s < states; ++s) {
            residual += std::abs(dist[s] - previous[s]);
        }
        if (residual < kResidualTolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw Error("exact_stationary: power iteration did not converge");
    }

    for (std::size_t s = 0; s < states; ++s) {
        for (std::size_t i = 0; i < sites; ++i) {
            if ((s >> i) & 1U) {
                marginals[i] += dist[s];
            }
        }
    }
    return marginals;
}

}  // namespace

std::vector<double> exact_stationary(const TimeSeriesSample& sample, const BcpConfig& config) {
    config.validate();
    auto [compacted, kept] = sample.compact();
    if (compacted.length() > kMaxLength) {
        throw SizeError("exact_stationary: series longer than 16 observations");
    }
    if (compacted.length() < 2) {
        throw InsufficientDataError("exact_stationary: fewer than two valid observations");
    }
    if (config.channel_mode != ChannelMode::per_channel_max) {
        return stationary_marginals(compacted, config);
    }
    BcpConfig single = config;
    single.channel_mode = ChannelMode::single;
    std::vector<double> out(compacted.length() - 1, 0.0);
    for (std::size_t c = 0; c < compacted.channels(); ++c) {
        const std::vector<double> m = stationary_marginals(compacted.channel(c), single);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = std::max(out[i], m[i]);
        }
    }
    return out;
}

}  // namespace bcpflood
