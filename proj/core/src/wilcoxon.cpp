#include "bcpflood/errors.hpp"
#include "bcpflood/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace bcpflood {

namespace {

constexpr std::size_t kExactLimit = 25;

// Two-sided exact p-value. Ranks are doubled so mid-ranks stay integral;
// under the null each sign is a fair coin.
double exact_p(const std::vector<long>& doubled_ranks, long observed) {
    const long total = std::accumulate(doubled_ranks.begin(), doubled_ranks.end(), 0L);
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    long reach = 0;
    for (const long r : doubled_ranks) {
        for (long s = reach; s >= 0; --s) {
            ways[s + r] += ways[s];
        }
        reach += r;
    }
    const double all = std::ldexp(1.0, static_cast<int>(doubled_ranks.size()));
    double lower = 0.0;
    double upper = 0.0;
    for (long s = 0; s <= total; ++s) {
        if (s <= observed) lower += ways[s];
        if (s >= observed) upper += ways[s];
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / all);
}

}  // namespace

double paired_significance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ContractError("paired_significance: lengths " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()) + " differ");
    }
    if (a.size() < 5) {
        throw ContractError("paired_significance: need at least 5 pairs, got " + std::to_string(a.size()));
    }
    std::vector<double> diffs;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        if (!std::isfinite(d)) {
            throw DomainError("paired_significance: non-finite difference at pair " + std::to_string(k));
        }
        if (d != 0.0) diffs.push_back(d);
    }
    const std::size_t n = diffs.size();
    if (n == 0) return 1.0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return std::abs(diffs[i]) < std::abs(diffs[j]); });

    std::vector<long> doubled(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
        // Positions i..j (0-based) share rank ((i+1)+(j+1))/2.
        const long rank2 = static_cast<long>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) doubled[order[k]] = rank2;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }

    long positive2 = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (diffs[k] > 0.0) positive2 += doubled[k];
    }

    if (n <= kExactLimit) {
        return exact_p(doubled, positive2);
    }
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (!(var > 0.0)) return 1.0;
    const double w = static_cast<double>(positive2) / 2.0;
    const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace bcpflood
