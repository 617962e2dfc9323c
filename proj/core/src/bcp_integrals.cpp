#include "bcpflood/bcp.hpp"
#include "bcpflood/errors.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bcpflood {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GaussLegendreRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

GaussLegendreRule make_rule(int n) {
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int k = 0; k < half; ++k) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[k] = -x;
        rule.nodes[n - 1 - k] = x;
        rule.weights[k] = w;
        rule.weights[n - 1 - k] = w;
    }
    return rule;
}

const GaussLegendreRule& gauss_legendre(int n) {
    thread_local std::unordered_map<int, GaussLegendreRule> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        it = cache.emplace(n, make_rule(n)).first;
    }
    return it->second;
}

// Running log-sum-exp.
class LogSum {
public:
    void add(double log_term) {
        if (log_term == -kInf) {
            return;
        }
        if (log_term <= max_) {
            sum_ += std::exp(log_term - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
            max_ = log_term;
        }
    }
    double value() const { return sum_ == 0.0 ? -kInf : max_ + std::log(sum_); }

private:
    double max_ = -kInf;
    double sum_ = 0.0;
};

double integer_power(double x, int n) {
    double result = 1.0;
    while (n > 0) {
        if (n & 1) {
            result *= x;
        }
        x *= x;
        n >>= 1;
    }
    return result;
}

// log I_x(a, b), regularized incomplete beta.
double log_regularized_beta(double a, double b, double x) {
    const double r = boost::math::ibeta(a, b, x);
    if (r > 1e-280) {
        return std::log(r);
    }
    // Power series, valid for x < 1:
    //   B_x(a,b) = x^a (1-x)^b / a * [1 + sum_k T_k],
    //   T_0 = (a+b)/(a+1) x,  T_{k+1} = T_k x (a+b+k+1)/(a+k+2).
    double term = (a + b) / (a + 1.0) * x;
    double series = 1.0 + term;
    for (int k = 0; k < 10000 && term > 1e-17 * series; ++k) {
        term *= x * (a + b + k + 1.0) / (a + k + 2.0);
        series += term;
    }
    const double log_beta =
        boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
    return a * std::log(x) + b * std::log1p(-x) - std::log(a) + std::log(series) - log_beta;
}

}  // namespace

double incomplete_beta_ratio(int blocks, int n, double gamma) {
    if (blocks < 1 || n <= blocks) {
        throw DomainError("incomplete_beta_ratio: need 1 <= b < n (b=" + std::to_string(blocks) +
                          ", n=" + std::to_string(n) + ")");
    }
    if (!(gamma > 0.0) || gamma > 1.0) {
        throw DomainError("incomplete_beta_ratio: gamma must lie in (0, 1]");
    }
    const double b = blocks;
    const double nn = n;
    // Complete integrals are B(b+1, n-b) and B(b, n-b+1); their ratio is b/(n-b).
    const double complete = std::log(b) - std::log(nn - b);
    if (gamma == 1.0) {
        return complete;
    }
    return complete + log_regularized_beta(b + 1.0, nn - b, gamma) -
           log_regularized_beta(b, nn - b + 1.0, gamma);
}

double variance_ratio_integral(double within, double between, int n_eff, double lambda,
                               int half_exponent, int nodes) {
    if (!(lambda > 0.0) || lambda > 1.0) {
        throw DomainError("variance_ratio_integral: lambda must lie in (0, 1]");
    }
    if (n_eff < 1 || half_exponent < 0 || nodes < 1) {
        throw DomainError("variance_ratio_integral: invalid exponent or node count");
    }
    if (!(within >= 0.0) || !(between >= 0.0) || !(within + between * lambda > 0.0) ||
        !std::isfinite(within + between)) {
        throw DegenerateVarianceError("variance_ratio_integral: W + B*lambda must be positive");
    }
    const double a = 0.5 * half_exponent + 1.0;  // integrand is w^(a-1)
    const double m = 0.5 * (n_eff - 1);
    const double log_lambda = std::log(lambda);

    const double ratio = between * lambda / within;  // +inf when W == 0
    if (within == 0.0 || !std::isfinite(ratio)) {
        // B^-m w^(a-1-m): integrable at 0 only when a > m.
        if (a > m) {
            return -m * std::log(between) + (a - m) * log_lambda - std::log(a - m);
        }
        return kInf;
    }

    // w = lambda * y^2 turns the integral into
    //   lambda^a W^-m int_0^1 2 y^(e+1) (1 + R y^2)^-m dy,  R = B lambda / W,
    // which is smooth on [0, 1]; its poles sit at y = +-i/sqrt(R). Panels
    // [0, s], [s, 2s], [2s, 4s], ... with s = 1/sqrt(R) keep every panel a
    // fixed relative distance from the poles.
    const GaussLegendreRule& rule = gauss_legendre(nodes);
    const int power = half_exponent + 1;
    const int twice_m = n_eff - 1;
    const double step = 1.0 / std::sqrt(ratio);
    std::vector<std::pair<double, double>> panels;
    if (step >= 0.5) {
        panels.emplace_back(0.0, 1.0);
    } else {
        for (double lo = 0.0, hi = step; lo < 1.0; lo = hi, hi *= 2.0) {
            panels.emplace_back(lo, std::min(hi, 1.0));
        }
    }

    // Direct evaluation while y^(e+1) and (1 + R)^m stay far from the
    // double range limits; log space otherwise.
    const double smallest_node = 0.5 * panels.front().second * (1.0 + rule.nodes.front());
    const bool linear_safe = m * std::log1p(ratio) < 600.0 && -power * std::log(smallest_node) < 600.0;
    if (linear_safe) {
        double total = 0.0;
        for (const auto& [lo, hi] : panels) {
            const double half = 0.5 * (hi - lo);
            const double mid = 0.5 * (hi + lo);
            double panel = 0.0;
            for (int k = 0; k < nodes; ++k) {
                const double y = mid + half * rule.nodes[k];
                const double q = 1.0 + ratio * y * y;
                double denom = integer_power(q, twice_m / 2);
                if (twice_m % 2 != 0) {
                    denom *= std::sqrt(q);
                }
                panel += rule.weights[k] * integer_power(y, power) / denom;
            }
            total += 2.0 * half * panel;
        }
        if (total > 1e-290 && std::isfinite(total)) {
            return a * log_lambda - m * std::log(within) + std::log(total);
        }
    }

    LogSum acc;
    for (const auto& [lo, hi] : panels) {
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        const double log_half = std::log(half);
        for (int k = 0; k < nodes; ++k) {
            const double y = mid + half * rule.nodes[k];
            acc.add(std::log(rule.weights[k]) + log_half + std::numbers::ln2 +
                    power * std::log(y) - m * std::log1p(ratio * y * y));
        }
    }
    return a * log_lambda - m * std::log(within) + acc.value();
}

}  // namespace bcpflood
