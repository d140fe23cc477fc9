#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace permclass {

struct Summary {
    double mean = 0;
    double sd = 0;
    double se = 0;
    std::size_t count = 0;
};

inline Summary summarize(const std::vector<double>& xs) {
    Summary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    double sum = 0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    if (xs.size() > 1) s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(xs.size()));
    return s;
}

// ---------------------------------------------------------------------------
// Regularized incomplete gamma (series + continued fraction)
// ---------------------------------------------------------------------------

namespace detail {
inline double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}
}  // namespace detail

/// P(a, x): regularized lower incomplete gamma.
inline double gamma_p(double a, double x) {
    if (x < 0 || a <= 0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0) return 0;
    if (x < a + 1) return detail::gamma_p_series(a, x);
    return 1 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) { return 1 - gamma_p(a, x); }

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
inline double chi_square_pvalue(double stat, double dof) {
    if (dof <= 0) return 1;
    return gamma_q(dof / 2, stat / 2);
}

struct ChiSquareResult {
    double statistic = 0;
    int dof = 0;
    double pvalue = 1;
};

/// Goodness of fit against expected counts (same total as observed).
inline ChiSquareResult chi_square_test(const std::vector<double>& observed,
                                       const std::vector<double>& expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw std::invalid_argument("chi_square_test: size mismatch");
    ChiSquareResult r;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] <= 0) throw std::invalid_argument("chi_square_test: zero expected count");
        const double d = observed[i] - expected[i];
        r.statistic += d * d / expected[i];
    }
    r.dof = static_cast<int>(observed.size()) - 1;
    r.pvalue = chi_square_pvalue(r.statistic, r.dof);
    return r;
}

/// Two-sample chi-square over shared categories.
inline ChiSquareResult two_sample_chi_square(const std::vector<double>& a,
                                             const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("two_sample_chi_square: size mismatch");
    double na = 0, nb = 0;
    for (double x : a) na += x;
    for (double x : b) nb += x;
    const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
    ChiSquareResult r;
    int cats = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double tot = a[i] + b[i];
        if (tot <= 0) continue;
        ++cats;
        const double d = ka * a[i] - kb * b[i];
        r.statistic += d * d / tot;
    }
    r.dof = cats - 1;
    r.pvalue = chi_square_pvalue(r.statistic, r.dof);
    return r;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

struct KsResult {
    double statistic = 0;
    double pvalue = 1;
};

/// One-sample KS against a CDF; asymptotic Kolmogorov tail for the p-value.
inline KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_test: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    KsResult r;
    r.statistic = d;
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double sum = 0;
    for (int j = 1; j <= 100; ++j)
        sum += 2 * std::pow(-1.0, j - 1) * std::exp(-2.0 * j * j * lambda * lambda);
    r.pvalue = std::clamp(sum, 0.0, 1.0);
    return r;
}

/// Numerically integrated CDF of an unnormalized density on [0, x_max].
class NumericCdf {
public:
    NumericCdf(const std::function<double(double)>& density, double x_max, int grid = 8192)
        : x_max_(x_max), table_(grid + 1, 0.0) {
        const double dx = x_max / grid;
        double prev = density(0.0);
        for (int i = 1; i <= grid; ++i) {
            const double f = density(i * dx);
            table_[i] = table_[i - 1] + 0.5 * (prev + f) * dx;
            prev = f;
        }
        for (double& v : table_) v /= table_.back();
    }

    double operator()(double x) const {
        if (x <= 0) return 0;
        if (x >= x_max_) return 1;
        const double pos = x / x_max_ * static_cast<double>(table_.size() - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return table_[i] * (1 - frac) + table_[std::min(i + 1, table_.size() - 1)] * frac;
    }

private:
    double x_max_;
    std::vector<double> table_;
};

/// Total variation distance between two finite distributions on {0..m-1}.
inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    double tv = 0;
    for (std::size_t i = 0; i < std::max(p.size(), q.size()); ++i) {
        const double a = i < p.size() ? p[i] : 0;
        const double b = i < q.size() ? q[i] : 0;
        tv += std::abs(a - b);
    }
    return tv / 2;
}

}  // namespace permclass
