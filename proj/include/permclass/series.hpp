#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "permclass/class_spec.hpp"

namespace permclass {

using BigInt = boost::multiprecision::cpp_int;

struct resource_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double big_log2(const BigInt& x) {
    if (x == 0) return -std::numeric_limits<double>::infinity();
    const unsigned bits = boost::multiprecision::msb(x);
    if (bits <= 52) return std::log2(x.convert_to<double>());
    const BigInt top = x >> (bits - 52);
    return std::log2(top.convert_to<double>()) + static_cast<double>(bits - 52);
}

inline double big_to_double(const BigInt& x) {
    const double l = big_log2(x);
    if (l > 1020) return std::numeric_limits<double>::infinity();
    return x.convert_to<double>();
}

/// Exact coefficient tables for the class series: q_k (decoration counts),
/// p_n (packed trees with n leaves = +-indecomposable members) and c_n
/// (members of size n), with parallel double and log2 mirrors.
///
/// The fixed point P = z + Q(P) is solved degree by degree through
/// B = P/(1-P):  P = z + P*B + sum_a s_a B^a,  B = P + B*P,  C = P + P*C.
class SeriesTable {
public:
    SeriesTable(const ClassSpec& spec, int order) : order_(order) {
        if (order < 1) throw invalid_input("series order must be >= 1");
        if (spec.truncated() && order > spec.truncation())
            throw resource_error(
                "counting past the truncation cutoff needs more simple permutations");
        if (order > 100000) throw resource_error("series order too large");

        for (const auto& [a, set] : spec.simples()) {
            if (a <= order) supp_sizes_.push_back(a);
            s_counts_[a] = set.size();
        }
        q_.assign(order + 1, 0);
        binomial_column(spec);
        compute();
    }

    /// Table with given p coefficients only (radius-estimation tests).
    static SeriesTable from_p_coefficients(std::vector<BigInt> p) {
        return SeriesTable(std::move(p));
    }

    int order() const { return order_; }
    const BigInt& q(int k) const { return q_.at(k); }
    const BigInt& p(int n) const { return p_.at(n); }
    const BigInt& c(int n) const { return c_.at(n); }
    double q_float(int k) const { return qf_.at(k); }
    double p_float(int n) const { return pf_.at(n); }
    double c_float(int n) const { return cf_.at(n); }
    double p_log2(int n) const { return plog_.at(n); }
    double c_log2(int n) const { return clog_.at(n); }

private:
    explicit SeriesTable(std::vector<BigInt> p)
        : order_(static_cast<int>(p.size()) - 1), p_(std::move(p)) {
        q_.assign(order_ + 1, 0);
        c_.assign(order_ + 1, 0);
        finalize();
    }

    void binomial_column(const ClassSpec& spec) {
        // q_k = 1 + sum_a s_a * binom(k-1, a-1) for k >= 2.
        std::vector<std::pair<int, std::uint64_t>> counts;
        for (const auto& [a, set] : spec.simples()) counts.emplace_back(a, set.size());
        for (int k = 2; k <= order_; ++k) {
            BigInt val = 1;
            for (const auto& [a, s_a] : counts) {
                if (a > k) continue;
                BigInt binom = 1;
                for (int i = 0; i < a - 1; ++i) {
                    binom *= (k - 1 - i);
                    binom /= (i + 1);
                }
                val += BigInt(s_a) * binom;
            }
            q_[k] = val;
        }
    }

    void compute() {
        const int N = order_;
        const std::vector<int>& supp = supp_sizes_;

        p_.assign(N + 1, 0);
        c_.assign(N + 1, 0);
        std::vector<BigInt> b(N + 1, 0);
        const int amax = supp.empty() ? 0 : supp.back();
        std::vector<std::vector<BigInt>> bpow;  // bpow[a] = coefficients of B^a
        bpow.resize(amax + 1);
        for (int a = 2; a <= amax; ++a) bpow[a].assign(N + 1, 0);

        p_[1] = 1;
        b[1] = 1;
        if (N >= 1) c_[1] = 1;
        for (int n = 2; n <= N; ++n) {
            for (int a = 2; a <= amax; ++a) {
                const auto& lower = (a == 2) ? b : bpow[a - 1];
                BigInt acc = 0;
                for (int j = 1; j <= n - 1; ++j) acc += b[j] * lower[n - j];
                bpow[a][n] = acc;
            }
            BigInt pb = 0;  // [z^n] P * B = P^2/(1-P)
            for (int j = 1; j <= n - 1; ++j) pb += p_[j] * b[n - j];
            BigInt pn = pb;
            for (int a : supp) pn += BigInt(s_counts_[a]) * bpow[a][n];
            p_[n] = pn;
            BigInt bn = pn;
            for (int j = 1; j <= n - 1; ++j) bn += b[j] * p_[n - j];
            b[n] = bn;
            BigInt cn = pn;
            for (int j = 1; j <= n - 1; ++j) cn += p_[j] * c_[n - j];
            c_[n] = cn;
        }
        finalize();
    }

    void finalize() {
        auto mirror = [](const std::vector<BigInt>& src, std::vector<double>& flt,
                         std::vector<double>& lg) {
            flt.resize(src.size());
            lg.resize(src.size());
            for (std::size_t i = 0; i < src.size(); ++i) {
                flt[i] = big_to_double(src[i]);
                lg[i] = big_log2(src[i]);
            }
        };
        mirror(q_, qf_, qlog_);
        mirror(p_, pf_, plog_);
        mirror(c_, cf_, clog_);
    }

    int order_;
    std::vector<BigInt> q_, p_, c_;
    std::vector<double> qf_, pf_, cf_;
    std::vector<double> qlog_, plog_, clog_;

    // Filled before compute() by the public constructor.
    std::vector<int> supp_sizes_;
    std::map<int, std::uint64_t> s_counts_;
};

inline SeriesTable compute_counting_series(const ClassSpec& spec, int order) {
    return SeriesTable(spec, order);
}

struct RadiusEstimate {
    double rho = 0;           // Richardson-refined ratio estimate of rho_P
    double raw_ratio = 0;     // plain last ratio p_N-1 / p_N
    double spread = 0;        // |last two refined values|
    double p_at_rho = 0;      // series value P(rho) with power-law tail correction
    bool subcritical = false; // P(rho_P) < 1, as class series must satisfy
    bool undetermined = false;
    int terms = 0;
};

/// Ratio estimate of the radius of convergence of P(z) (subexponential
/// coefficients: p_n / p_{n+1} -> rho_P with 1/n corrections, removed by one
/// Richardson step), plus the series value P(rho_P) < 1.
inline RadiusEstimate estimate_radius(const SeriesTable& series) {
    const int N = series.order();
    if (N < 8) throw invalid_input("estimate_radius: need order >= 8");
    auto ratio = [&](int n) { return std::exp2(series.p_log2(n) - series.p_log2(n + 1)); };
    auto refined = [&](int n) {
        return static_cast<double>(n) * ratio(n) - static_cast<double>(n - 1) * ratio(n - 1);
    };
    RadiusEstimate est;
    est.terms = N;
    est.raw_ratio = ratio(N - 1);
    est.rho = refined(N - 1);
    est.spread = std::abs(refined(N - 1) - refined(N - 2));

    // Ratios of these positive series settle monotonically; wild swings in
    // the refined sequence signal that N is too small to trust the estimate.
    double prev = refined(N - 4);
    for (int n = N - 3; n <= N - 1; ++n) {
        double cur = refined(n);
        if (std::abs(cur - prev) > 0.05 * std::abs(est.rho)) est.undetermined = true;
        prev = cur;
    }

    const double log2rho = std::log2(est.rho);
    double sum = 0;
    for (int n = 1; n <= N; ++n) sum += std::exp2(series.p_log2(n) + n * log2rho);
    // p_n rho^n ~ const * n^{-3/2}: add the tail of the power law, with the
    // constant read off the last few terms.
    double cst = 0;
    for (int n = N - 2; n <= N; ++n)
        cst += std::exp2(series.p_log2(n) + n * log2rho) * std::pow(n, 1.5) / 3.0;
    double tail = 0;
    for (int n = N + 1; n <= 200000; ++n) tail += std::pow(n, -1.5);
    tail += 2.0 / std::sqrt(200000.0);
    est.p_at_rho = sum + cst * tail;
    est.subcritical = est.p_at_rho < 1.0;
    return est;
}

/// Scaled-double evaluation of the same recurrences, for orders where exact
/// integers are too slow. Stores natural logs of p_n and c_n.
class LogSeries {
public:
    LogSeries(const ClassSpec& spec, int order) : order_(order) {
        if (spec.truncated() && order > spec.truncation())
            throw resource_error(
                "counting past the truncation cutoff needs more simple permutations");
        // Pilot run for a scale near rho_P keeps the scaled coefficients
        // bounded (they behave like n^{-3/2}).
        const int pilot = std::min(order, 48);
        SeriesTable small(spec, std::max(pilot, 8));
        double w = std::exp2(small.p_log2(small.order() - 1) - small.p_log2(small.order()));

        std::vector<std::pair<int, std::uint64_t>> counts;
        for (const auto& [a, set] : spec.simples()) counts.emplace_back(a, set.size());
        const int amax = counts.empty() ? 0 : counts.back().first;

        const int N = order;
        std::vector<double> p(N + 1, 0), b(N + 1, 0), c(N + 1, 0);
        std::vector<std::vector<double>> bpow(amax + 1);
        for (int a = 2; a <= amax; ++a) bpow[a].assign(N + 1, 0.0);
        p[1] = b[1] = c[1] = w;
        for (int n = 2; n <= N; ++n) {
            for (int a = 2; a <= amax; ++a) {
                const auto& lower = (a == 2) ? b : bpow[a - 1];
                double acc = 0;
                for (int j = 1; j <= n - 1; ++j) acc += b[j] * lower[n - j];
                bpow[a][n] = acc;
            }
            double pn = 0;
            for (int j = 1; j <= n - 1; ++j) pn += p[j] * b[n - j];
            for (const auto& [a, s_a] : counts)
                if (a <= amax) pn += static_cast<double>(s_a) * bpow[a][n];
            p[n] = pn;
            double bn = pn;
            for (int j = 1; j <= n - 1; ++j) bn += b[j] * p[n - j];
            b[n] = bn;
            double cn = pn;
            for (int j = 1; j <= n - 1; ++j) cn += p[j] * c[n - j];
            c[n] = cn;
        }
        const double logw = std::log(w);
        log_p_.assign(N + 1, -std::numeric_limits<double>::infinity());
        log_c_.assign(N + 1, -std::numeric_limits<double>::infinity());
        for (int n = 1; n <= N; ++n) {
            log_p_[n] = std::log(p[n]) - n * logw;
            log_c_[n] = std::log(c[n]) - n * logw;
        }
    }

    int order() const { return order_; }
    double log_p(int n) const { return log_p_.at(n); }
    double log_c(int n) const { return log_c_.at(n); }

private:
    int order_;
    std::vector<double> log_p_, log_c_;
};

}  // namespace permclass
