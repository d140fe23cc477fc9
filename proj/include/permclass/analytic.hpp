#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "permclass/class_spec.hpp"
#include "permclass/decomposition.hpp"
#include "permclass/series.hpp"

namespace permclass {

struct criticality_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Criticality { critical_generic, critical_boundary, subcritical, undetermined };

inline std::string to_string(Criticality c) {
    switch (c) {
        case Criticality::critical_generic: return "critical_generic";
        case Criticality::critical_boundary: return "critical_boundary";
        case Criticality::subcritical: return "subcritical";
        default: return "undetermined";
    }
}

/// The offspring law of the conditioned Galton-Watson model behind uniform
/// packed trees is critical iff S'(rho_S) >= 2/(1+rho_S)^2 - 1. A finite
/// listed S is a polynomial (rho_S = infinity, right side -> -1), hence
/// critical_generic. A truncated family is classified through the declared
/// rho_S when the partial sums already certify the strict inequality;
/// otherwise the data cannot decide.
inline Criticality criticality_classify(const ClassSpec& spec) {
    if (!spec.truncated()) return Criticality::critical_generic;
    if (auto rho = spec.declared_rho_s()) {
        const double rhs = 2.0 / ((1.0 + *rho) * (1.0 + *rho)) - 1.0;
        // Partial sums underestimate S'(rho_S); a strict certificate is final.
        if (spec.series_s_prime(*rho) > rhs) return Criticality::critical_generic;
    }
    return Criticality::undetermined;
}

/// The unique 0 < kappa <= rho_S with S'(kappa) = 2/(1+kappa)^2 - 1, by
/// bisection; residual below 1e-12.
inline double solve_kappa(const ClassSpec& spec) {
    const Criticality c = criticality_classify(spec);
    if (c != Criticality::critical_generic && c != Criticality::critical_boundary)
        throw criticality_error("solve_kappa: criticality of " + spec.name() +
                                " is not certified");
    auto f = [&](double k) {
        return spec.series_s_prime(k) - (2.0 / ((1.0 + k) * (1.0 + k)) - 1.0);
    };
    double lo = 0.0, hi = 1.0;
    const double cap = spec.declared_rho_s() ? *spec.declared_rho_s() : 1e9;
    while (f(hi) < 0) {
        if (hi >= cap) {
            hi = cap;
            break;
        }
        hi = std::min(hi * 2, cap);
    }
    if (f(hi) < 0) throw criticality_error("solve_kappa: no sign change up to rho_S");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0)
            lo = mid;
        else
            hi = mid;
    }
    const double kappa = 0.5 * (lo + hi);
    if (std::abs(f(kappa)) > 1e-12)
        throw criticality_error("solve_kappa: residual above tolerance");
    return kappa;
}

struct cutoff_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Offspring law of the packed-tree Galton-Watson model:
/// P(xi = 0) = a, P(xi = 1) = 0, P(xi = k) = q_k t0^{k-1}, with its simply
/// and doubly size-biased versions. The support is cut at `support_cutoff`
/// (0 = automatic) with the tail mass folded into the largest retained degree.
struct OffspringModel {
    double t0 = 0;
    double a = 0;
    double mean = 0;
    double sigma2 = 0;
    double folded_tail = 0;                // mass folded into the last degree
    std::vector<double> pmf;               // index k = 0 .. support()
    std::vector<double> size_biased;       // law of xi-hat
    std::vector<double> doubly_biased;     // law of xi-star

    int support() const { return static_cast<int>(pmf.size()) - 1; }
};

namespace detail {
inline double q_coefficient(const ClassSpec& spec, int k) {
    // q_k = 1 + sum_a s_a binom(k-1, a-1)
    double val = 1.0;
    for (const auto& [a, set] : spec.simples()) {
        if (a > k) continue;
        double binom = 1.0;
        for (int i = 0; i < a - 1; ++i) binom = binom * (k - 1 - i) / (i + 1);
        val += static_cast<double>(set.size()) * binom;
    }
    return val;
}
}  // namespace detail

inline OffspringModel offspring_model(const ClassSpec& spec, int support_cutoff = 0) {
    const double kappa = solve_kappa(spec);
    OffspringModel m;
    m.t0 = kappa / (1.0 + kappa);
    m.sigma2 = kappa * std::pow(1.0 + kappa, 3) * spec.series_s_second(kappa) + 4.0 * kappa;

    constexpr int hard_max = 4096;
    constexpr double auto_tail = 1e-13;
    std::vector<double> terms{0.0, 0.0};  // terms[k] = q_k t0^{k-1}
    double tpow = m.t0;
    double total = 0;
    int k = 2;
    for (; k <= hard_max; ++k) {
        const double term = detail::q_coefficient(spec, k) * tpow;
        terms.push_back(term);
        total += term;
        tpow *= m.t0;
        const bool enough = support_cutoff > 0 ? k >= support_cutoff
                                               : (term < auto_tail * total && k >= 8);
        if (enough) break;
    }
    if (k > hard_max) throw cutoff_error("offspring_model: support cutoff too large");

    // Remaining tail, bounded by a geometric comparison on the last term.
    const double ratio = terms.back() > 0 && terms[terms.size() - 2] > 0
                             ? terms.back() / terms[terms.size() - 2]
                             : m.t0;
    const double tail = ratio < 1 ? terms.back() * ratio / (1 - ratio) : 1.0;
    if (support_cutoff > 0 && tail > 1e-9)
        throw cutoff_error("offspring_model: residual tail mass above tolerance, "
                           "needs a larger cutoff");

    m.pmf = terms;
    m.pmf.back() += tail;  // fold the tail into the largest retained degree
    m.folded_tail = tail;
    m.a = 1.0 - (total + tail);
    m.pmf[0] = m.a;

    m.mean = 0;
    double sum = 0;
    for (std::size_t i = 0; i < m.pmf.size(); ++i) {
        m.mean += static_cast<double>(i) * m.pmf[i];
        sum += m.pmf[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw cutoff_error("offspring_model: pmf does not sum to 1");

    m.size_biased.assign(m.pmf.size(), 0.0);
    m.doubly_biased.assign(m.pmf.size(), 0.0);
    double hat_sum = 0, star_sum = 0;
    for (std::size_t i = 2; i < m.pmf.size(); ++i) {
        m.size_biased[i] = static_cast<double>(i) * m.pmf[i];
        m.doubly_biased[i] = static_cast<double>(i) * (static_cast<double>(i) - 1) * m.pmf[i];
        hat_sum += m.size_biased[i];
        star_sum += m.doubly_biased[i];
    }
    for (std::size_t i = 2; i < m.pmf.size(); ++i) {
        m.size_biased[i] /= hat_sum;
        m.doubly_biased[i] /= star_sum;
    }
    return m;
}

/// Parameter of the biased Brownian separable permuton:
/// p = (2/sigma^2) (kappa (1+kappa)^3 Occ_12(kappa) + kappa).
inline double limit_parameter_p(const ClassSpec& spec) {
    const double kappa = solve_kappa(spec);
    const double sigma2 =
        kappa * std::pow(1.0 + kappa, 3) * spec.series_s_second(kappa) + 4.0 * kappa;
    return 2.0 * (kappa * std::pow(1.0 + kappa, 3) * spec.series_occ12(kappa) + kappa) / sigma2;
}

struct LimitParameters {
    double kappa = 0;
    double t0 = 0;
    double a = 0;
    double sigma2 = 0;
    double p = 0;
    Criticality criticality = Criticality::undetermined;
};

inline LimitParameters limit_parameters(const ClassSpec& spec) {
    LimitParameters lp;
    lp.criticality = criticality_classify(spec);
    if (lp.criticality != Criticality::critical_generic &&
        lp.criticality != Criticality::critical_boundary)
        return lp;
    lp.kappa = solve_kappa(spec);
    lp.t0 = lp.kappa / (1.0 + lp.kappa);
    OffspringModel m = offspring_model(spec);
    lp.a = m.a;
    lp.sigma2 = m.sigma2;
    lp.p = limit_parameter_p(spec);
    return lp;
}

/// Exact finite marginal rho_k of the biased Brownian separable permuton:
/// the pattern law of a uniform binary plane tree with k leaves whose signs
/// are independent, plus with probability p. Enumerates all shapes and sign
/// assignments (k <= 6).
inline std::map<Permutation, double> brownian_marginal(int k, double p) {
    if (k < 1 || k > 6) throw invalid_input("brownian_marginal: k must be in 1..6");
    // dist[m] maps a permutation to its total weight over (shape, signs) of
    // binary trees with m leaves; total mass = Catalan(m-1).
    std::vector<std::map<Permutation, double>> dist(k + 1);
    dist[1][Permutation::identity(1)] = 1.0;
    for (int m = 2; m <= k; ++m)
        for (int j = 1; j <= m - 1; ++j)
            for (const auto& [left, wl] : dist[j])
                for (const auto& [right, wr] : dist[m - j]) {
                    std::vector<Permutation> parts{left, right};
                    dist[m][substitute(Permutation::identity(2), parts)] += wl * wr * p;
                    dist[m][substitute(Permutation::decreasing(2), parts)] +=
                        wl * wr * (1.0 - p);
                }
    double catalan = 1.0;
    for (int i = 2; i < k; ++i) catalan = catalan * (2 * (2 * i - 1)) / (i + 1);
    std::map<Permutation, double> out;
    for (const auto& [perm, w] : dist[k]) out[perm] = w / catalan;
    return out;
}

}  // namespace permclass
