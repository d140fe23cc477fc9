#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "permclass/analytic.hpp"
#include "permclass/decomposition.hpp"
#include "permclass/rng.hpp"
#include "permclass/series.hpp"

namespace permclass {

struct retry_limit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SamplerConfig {
    enum class Method { exact, gw_rejection };

    std::uint64_t seed = 0;
    Method method = Method::exact;
    long long max_attempts = 4'000'000;   // rejection retries before giving up
    long long vertex_cap_factor = 64;     // abort growth past factor * n vertices
    int rejection_threshold = 48;         // leaf counts below: plain rejection
    int exact_order = 64;                 // big-integer table order for the exact method
    long long fringe_vertex_cap = 200'000;  // per-branch budget in limit objects
};

inline SamplerConfig::Method parse_method(const std::string& s) {
    if (s == "exact") return SamplerConfig::Method::exact;
    if (s == "gw" || s == "gw_rejection") return SamplerConfig::Method::gw_rejection;
    throw invalid_input("unknown sampling method '" + s + "'");
}

// ---------------------------------------------------------------------------
// Discrete draws
// ---------------------------------------------------------------------------

/// Cumulative-table sampler over {0, ..., K}.
class DiscreteSampler {
public:
    DiscreteSampler() = default;
    explicit DiscreteSampler(const std::vector<double>& pmf) : cdf_(pmf) {
        double acc = 0;
        for (double& x : cdf_) {
            acc += x;
            x = acc;
        }
        if (!cdf_.empty()) cdf_.back() = std::max(cdf_.back(), 1.0);
    }

    int operator()(Rng& rng) const {
        const double u = rng.uniform_real();
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<int>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

inline BigInt uniform_bigint(const BigInt& bound, Rng& rng) {
    if (bound <= 1) return 0;
    const unsigned bits = boost::multiprecision::msb(bound) + 1;
    const unsigned words = (bits + 63) / 64;
    while (true) {
        BigInt x = 0;
        for (unsigned w = 0; w < words; ++w) x = (x << 64) | rng.next_u64();
        x >>= words * 64 - bits;
        if (x < bound) return x;
    }
}

// ---------------------------------------------------------------------------
// Uniform decorations (eq. for the decoration law: each of the q_d
// decorations of size d is equally likely)
// ---------------------------------------------------------------------------

/// Uniform decoration of size d: star with probability 1/q_d, otherwise an
/// S-gadget whose root size a has weight s_a * binom(d-1, a-1) and whose
/// composition of d into a parts is uniform.
inline Dec sample_gadget(int d, const ClassSpec& spec, Rng& rng) {
    if (d < 2) throw invalid_input("sample_gadget: size must be >= 2");
    const double q_d = detail::q_coefficient(spec, d);
    if (rng.uniform_real() * q_d < 1.0) return Dec::star();

    std::vector<double> weights;  // one entry per listed root size a <= d
    std::vector<int> sizes;
    for (const auto& [a, set] : spec.simples()) {
        if (a > d) continue;
        double binom = 1.0;
        for (int i = 0; i < a - 1; ++i) binom = binom * (d - 1 - i) / (i + 1);
        weights.push_back(static_cast<double>(set.size()) * binom);
        sizes.push_back(a);
    }
    const int a = sizes.at(rng.discrete(weights));
    auto roots = spec.simples_of_size(a);
    Gadget g;
    g.root = roots[rng.uniform_index(roots.size())];
    // Uniform composition of d into a parts: an (a-1)-subset of the d-1 gaps.
    auto bars = rng.uniform_subset(d - 1, a - 1);
    int prev = 0;
    for (std::size_t i = 0; i < bars.size(); ++i) {
        g.slots.push_back(static_cast<int>(bars[i]) + 1 - prev);
        prev = static_cast<int>(bars[i]) + 1;
    }
    g.slots.push_back(d - prev);
    return Dec::of_gadget(std::move(g));
}

/// Exactly uniform variant used by the exact sampler (integer arithmetic on
/// the decoration counts).
inline Dec sample_gadget_exact(int d, const ClassSpec& spec, const SeriesTable& series,
                               Rng& rng) {
    if (d < 2) throw invalid_input("sample_gadget_exact: size must be >= 2");
    BigInt u = uniform_bigint(series.q(d), rng);
    if (u == 0) return Dec::star();
    u -= 1;
    for (const auto& [a, set] : spec.simples()) {
        if (a > d) continue;
        BigInt binom = 1;
        for (int i = 0; i < a - 1; ++i) {
            binom *= (d - 1 - i);
            binom /= (i + 1);
        }
        const BigInt block = BigInt(set.size()) * binom;
        if (u < block) {
            auto roots = spec.simples_of_size(a);
            Gadget g;
            g.root = roots[static_cast<std::size_t>((u / binom).convert_to<std::uint64_t>())];
            auto bars = rng.uniform_subset(d - 1, a - 1);
            int prev = 0;
            for (std::size_t i = 0; i < bars.size(); ++i) {
                g.slots.push_back(static_cast<int>(bars[i]) + 1 - prev);
                prev = static_cast<int>(bars[i]) + 1;
            }
            g.slots.push_back(d - prev);
            return Dec::of_gadget(std::move(g));
        }
        u -= block;
    }
    throw std::logic_error("sample_gadget_exact: decoration index out of range");
}

// ---------------------------------------------------------------------------
// Galton-Watson growth (preorder degree sequences)
// ---------------------------------------------------------------------------

namespace detail {

/// Grow a GW preorder degree sequence. Aborts (returns false) when the number
/// of leaves exceeds max_leaves or the vertex count exceeds max_vertices.
inline bool gw_degree_sequence(const DiscreteSampler& offspring, long long max_leaves,
                               long long max_vertices, Rng& rng, std::vector<int>& out) {
    out.clear();
    long long pending = 1, leaves = 0;
    while (pending > 0) {
        const int d = offspring(rng);
        out.push_back(d);
        pending += d - 1;
        if (d == 0 && ++leaves > max_leaves) return false;
        if (static_cast<long long>(out.size()) > max_vertices) return false;
    }
    return true;
}

/// Attach the tree described by a preorder degree sequence below `parent`
/// (npos: create the root). Returns the subtree root id.
inline int build_from_preorder(PlaneTree& tree, int parent, std::span<const int> degrees) {
    std::vector<std::pair<int, int>> stack;  // vertex, remaining children
    int root = -1;
    for (int d : degrees) {
        int v;
        if (stack.empty()) {
            v = parent == PlaneTree::npos ? tree.add_root() : tree.add_child(parent);
            root = v;
        } else {
            v = tree.add_child(stack.back().first);
            if (--stack.back().second == 0) stack.pop_back();
        }
        if (d > 0) stack.emplace_back(v, d);
    }
    if (!stack.empty()) throw std::logic_error("build_from_preorder: truncated sequence");
    return root;
}

inline long long count_zeros(std::span<const int> degrees) {
    long long z = 0;
    for (int d : degrees) z += d == 0;
    return z;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Leaf-conditioned tree shapes: rejection and the cycle-lemma route
// ---------------------------------------------------------------------------

/// Exact sampler of GW tree shapes conditioned on their leaf count, via the
/// degree-multiset method: draw the internal-vertex count m, then the m
/// internal outdegrees conditioned on summing to n+m-1, interleave with the
/// n zeros uniformly, and rotate to the unique valid preorder sequence
/// (cycle lemma). One convolution table serves every leaf count up to n_max.
class CycleLemmaSampler {
public:
    CycleLemmaSampler(const OffspringModel& model, int n_max) : n_max_(n_max) {
        const int K = model.support();
        cond_.assign(K + 1, 0.0);
        const double scale = 1.0 - model.a;
        for (int k = 2; k <= K; ++k) cond_[k] = model.pmf[k] / scale;
        log_a_ = std::log(model.a);
        log_not_a_ = std::log(scale);

        double mean_cond = 0;
        for (int k = 2; k <= K; ++k) mean_cond += k * cond_[k];
        m_max_ = static_cast<int>((1.0 - model.a) / model.a * n_max + 14 * std::sqrt(n_max) + 64);
        s_max_ = n_max + m_max_ - 1;
        if (static_cast<long long>(m_max_ + 1) * (s_max_ + 1) > 400'000'000LL)
            throw resource_error("cycle-lemma table too large for this leaf count");

        // w_[r][s] = P(xi'_1 + ... + xi'_r = s)
        w_.assign(m_max_ + 1, std::vector<double>(s_max_ + 1, 0.0));
        w_[0][0] = 1.0;
        for (int r = 1; r <= m_max_; ++r)
            for (int s = 2 * r; s <= std::min<long long>(s_max_, static_cast<long long>(r) * K);
                 ++s) {
                double acc = 0;
                for (int k = 2; k <= std::min(K, s); ++k)
                    if (w_[r - 1][s - k] > 0) acc += cond_[k] * w_[r - 1][s - k];
                w_[r][s] = acc;
            }
    }

    int max_leaves() const { return n_max_; }

    /// Preorder degree sequence of a uniform-shape conditioned tree with
    /// exactly n leaves (n <= n_max).
    std::vector<int> sample_degrees(int n, Rng& rng) const {
        if (n < 1 || n > n_max_) throw invalid_input("cycle-lemma sampler: bad leaf count");
        if (n == 1) return {0};

        // Internal vertex count, from its exact conditional law.
        std::vector<double> logw;
        int m_lo = -1;
        for (int m = 1; m <= m_max_; ++m) {
            const long long s = n + m - 1;
            if (s > s_max_ || w_[m][s] <= 0) {
                if (m_lo < 0) continue;
                break;
            }
            if (m_lo < 0) m_lo = m;
            const double lw = std::lgamma(n + m + 1.0) - std::lgamma(n + 1.0) -
                              std::lgamma(m + 1.0) + n * log_a_ + m * log_not_a_ +
                              std::log(w_[m][s]) - std::log(static_cast<double>(n + m));
            logw.push_back(lw);
        }
        if (m_lo < 0) throw std::logic_error("cycle-lemma sampler: empty m-range");
        double peak = logw[0];
        for (double lw : logw) peak = std::max(peak, lw);
        std::vector<double> weights(logw.size());
        for (std::size_t i = 0; i < logw.size(); ++i) weights[i] = std::exp(logw[i] - peak);
        const int m = m_lo + static_cast<int>(rng.discrete(weights));

        // Internal degrees conditioned on their sum.
        const int K = static_cast<int>(cond_.size()) - 1;
        std::vector<int> degrees(n + m, 0);
        int srem = n + m - 1;
        for (int i = 0; i < m; ++i) {
            const int r = m - i - 1;  // draws left after this one
            double denom = w_[r + 1][srem];
            double u = rng.uniform_real() * denom;
            int chosen = -1;
            for (int k = 2; k <= std::min(K, srem); ++k) {
                const double wk = cond_[k] * w_[r][srem - k];
                u -= wk;
                if (u < 0) {
                    chosen = k;
                    break;
                }
            }
            if (chosen < 0) {
                for (int k = std::min(K, srem); k >= 2; --k)
                    if (cond_[k] > 0 && w_[r][srem - k] > 0) {
                        chosen = k;
                        break;
                    }
            }
            if (chosen < 0) throw std::logic_error("cycle-lemma sampler: no feasible degree");
            degrees[i] = chosen;
            srem -= chosen;
        }
        if (srem != 0) throw std::logic_error("cycle-lemma sampler: degree sum mismatch");

        // Uniform interleaving with the leaves, then the unique valid rotation.
        const int total = n + m;
        for (int i = total - 1; i > 0; --i)
            std::swap(degrees[i], degrees[rng.uniform_index(i + 1)]);
        long long run = 0, best = 1;
        int argmin = -1;
        for (int i = 0; i < total; ++i) {
            run += degrees[i] - 1;
            if (run < best) {
                best = run;
                argmin = i;
            }
        }
        std::vector<int> rotated(total);
        for (int i = 0; i < total; ++i) rotated[i] = degrees[(argmin + 1 + i) % total];
        return rotated;
    }

private:
    int n_max_, m_max_;
    long long s_max_;
    double log_a_, log_not_a_;
    std::vector<double> cond_;
    std::vector<std::vector<double>> w_;
};

/// Uniform packed trees with a prescribed number of leaves. Shapes come from
/// the conditioned GW tree (rejection with early abort for small n, cycle
/// lemma above the threshold); decorations are independent and uniform per
/// vertex. Reusable across draws; the convolution table is built lazily.
class PackedTreeSampler {
public:
    PackedTreeSampler(const ClassSpec& spec, const OffspringModel& model, SamplerConfig cfg = {})
        : spec_(spec), model_(model), cfg_(cfg), offspring_(model.pmf) {}

    /// Builds the cycle-lemma table for leaf counts up to n. Call once before
    /// sharing the sampler across threads; sampling itself is const.
    void prewarm(int n) {
        if (n > cfg_.rejection_threshold && (!cycle_ || cycle_->max_leaves() < n))
            cycle_ = std::make_unique<CycleLemmaSampler>(model_, n);
    }

    PackedTree sample(int n, Rng& rng) const {
        PackedTree p;
        auto degrees = sample_shape(n, rng);
        detail::build_from_preorder(p.tree, PlaneTree::npos, degrees);
        p.dec.resize(p.tree.size());
        decorate(p, rng);
        return p;
    }

    /// Shape only (preorder degrees), exposed for shape-level statistics.
    std::vector<int> sample_shape(int n, Rng& rng) const {
        if (n < 1) throw invalid_input("sample_shape: need n >= 1");
        if (n == 1) return {0};
        if (n <= cfg_.rejection_threshold) {
            std::vector<int> degrees;
            const long long cap = cfg_.vertex_cap_factor * n;
            for (long long attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
                if (!detail::gw_degree_sequence(offspring_, n, cap, rng, degrees)) continue;
                if (detail::count_zeros(degrees) == n) return degrees;
            }
            throw retry_limit_error("rejection sampler: " + std::to_string(cfg_.max_attempts) +
                                    " attempts without hitting " + std::to_string(n) + " leaves");
        }
        if (!cycle_ || cycle_->max_leaves() < n)
            throw std::logic_error("PackedTreeSampler: prewarm(n) before sampling this size");
        return cycle_->sample_degrees(n, rng);
    }

    void decorate(PackedTree& p, Rng& rng) const {
        for (int v = 0; v < p.tree.size(); ++v)
            if (!p.tree.is_leaf(v)) p.dec[v] = sample_gadget(p.tree.outdegree(v), spec_, rng);
    }

    const OffspringModel& model() const { return model_; }

private:
    const ClassSpec& spec_;
    OffspringModel model_;
    SamplerConfig cfg_;
    DiscreteSampler offspring_;
    std::unique_ptr<CycleLemmaSampler> cycle_;
};

/// One-shot convenience form.
inline PackedTree sample_conditioned_packed_tree(const OffspringModel& model,
                                                 const ClassSpec& spec, int n,
                                                 const SamplerConfig& cfg, Rng& rng) {
    PackedTreeSampler sampler(spec, model, cfg);
    sampler.prewarm(n);
    return sampler.sample(n, rng);
}

// ---------------------------------------------------------------------------
// Exactly uniform permutations (recursive method over exact tables)
// ---------------------------------------------------------------------------

/// Uniform n-sized members of the class by the recursive method: component
/// sizes from the exact c/p tables, tree shapes from the exact power tables
/// of P, decorations from the exact decoration counts.
class ExactSampler {
public:
    ExactSampler(const ClassSpec& spec, int order)
        : spec_(spec), series_(spec, order), order_(order) {
        // pw_[k][n] = [z^n] P(z)^k
        pw_.assign(order_ + 1, {});
        pw_[1].assign(order_ + 1, 0);
        for (int n = 1; n <= order_; ++n) pw_[1][n] = series_.p(n);
        for (int k = 2; k <= order_; ++k) {
            pw_[k].assign(order_ + 1, 0);
            for (int n = k; n <= order_; ++n) {
                BigInt acc = 0;
                for (int j = 1; j <= n - k + 1; ++j) acc += series_.p(j) * pw_[k - 1][n - j];
                pw_[k][n] = acc;
            }
        }
    }

    const SeriesTable& series() const { return series_; }
    int order() const { return order_; }

    PackedTree sample_packed_tree(int n, Rng& rng) const {
        if (n < 1 || n > order_)
            throw resource_error("exact sampler: n beyond tables; use the gw method for the "
                                 "single-giant-tree regime");
        PackedTree p;
        build_tree(n, PlaneTree::npos, p, rng);
        return p;
    }

    Permutation sample_permutation(int n, Rng& rng) const {
        if (n < 1 || n > order_)
            throw resource_error("exact sampler: n beyond tables; use the gw method for the "
                                 "single-giant-tree regime");
        DecoratedForest forest;
        int rest = n;
        while (rest > 0) {
            // P(first component = j) = p_j * c_{rest-j} / c_rest, with c_0 = 1.
            BigInt u = uniform_bigint(series_.c(rest), rng);
            int j = rest;
            for (int cand = 1; cand < rest; ++cand) {
                const BigInt block = series_.p(cand) * series_.c(rest - cand);
                if (u < block) {
                    j = cand;
                    break;
                }
                u -= block;
            }
            forest.trees.push_back(sample_packed_tree(j, rng));
            rest -= j;
        }
        return forest_decode(forest);
    }

    DecoratedForest sample_forest(int n, Rng& rng) const {
        DecoratedForest forest;
        int rest = n;
        while (rest > 0) {
            BigInt u = uniform_bigint(series_.c(rest), rng);
            int j = rest;
            for (int cand = 1; cand < rest; ++cand) {
                const BigInt block = series_.p(cand) * series_.c(rest - cand);
                if (u < block) {
                    j = cand;
                    break;
                }
                u -= block;
            }
            forest.trees.push_back(sample_packed_tree(j, rng));
            rest -= j;
        }
        return forest;
    }

private:
    void build_tree(int n, int parent, PackedTree& p, Rng& rng) const {
        const int v = parent == PlaneTree::npos ? p.tree.add_root() : p.tree.add_child(parent);
        p.dec.emplace_back();
        if (n == 1) return;
        // Root degree k with probability q_k [z^n] P^k / p_n.
        BigInt u = uniform_bigint(series_.p(n), rng);
        int degree = -1;
        for (int k = 2; k <= n; ++k) {
            const BigInt block = series_.q(k) * pw_[k][n];
            if (u < block) {
                degree = k;
                break;
            }
            u -= block;
        }
        if (degree < 0) throw std::logic_error("exact sampler: degree walk overran");
        p.dec[v] = sample_gadget_exact(degree, spec_, series_, rng);
        // Child sizes: sequentially, P(size = j) = p_j [z^{rest-j}] P^{r-1} / [z^rest] P^r.
        int rest = n;
        for (int r = degree; r >= 1; --r) {
            if (r == 1) {
                build_tree(rest, v, p, rng);
                break;
            }
            BigInt w = uniform_bigint(pw_[r][rest], rng);
            int j = rest - (r - 1);
            for (int cand = 1; cand <= rest - (r - 1); ++cand) {
                const BigInt block = series_.p(cand) * pw_[r - 1][rest - cand];
                if (w < block) {
                    j = cand;
                    break;
                }
                w -= block;
            }
            build_tree(j, v, p, rng);
            rest -= j;
        }
    }

    const ClassSpec& spec_;
    SeriesTable series_;
    int order_;
    std::vector<std::vector<BigInt>> pw_;
};

// ---------------------------------------------------------------------------
// Large-n uniform permutations (log-space splits + conditioned GW trees)
// ---------------------------------------------------------------------------

/// Uniform permutations at sizes beyond the exact tables: component sizes
/// from log-space coefficient tables (double rounding only), component trees
/// from the exact-shape conditioned samplers.
class GwPermutationSampler {
public:
    GwPermutationSampler(const ClassSpec& spec, const OffspringModel& model, int n_max,
                         SamplerConfig cfg = {})
        : logs_(spec, n_max), trees_(spec, model, cfg), n_max_(n_max) {}

    /// Component trees never exceed the total size; one table serves all.
    void prewarm(int n) { trees_.prewarm(n); }

    DecoratedForest sample_forest(int n, Rng& rng) const {
        if (n < 1 || n > n_max_) throw invalid_input("gw sampler: n out of range");
        DecoratedForest forest;
        int rest = n;
        while (rest > 0) {
            int j = rest;
            if (rest > 1) {
                std::vector<double> logw(rest);
                double peak = -std::numeric_limits<double>::infinity();
                for (int cand = 1; cand <= rest; ++cand) {
                    const double lc = cand == rest ? 0.0 : logs_.log_c(rest - cand);
                    logw[cand - 1] = logs_.log_p(cand) + lc;
                    peak = std::max(peak, logw[cand - 1]);
                }
                std::vector<double> w(rest);
                for (int i = 0; i < rest; ++i) w[i] = std::exp(logw[i] - peak);
                j = 1 + static_cast<int>(rng.discrete(w));
            }
            forest.trees.push_back(trees_.sample(j, rng));
            rest -= j;
        }
        return forest;
    }

    Permutation sample_permutation(int n, Rng& rng) const {
        return forest_decode(sample_forest(n, rng));
    }

private:
    LogSeries logs_;
    PackedTreeSampler trees_;
    int n_max_;
};

/// Spec-level entry point: exact below the table order, gw above or on request.
inline Permutation sample_uniform_class_permutation(const ClassSpec& spec,
                                                    const SeriesTable& series, int n,
                                                    const SamplerConfig& cfg, Rng& rng) {
    if (cfg.method == SamplerConfig::Method::exact) {
        if (n > series.order())
            throw resource_error("exact sampler: n beyond tables; use the gw method for the "
                                 "single-giant-tree regime");
        ExactSampler sampler(spec, std::max(n, std::min(series.order(), cfg.exact_order)));
        return sampler.sample_permutation(n, rng);
    }
    OffspringModel model = offspring_model(spec);
    GwPermutationSampler sampler(spec, model, n, cfg);
    sampler.prewarm(n);
    return sampler.sample_permutation(n, rng);
}

// ---------------------------------------------------------------------------
// Limit objects
// ---------------------------------------------------------------------------

/// Finite realization of the local limit: spine u_0 (the pointed leaf) up to
/// u_h (the realization root), size-biased offspring along the spine, GW
/// branches elsewhere, uniform decorations.
struct PointedPackedTree {
    PackedTree packed;
    int pointed_leaf = -1;
    std::vector<int> spine;  // u_0, u_1, ..., u_h (vertex ids)
    long long fringe_vertex_cap = 0;
    long long branch_resamples = 0;

    int spine_depth() const { return static_cast<int>(spine.size()) - 1; }
};

namespace detail {
/// GW branch below `parent` with a vertex budget; resamples on overflow.
inline int grow_capped_branch(PlaneTree& tree, int parent, const DiscreteSampler& offspring,
                              long long cap, Rng& rng, long long& resamples) {
    std::vector<int> degrees;
    while (!gw_degree_sequence(offspring, cap, cap, rng, degrees)) ++resamples;
    return build_from_preorder(tree, parent, degrees);
}
}  // namespace detail

inline PointedPackedTree sample_limit_pointed_tree(const OffspringModel& model,
                                                   const ClassSpec& spec, int height,
                                                   const SamplerConfig& cfg, Rng& rng) {
    if (height < 1) throw invalid_input("sample_limit_pointed_tree: height must be >= 1");
    DiscreteSampler offspring(model.pmf);
    DiscreteSampler spine_offspring(model.size_biased);

    PointedPackedTree out;
    out.fringe_vertex_cap = cfg.fringe_vertex_cap;
    PlaneTree& tree = out.packed.tree;

    // Spine u_h (root) down to u_0 (pointed leaf); u_{i-1} sits at a uniform
    // position among the xi-hat children of u_i, the others carry GW branches.
    std::vector<int> spine(height + 1, -1);
    spine[height] = tree.add_root();
    for (int i = height; i >= 1; --i) {
        const int u = spine[i];
        const int d = spine_offspring(rng);
        const int pos = static_cast<int>(rng.uniform_index(d));
        for (int c = 0; c < d; ++c) {
            if (c == pos)
                spine[i - 1] = tree.add_child(u);
            else
                detail::grow_capped_branch(tree, u, offspring, cfg.fringe_vertex_cap, rng,
                                           out.branch_resamples);
        }
    }
    out.pointed_leaf = spine[0];
    out.spine = std::move(spine);
    out.packed.dec.resize(tree.size());
    for (int v = 0; v < tree.size(); ++v)
        if (!tree.is_leaf(v)) out.packed.dec[v] = sample_gadget(tree.outdegree(v), spec, rng);
    return out;
}

// ---------------------------------------------------------------------------
// Stretched-skeleton limit tree
// ---------------------------------------------------------------------------

/// Total stretch length L with density proportional to L^(2k-1) exp(-L^2/2),
/// by inverse CDF on a numerically integrated table (trapezoid grid, linear
/// interpolation of the inverse).
class StretchLengthSampler {
public:
    explicit StretchLengthSampler(int k, int grid = 8192, double x_max = 14.0)
        : x_max_(x_max), cdf_(grid + 1, 0.0) {
        const int power = 2 * k - 1;
        const double dx = x_max / grid;
        double prev = 0.0;
        for (int i = 1; i <= grid; ++i) {
            const double x = i * dx;
            const double f = std::pow(x, power) * std::exp(-0.5 * x * x);
            cdf_[i] = cdf_[i - 1] + 0.5 * (prev + f) * dx;
            prev = f;
        }
        for (double& v : cdf_) v /= cdf_.back();
    }

    double operator()(Rng& rng) const {
        const double u = rng.uniform_real();
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        const std::size_t hi = std::max<std::size_t>(1, it - cdf_.begin());
        const double dx = x_max_ / (cdf_.size() - 1);
        const double span = cdf_[hi] - cdf_[hi - 1];
        const double frac = span > 0 ? (u - cdf_[hi - 1]) / span : 0.5;
        return (static_cast<double>(hi - 1) + frac) * dx;
    }

private:
    double x_max_;
    std::vector<double> cdf_;
};

/// Realization of the limit tree with k marked vertices: a uniform proper
/// k-tree stretched into paths of length 2t+1 with labelled middle edges,
/// thickened by size-biased offspring, and grafted with GW branches.
struct LimitSkeletonTree {
    PlaneTree tree;
    std::vector<Dec> dec;            // per vertex; empty unless decorated
    std::vector<int> marks;          // the k marked vertices
    std::vector<double> labels;      // middle-edge labels in k-tree DFS edge order
    std::vector<int> label_edges;    // child-vertex id under each labelled edge
    long long branch_resamples = 0;
};

struct SkeletonTreeOptions {
    std::vector<int> omega{0};       // conditioning set for marked root degrees
    bool graft_branches = true;      // grow the GW fringe (off: bare stub children)
    bool decorate = false;           // draw uniform decorations per internal vertex
    long long fringe_vertex_cap = 200'000;
};

namespace detail {
/// Uniform plane binary tree with k leaves as a nested child-list structure:
/// returns preorder list of outdegrees (0 or 2).
inline void uniform_binary_shape(int k, Rng& rng, std::vector<int>& out) {
    if (k == 1) {
        out.push_back(0);
        return;
    }
    // P(left subtree has j leaves) = Cat_{j-1} Cat_{k-j-1} / Cat_{k-1}.
    std::vector<double> cat(k + 1, 0.0);
    cat[1] = 1.0;
    for (int m = 2; m <= k; ++m) cat[m] = cat[m - 1] * (2.0 * (2 * m - 3)) / m;
    std::vector<double> w(k - 1);
    for (int j = 1; j <= k - 1; ++j) w[j - 1] = cat[j] * cat[k - j];
    const int j = 1 + static_cast<int>(rng.discrete(w));
    out.push_back(2);
    uniform_binary_shape(j, rng, out);
    uniform_binary_shape(k - j, rng, out);
}
}  // namespace detail

inline LimitSkeletonTree sample_limit_skeleton_tree(int k, int t, const OffspringModel& model,
                                                    const ClassSpec& spec,
                                                    const SkeletonTreeOptions& opt, Rng& rng) {
    if (k < 1 || t < 0) throw invalid_input("sample_limit_skeleton_tree: need k >= 1, t >= 0");
    double omega_mass = 0;
    for (int d : opt.omega)
        if (d >= 0 && d <= model.support()) omega_mass += model.pmf[d];
    if (omega_mass <= 0)
        throw invalid_input("sample_limit_skeleton_tree: omega has zero offspring mass");

    // Step 1: uniform proper k-tree. Root outdegree 1 over a uniform binary
    // shape; leaf labels get a uniform assignment below.
    std::vector<int> binary;
    detail::uniform_binary_shape(k, rng, binary);
    std::vector<int> kt{1};
    kt.insert(kt.end(), binary.begin(), binary.end());
    std::vector<int> subtree_size(kt.size(), 0);
    for (int i = static_cast<int>(kt.size()) - 1; i >= 0; --i) {
        int sz = 1, child = i + 1;
        for (int c = 0; c < kt[i]; ++c) {
            sz += subtree_size[child];
            child += subtree_size[child];
        }
        subtree_size[i] = sz;
    }

    // Step 2: stretch vector: total length from the chi-type density, split
    // uniform on the simplex. Consumed in depth-first edge order.
    StretchLengthSampler length_law(k);
    const double total_len = length_law(rng);
    std::vector<double> split(2 * k - 1);
    double sum = 0;
    for (double& x : split) {
        x = rng.exponential();
        sum += x;
    }
    for (double& x : split) x = x / sum * total_len;

    LimitSkeletonTree out;
    PlaneTree& tree = out.tree;

    DiscreteSampler offspring(model.pmf);
    DiscreteSampler hat(model.size_biased);
    DiscreteSampler star(model.doubly_biased);
    std::vector<double> omega_pmf(model.pmf.size(), 0.0);
    for (int d : opt.omega)
        if (d >= 0 && d < static_cast<int>(omega_pmf.size()))
            omega_pmf[d] = model.pmf[d] / omega_mass;
    DiscreteSampler omega_offspring(omega_pmf);

    auto graft = [&](int parent) {
        if (opt.graft_branches)
            detail::grow_capped_branch(tree, parent, offspring, opt.fringe_vertex_cap, rng,
                                       out.branch_resamples);
        else
            tree.add_child(parent);
    };

    // Step 3 for one vertex: prescribed skeleton outdegree c (1 or 2), total
    // offspring from the size-biased laws, skeleton continuations at uniform
    // order-preserving positions, branches everywhere else (step 4).
    auto thicken = [&](int v, int c) {
        const int d = c == 1 ? hat(rng) : star(rng);
        std::vector<int> ranks;
        if (c == 1) {
            ranks.push_back(static_cast<int>(rng.uniform_index(d)));
        } else {
            int a = static_cast<int>(rng.uniform_index(d));
            int b = static_cast<int>(rng.uniform_index(d - 1));
            if (b >= a) ++b;
            ranks = {std::min(a, b), std::max(a, b)};
        }
        std::vector<int> skeleton_children;
        std::size_t next_rank = 0;
        for (int r = 0; r < d; ++r) {
            if (next_rank < ranks.size() && r == ranks[next_rank]) {
                skeleton_children.push_back(tree.add_child(v));
                ++next_rank;
            } else {
                graft(v);
            }
        }
        return skeleton_children;
    };

    int label_cursor = 0;
    // Expand the k-tree vertex kt[idx] realized at output vertex v.
    auto expand = [&](auto&& self, int v, int idx) -> void {
        const int deg = kt[idx];
        if (deg == 0) {
            // Marked vertex: root of a copy of T conditioned on degree in omega.
            out.marks.push_back(v);
            const int d = omega_offspring(rng);
            for (int c = 0; c < d; ++c) graft(v);
            return;
        }
        auto skeleton_children = thicken(v, deg);
        std::vector<int> kids;
        int child = idx + 1;
        for (int c = 0; c < deg; ++c) {
            kids.push_back(child);
            child += subtree_size[child];
        }
        for (int c = 0; c < deg; ++c) {
            // Path of 2t+1 edges; the middle edge gets the next label.
            int attach = skeleton_children[c];
            int middle_child = attach;
            for (int step = 1; step < 2 * t + 1; ++step) {
                attach = thicken(attach, 1)[0];
                if (step == t) middle_child = attach;
            }
            out.labels.push_back(split[label_cursor]);
            out.label_edges.push_back(middle_child);
            ++label_cursor;
            self(self, attach, kids[c]);
        }
    };
    expand(expand, tree.add_root(), 0);

    // Uniform labelling of the marks (out.marks[i] = vertex with label i+1).
    std::vector<int> in_order = out.marks;
    for (std::size_t i = in_order.size(); i > 1; --i)
        std::swap(in_order[i - 1], in_order[rng.uniform_index(i)]);
    out.marks = in_order;

    if (opt.decorate) {
        out.dec.resize(tree.size());
        for (int v = 0; v < tree.size(); ++v)
            if (!tree.is_leaf(v)) out.dec[v] = sample_gadget(tree.outdegree(v), spec, rng);
    }
    return out;
}

}  // namespace permclass
