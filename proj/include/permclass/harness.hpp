#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "permclass/analytic.hpp"
#include "permclass/sampler.hpp"
#include "permclass/skeleton.hpp"
#include "permclass/stats.hpp"

#include <json.hpp>

namespace permclass {

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct Estimate {
    std::string name;
    double value = 0;
    double se = 0;
    std::size_t count = 0;
};

struct Check {
    std::string name;
    double value = 0;
    double target = 0;
    double tolerance = 0;  // |value - target| <= tolerance, or threshold meaning per kind
    std::string kind;      // "band", "upper", "lower"
    bool pass = false;
};

inline Check band_check(std::string name, double value, double target, double tol) {
    return {std::move(name), value, target, tol, "band", std::abs(value - target) <= tol};
}
inline Check upper_check(std::string name, double value, double bound) {
    return {std::move(name), value, bound, 0, "upper", value <= bound};
}
inline Check lower_check(std::string name, double value, double bound) {
    return {std::move(name), value, bound, 0, "lower", value >= bound};
}

struct ExperimentReport {
    std::string experiment;
    nlohmann::json parameters = nlohmann::json::object();
    std::vector<Estimate> estimates;
    std::vector<Check> checks;

    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["experiment"] = experiment;
        j["parameters"] = parameters;
        j["pass"] = pass();
        j["estimates"] = nlohmann::json::array();
        for (const auto& e : estimates)
            j["estimates"].push_back(
                {{"name", e.name}, {"value", e.value}, {"se", e.se}, {"count", e.count}});
        j["checks"] = nlohmann::json::array();
        for (const auto& c : checks)
            j["checks"].push_back({{"name", c.name},
                                   {"value", c.value},
                                   {"target", c.target},
                                   {"tolerance", c.tolerance},
                                   {"kind", c.kind},
                                   {"pass", c.pass}});
        return j;
    }

    static void csv_header(std::ostream& out) {
        out << "experiment,name,value,se,target,pass\n";
    }

    void append_csv(std::ostream& out) const {
        for (const auto& e : estimates)
            out << experiment << ',' << e.name << ',' << e.value << ',' << e.se << ",,\n";
        for (const auto& c : checks)
            out << experiment << ',' << c.name << ',' << c.value << ",," << c.target << ','
                << (c.pass ? "true" : "false") << '\n';
    }
};

// ---------------------------------------------------------------------------
// Deterministic parallel sampling
// ---------------------------------------------------------------------------

inline int worker_count() {
    if (const char* env = std::getenv("PERMCLASS_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

/// Runs f(index) for every index, fanned out over workers. Work items must
/// only touch their own slots; sample i derives its own rng stream, so the
/// result does not depend on the worker count.
template <typename F>
void parallel_for(std::size_t count, F&& f) {
    const int workers = std::min<std::size_t>(worker_count(), count == 0 ? 1 : count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error = nullptr;
    std::mutex error_lock;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> guard(error_lock);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Pattern-density estimation
// ---------------------------------------------------------------------------

struct DensityOptions {
    int subsets_per_sample = 300;  // classical-pattern probes per permutation
};

/// Mean density of pi as a classical pattern in uniform class members:
/// exact inversion counts for |pi| = 2, index-subset probes otherwise.
inline ExperimentReport estimate_pattern_density(const ClassSpec& spec, int n, int samples,
                                                 const Permutation& pi, std::uint64_t seed,
                                                 DensityOptions opt = {}) {
    if (pi.size() > 4) throw invalid_input("estimate_pattern_density: |pi| <= 4");
    ExperimentReport report;
    report.experiment = "pattern";
    report.parameters = {{"class", spec.name()}, {"n", n},      {"samples", samples},
                         {"pattern", pi.compact()}, {"seed", seed}};

    OffspringModel model = offspring_model(spec);
    GwPermutationSampler sampler(spec, model, n);
    sampler.prewarm(n);

    Rng base(seed);
    std::vector<double> densities(samples, 0.0);
    const int k = pi.size();
    parallel_for(samples, [&](std::size_t i) {
        Rng rng = base.stream(i);
        Permutation nu = sampler.sample_permutation(n, rng);
        if (k == 2) {
            const double pairs = 0.5 * n * (n - 1.0);
            const double inv = static_cast<double>(count_inversions(nu));
            densities[i] = pi == Permutation::parse("21") ? inv / pairs : 1.0 - inv / pairs;
            return;
        }
        int hits = 0;
        for (int probe = 0; probe < opt.subsets_per_sample; ++probe) {
            auto subset = rng.uniform_subset(n, k);
            std::vector<int> idx(subset.size());
            for (std::size_t s = 0; s < subset.size(); ++s) idx[s] = static_cast<int>(subset[s]) + 1;
            hits += pattern_at(nu, idx) == pi;
        }
        densities[i] = static_cast<double>(hits) / opt.subsets_per_sample;
    });

    const Summary s = summarize(densities);
    report.estimates.push_back({"density", s.mean, s.se, static_cast<std::size_t>(samples)});
    return report;
}

// ---------------------------------------------------------------------------
// Consecutive-occurrence profiles
// ---------------------------------------------------------------------------

struct ConsecutiveProfile {
    ExperimentReport report;
    std::vector<double> densities;  // c-occ(pi, nu)/n per sample
    Summary summary;
};

inline ConsecutiveProfile consecutive_profile(const ClassSpec& spec, int n, int samples,
                                              const Permutation& pi, std::uint64_t seed) {
    ConsecutiveProfile out;
    out.report.experiment = "consecutive";
    out.report.parameters = {{"class", spec.name()}, {"n", n},      {"samples", samples},
                             {"pattern", pi.compact()}, {"seed", seed}};

    OffspringModel model = offspring_model(spec);
    GwPermutationSampler sampler(spec, model, n);
    sampler.prewarm(n);

    Rng base(seed);
    out.densities.assign(samples, 0.0);
    parallel_for(samples, [&](std::size_t i) {
        Rng rng = base.stream(i);
        Permutation nu = sampler.sample_permutation(n, rng);
        out.densities[i] =
            static_cast<double>(count_consecutive(nu, pi)) / static_cast<double>(n);
    });

    out.summary = summarize(out.densities);
    out.report.estimates.push_back(
        {"mean_density", out.summary.mean, out.summary.se, static_cast<std::size_t>(samples)});
    out.report.estimates.push_back(
        {"sd_density", out.summary.sd, 0.0, static_cast<std::size_t>(samples)});
    return out;
}

// ---------------------------------------------------------------------------
// Gamma estimation from the local limit
// ---------------------------------------------------------------------------

struct GammaEstimate {
    ExperimentReport report;
    double value = 0;
    double se = 0;
    long long deepened = 0;  // resamples due to uncertifiable realizations
};

/// Monte Carlo estimate of the limiting consecutive-pattern density: the
/// probability that the realized order on [0, |pi|-1] around the pointed
/// leaf equals pi.
inline GammaEstimate estimate_gamma(const ClassSpec& spec, const Permutation& pi,
                                    int spine_depth, int samples, std::uint64_t seed,
                                    SamplerConfig cfg = {}) {
    GammaEstimate out;
    out.report.experiment = "gamma";
    out.report.parameters = {{"class", spec.name()},
                             {"pattern", pi.compact()},
                             {"spine_depth", spine_depth},
                             {"samples", samples},
                             {"seed", seed}};

    OffspringModel model = offspring_model(spec);
    const bool separable = spec.simples().empty();
    const int w = pi.size() - 1;

    Rng base(seed);
    std::vector<double> hits(samples, 0.0);
    std::atomic<long long> deepened{0};
    parallel_for(samples, [&](std::size_t i) {
        Rng rng = base.stream(i);
        const int sign = separable && rng.bernoulli(0.5) ? -1 : 1;
        int h = spine_depth;
        for (int attempt = 0;; ++attempt) {
            PointedPackedTree pt = sample_limit_pointed_tree(model, spec, h, cfg, rng);
            try {
                RootedPermutation window = separable
                                               ? realize_signed_window(pt, sign, w)
                                               : realize_rooted_permutation(pt, w);
                std::vector<int> idx;
                for (int j = 0; j < pi.size(); ++j) idx.push_back(window.root + j);
                hits[i] = pattern_at(window.perm, idx) == pi ? 1.0 : 0.0;
                return;
            } catch (const insufficient_realization&) {
                if (attempt >= 8)
                    throw retry_limit_error("estimate_gamma: window uncertifiable after "
                                            "repeated deepening");
                ++deepened;
                h *= 2;
            }
        }
    });
    out.deepened = deepened.load();

    const Summary s = summarize(hits);
    out.value = s.mean;
    out.se = s.se;
    out.report.estimates.push_back({"gamma", s.mean, s.se, static_cast<std::size_t>(samples)});
    out.report.estimates.push_back(
        {"deepened", static_cast<double>(out.deepened), 0.0, static_cast<std::size_t>(samples)});
    return out;
}

// ---------------------------------------------------------------------------
// Skeleton-law experiment
// ---------------------------------------------------------------------------

/// Compares extracted skeletons of conditioned trees against the limit laws:
/// rescaled label sums against the chi-type density, genealogy frequencies
/// against the uniform proper k-tree law, essential-vertex height parities
/// against fair coins.
inline ExperimentReport skeleton_experiment(const ClassSpec& spec, int n, int k, int t,
                                            int samples, std::uint64_t seed) {
    if (k < 1 || k > 3) throw invalid_input("skeleton_experiment: k in 1..3");
    ExperimentReport report;
    report.experiment = "skeleton";
    report.parameters = {{"class", spec.name()}, {"n", n},       {"k", k},
                         {"t", t},               {"samples", samples}, {"seed", seed}};

    OffspringModel model = offspring_model(spec);
    SamplerConfig cfg;
    PackedTreeSampler sampler(spec, model, cfg);
    sampler.prewarm(n);
    const double c_omega = std::sqrt(model.a);  // omega = {0}: leaves
    const double sigma = std::sqrt(model.sigma2);
    const double rescale = c_omega * sigma / std::sqrt(static_cast<double>(n));

    Rng base(seed);
    std::vector<double> label_sums(samples, -1.0);  // generic samples only
    std::vector<int> genealogy(samples, -1);        // k=2: 0/1 = which mark is left
    std::vector<std::vector<int>> parities(samples);
    std::atomic<long long> nongeneric{0};

    parallel_for(samples, [&](std::size_t i) {
        Rng rng = base.stream(i);
        auto degrees = sampler.sample_shape(n, rng);
        PlaneTree tree;
        detail::build_from_preorder(tree, PlaneTree::npos, degrees);
        auto leaves = tree.leaves_in_order();
        std::vector<int> marks(k);
        for (int j = 0; j < k; ++j)
            marks[j] = leaves[rng.uniform_index(leaves.size())];
        SkeletonView view = extract_skeleton(tree, marks, t);
        if (!view.generic) {
            ++nongeneric;
            return;
        }
        label_sums[i] = rescale * view.label_sum();
        // Essential-vertex heights in the original tree (marks and CCAs).
        std::vector<int>& par = parities[i];
        for (int m : marks) par.push_back(tree.depth(m) % 2);
        if (k >= 2)
            for (int a = 0; a < k; ++a)
                for (int b = a + 1; b < k; ++b)
                    par.push_back(tree.depth(tree.common_ancestor(marks[a], marks[b])) % 2);
        if (k == 2) {
            // Genealogy: which mark sits in the left branch below the CCA.
            const int cca = tree.common_ancestor(marks[0], marks[1]);
            const int c0 = tree.child_rank(tree.child_towards(cca, marks[0]));
            const int c1 = tree.child_rank(tree.child_towards(cca, marks[1]));
            genealogy[i] = c0 < c1 ? 0 : 1;
        }
    });

    std::vector<double> sums;
    for (double v : label_sums)
        if (v >= 0) sums.push_back(v);
    report.estimates.push_back({"generic_fraction",
                                1.0 - static_cast<double>(nongeneric.load()) / samples, 0.0,
                                static_cast<std::size_t>(samples)});

    // Label-sum law: density proportional to x^{2k-1} exp(-x^2/2).
    NumericCdf cdf([k](double x) { return std::pow(x, 2 * k - 1) * std::exp(-0.5 * x * x); },
                   14.0);
    KsResult ks = ks_test(sums, [&](double x) { return cdf(x); });
    report.estimates.push_back({"label_sum_ks", ks.statistic, 0.0, sums.size()});
    report.checks.push_back(upper_check("label_sum_ks_stat", ks.statistic, 0.05));

    // Parity fairness, one check per essential slot.
    const int slots = static_cast<int>(k + (k * (k - 1)) / 2);
    for (int slot = 0; slot < slots; ++slot) {
        std::vector<double> vals;
        for (std::size_t i = 0; i < parities.size(); ++i)
            if (!parities[i].empty()) vals.push_back(parities[i][slot]);
        const Summary s = summarize(vals);
        report.estimates.push_back({"parity_" + std::to_string(slot), s.mean, s.se, vals.size()});
        report.checks.push_back(
            band_check("parity_" + std::to_string(slot), s.mean, 0.5, 3 * s.se));
    }

    if (k == 2) {
        std::vector<double> genea;
        for (int g : genealogy)
            if (g >= 0) genea.push_back(g);
        const Summary s = summarize(genea);
        report.estimates.push_back({"genealogy_left_fraction", s.mean, s.se, genea.size()});
        report.checks.push_back(band_check("genealogy_equifrequent", s.mean, 0.5, 3 * s.se));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Giant-component statistics
// ---------------------------------------------------------------------------

inline ExperimentReport giant_component_stats(const ClassSpec& spec, int n, int samples,
                                              std::uint64_t seed, int radius_order = 220) {
    ExperimentReport report;
    report.experiment = "giant";
    report.parameters = {{"class", spec.name()}, {"n", n}, {"samples", samples}, {"seed", seed}};

    SeriesTable series(spec, radius_order);
    RadiusEstimate radius = estimate_radius(series);
    const double p_rho = radius.p_at_rho;
    report.estimates.push_back({"p_at_rho", p_rho, 0.0, 1});

    OffspringModel model = offspring_model(spec);
    GwPermutationSampler sampler(spec, model, n);
    sampler.prewarm(n);

    Rng base(seed);
    std::vector<int> left(samples), right(samples), deficit(samples);
    parallel_for(samples, [&](std::size_t i) {
        Rng rng = base.stream(i);
        DecoratedForest forest = sampler.sample_forest(n, rng);
        int best = 0;
        for (std::size_t c = 1; c < forest.trees.size(); ++c)
            if (forest.trees[c].size() > forest.trees[best].size()) best = static_cast<int>(c);
        left[i] = best;
        right[i] = static_cast<int>(forest.trees.size()) - best - 1;
        deficit[i] = n - forest.trees[best].size();
    });

    auto histogram = [&](const std::vector<int>& xs, int m) {
        std::vector<double> h(m, 0.0);
        for (int x : xs)
            if (x < m) h[x] += 1.0 / xs.size();
        return h;
    };
    std::vector<double> geom(5);
    for (int g = 0; g < 5; ++g) geom[g] = std::pow(p_rho, g) * (1 - p_rho);
    const auto left_hist = histogram(left, 5);
    const auto right_hist = histogram(right, 5);
    report.checks.push_back(
        upper_check("left_tv_geometric", total_variation(left_hist, geom), 0.05));
    report.checks.push_back(
        upper_check("right_tv_geometric", total_variation(right_hist, geom), 0.05));

    std::vector<double> zeros(samples);
    for (int i = 0; i < samples; ++i) zeros[i] = left[i] == 0 ? 1.0 : 0.0;
    const Summary z = summarize(zeros);
    report.estimates.push_back({"p_left_zero", z.mean, z.se, static_cast<std::size_t>(samples)});
    report.checks.push_back(band_check("p_left_zero", z.mean, 1 - p_rho, 3 * z.se));

    // Symmetry of the two geometric marginals.
    std::vector<double> lcounts(6, 0.0), rcounts(6, 0.0);
    for (int i = 0; i < samples; ++i) {
        lcounts[std::min(left[i], 5)] += 1;
        rcounts[std::min(right[i], 5)] += 1;
    }
    const auto sym = two_sample_chi_square(lcounts, rcounts);
    report.estimates.push_back({"left_right_symmetry_p", sym.pvalue, 0.0,
                                static_cast<std::size_t>(samples)});
    report.checks.push_back(lower_check("left_right_symmetry_p", sym.pvalue, 0.001));

    std::vector<double> defs(deficit.begin(), deficit.end());
    std::sort(defs.begin(), defs.end());
    report.estimates.push_back(
        {"deficit_median", defs[defs.size() / 2], 0.0, static_cast<std::size_t>(samples)});
    return report;
}

// ---------------------------------------------------------------------------
// Internal formula checks
// ---------------------------------------------------------------------------

/// Probability, on the k=2 limit skeleton, that the common ancestor of the
/// marks is star-decorated with its nearest gadget ancestor at even positive
/// distance; target (2/sigma^2) kappa^2 (kappa + 2).
inline ExperimentReport keyres_check(const ClassSpec& spec, int t, int samples,
                                     std::uint64_t seed) {
    ExperimentReport report;
    report.experiment = "keyres";
    report.parameters = {{"class", spec.name()}, {"t", t}, {"samples", samples}, {"seed", seed}};

    OffspringModel model = offspring_model(spec);
    const double kappa = solve_kappa(spec);
    const double target = 2.0 / model.sigma2 * kappa * kappa * (kappa + 2.0);

    SkeletonTreeOptions opt;
    opt.graft_branches = false;
    opt.decorate = true;

    Rng base(seed);
    std::vector<double> hits(samples, 0.0);
    parallel_for(samples, [&](std::size_t i) {
        Rng rng = base.stream(i);
        LimitSkeletonTree sk = sample_limit_skeleton_tree(2, t, model, spec, opt, rng);
        const int cca = sk.tree.common_ancestor(sk.marks[0], sk.marks[1]);
        if (sk.dec[cca].kind != DecKind::star) return;
        int dist = 0;
        for (int u = sk.tree.parent(cca); u != PlaneTree::npos; u = sk.tree.parent(u)) {
            ++dist;
            if (sk.dec[u].kind == DecKind::gadget) {
                hits[i] = (dist % 2 == 0) ? 1.0 : 0.0;
                return;
            }
        }
    });

    const Summary s = summarize(hits);
    report.estimates.push_back({"probability", s.mean, s.se, static_cast<std::size_t>(samples)});
    report.checks.push_back(band_check("keyres1", s.mean, target, 3 * s.se));
    return report;
}

/// Exact identity for uniform compositions: the probability that two uniform
/// positions fall in the same part of a uniform composition of k into a
/// parts equals 2/(a+1) * (k-a)/(k-1). Enumerated exactly for k <= k_max.
inline bool composition_same_part_identity(int k_max) {
    for (int k = 2; k <= k_max; ++k) {
        for (int a = 1; a <= k; ++a) {
            std::vector<int> part(a, 0);
            unsigned long long same_pairs = 0, comps = 0;
            auto rec = [&](auto&& self, int idx, int rest) -> void {
                if (idx == a - 1) {
                    part[idx] = rest;
                    ++comps;
                    for (int m : part)
                        same_pairs += static_cast<unsigned long long>(m) * (m - 1) / 2;
                    return;
                }
                for (int v = 1; v <= rest - (a - 1 - idx); ++v) {
                    part[idx] = v;
                    self(self, idx + 1, rest - v);
                }
            };
            rec(rec, 0, k);
            // Cross-multiplied: same_pairs (a+1)(k-1) == 2 (k-a) comps C(k,2).
            const unsigned long long pairs = static_cast<unsigned long long>(k) * (k - 1) / 2;
            const unsigned long long lhs = same_pairs * (a + 1) * (k - 1);
            const unsigned long long rhs = 2ULL * (k - a) * comps * pairs;
            if (lhs != rhs) return false;
        }
    }
    return true;
}

}  // namespace permclass
