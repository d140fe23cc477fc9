#pragma once

// Independent brute-force oracles for the test suite. Everything here is
// deliberately written from first principles (no calls into the library's
// decomposition or counting paths) so that tests compare two routes.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "permclass/permutation.hpp"

namespace oracle {

using permclass::Permutation;

inline std::vector<Permutation> all_permutations(int n) {
    std::vector<int> vals(n);
    for (int i = 0; i < n; ++i) vals[i] = i + 1;
    std::vector<Permutation> out;
    do {
        out.emplace_back(vals);
    } while (std::next_permutation(vals.begin(), vals.end()));
    return out;
}

/// Relative-order comparison without calling the library's standardize.
inline std::vector<int> ranks_of(const std::vector<int>& xs) {
    std::vector<int> r(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        int rank = 1;
        for (std::size_t j = 0; j < xs.size(); ++j)
            if (xs[j] < xs[i]) ++rank;
        r[i] = rank;
    }
    return r;
}

inline bool matches_pattern(const Permutation& nu, const std::vector<int>& positions,
                            const Permutation& pi) {
    for (std::size_t a = 0; a < positions.size(); ++a)
        for (std::size_t b = a + 1; b < positions.size(); ++b)
            if ((nu(positions[a]) < nu(positions[b])) != (pi(a + 1) < pi(b + 1))) return false;
    return true;
}

inline std::uint64_t count_pattern_subsets(const Permutation& nu, const Permutation& pi) {
    const int n = nu.size(), k = pi.size();
    std::uint64_t count = 0;
    std::vector<int> pos;
    auto rec = [&](auto&& self, int from) -> void {
        if (static_cast<int>(pos.size()) == k) {
            count += matches_pattern(nu, pos, pi);
            return;
        }
        for (int i = from; i <= n; ++i) {
            pos.push_back(i);
            self(self, i + 1);
            pos.pop_back();
        }
    };
    rec(rec, 1);
    return count;
}

inline bool avoids(const Permutation& nu, const std::vector<Permutation>& basis) {
    for (const auto& pi : basis)
        if (pi.size() <= nu.size() && count_pattern_subsets(nu, pi) > 0) return false;
    return true;
}

/// Substitution written independently of the library.
inline Permutation inflate(const Permutation& theta, const std::vector<Permutation>& parts) {
    std::vector<std::pair<int, int>> order;  // (theta value, index)
    for (int i = 1; i <= theta.size(); ++i) order.emplace_back(theta(i), i - 1);
    std::sort(order.begin(), order.end());
    std::vector<int> offset(theta.size(), 0);
    int acc = 0;
    for (auto [val, idx] : order) {
        offset[idx] = acc;
        acc += parts[idx].size();
    }
    std::vector<int> vals;
    for (int i = 0; i < theta.size(); ++i)
        for (int v : parts[i].values()) vals.push_back(v + offset[i]);
    return Permutation(vals);
}

/// All members of the substitution closure of {1} under monotone sums and
/// inflations of the given simple permutations, up to size max_n. The counts
/// of this generator are an independent oracle for the class counting
/// sequence.
inline std::vector<std::set<Permutation>> closure_members(
    const std::vector<Permutation>& simples, int max_n) {
    std::vector<std::set<Permutation>> by_size(max_n + 1);
    by_size[1].insert(Permutation::identity(1));
    // Compositions of n into d parts, recursively inflating theta.
    auto add_inflations = [&](const Permutation& theta, int n) {
        const int d = theta.size();
        std::vector<Permutation> parts;
        auto rec = [&](auto&& self, int idx, int rest) -> void {
            if (idx == d) {
                if (rest == 0) by_size[n].insert(inflate(theta, parts));
                return;
            }
            for (int sz = 1; sz <= rest - (d - idx - 1); ++sz)
                for (const auto& part : by_size[sz]) {
                    parts.push_back(part);
                    self(self, idx + 1, rest - sz);
                    parts.pop_back();
                }
        };
        rec(rec, 0, n);
    };
    for (int n = 2; n <= max_n; ++n) {
        for (int d = 2; d <= n; ++d) {
            add_inflations(Permutation::identity(d), n);
            add_inflations(Permutation::decreasing(d), n);
        }
        for (const auto& alpha : simples)
            if (alpha.size() <= n) add_inflations(alpha, n);
    }
    return by_size;
}

/// Plus-indecomposable test from first principles: no proper prefix is a
/// value interval {1..k}.
inline bool plus_indecomposable(const Permutation& nu) {
    int max_so_far = 0;
    for (int i = 1; i < nu.size(); ++i) {
        max_so_far = std::max(max_so_far, nu(i));
        if (max_so_far == i) return false;
    }
    return true;
}

}  // namespace oracle
