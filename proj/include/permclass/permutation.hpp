#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace permclass {

struct invalid_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A permutation of {1..n} in one-line notation. Immutable after construction.
class Permutation {
public:
    Permutation() : values_{1} {}

    explicit Permutation(std::vector<int> values) : values_(std::move(values)) {
        if (values_.empty()) throw invalid_input("permutation must have size >= 1");
        std::vector<bool> seen(values_.size(), false);
        for (int v : values_) {
            if (v < 1 || v > static_cast<int>(values_.size()) || seen[v - 1])
                throw invalid_input("values are not a bijection of {1..n}");
            seen[v - 1] = true;
        }
    }

    int size() const { return static_cast<int>(values_.size()); }

    /// Value at 1-based position i.
    int operator()(int i) const { return values_[i - 1]; }

    const std::vector<int>& values() const { return values_; }

    bool operator==(const Permutation&) const = default;
    auto operator<=>(const Permutation&) const = default;

    /// Space-separated one-line notation, e.g. "4 2 1 3".
    std::string str() const {
        std::string out;
        for (int i = 0; i < size(); ++i) {
            if (i) out += ' ';
            out += std::to_string(values_[i]);
        }
        return out;
    }

    /// Digit form "4213" for n <= 9, space-separated otherwise.
    std::string compact() const {
        if (size() > 9) return str();
        std::string out;
        for (int v : values_) out += static_cast<char>('0' + v);
        return out;
    }

    /// Accepts "4 2 1 3", "4,2,1,3" and the digit form "4213" (n <= 9).
    static Permutation parse(const std::string& text) {
        std::vector<int> vals;
        const bool has_sep = text.find(' ') != std::string::npos || text.find(',') != std::string::npos;
        if (!has_sep && !text.empty() && text.size() <= 9 &&
            std::all_of(text.begin(), text.end(), [](char c) { return c >= '1' && c <= '9'; })) {
            for (char c : text) vals.push_back(c - '0');
            return Permutation(vals);
        }
        std::string spaced = text;
        std::replace(spaced.begin(), spaced.end(), ',', ' ');
        std::istringstream in(spaced);
        int v;
        while (in >> v) vals.push_back(v);
        if (vals.empty()) throw invalid_input("cannot parse permutation from '" + text + "'");
        return Permutation(vals);
    }

    static Permutation identity(int n) {
        std::vector<int> vals(n);
        std::iota(vals.begin(), vals.end(), 1);
        return Permutation(std::move(vals));
    }

    static Permutation decreasing(int n) {
        std::vector<int> vals(n);
        for (int i = 0; i < n; ++i) vals[i] = n - i;
        return Permutation(std::move(vals));
    }

private:
    std::vector<int> values_;
};

/// std(xs): the permutation in the same relative order as xs.
template <typename T>
Permutation standardize(std::span<const T> xs) {
    const int n = static_cast<int>(xs.size());
    if (n == 0) throw invalid_input("standardize: empty input");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return xs[a] < xs[b]; });
    std::vector<int> out(n);
    for (int r = 0; r < n; ++r) {
        if (r > 0 && !(xs[idx[r - 1]] < xs[idx[r]]))
            throw invalid_input("standardize: entries are not pairwise distinct");
        out[idx[r]] = r + 1;
    }
    return Permutation(std::move(out));
}

inline Permutation standardize(const std::vector<int>& xs) {
    return standardize(std::span<const int>(xs));
}
inline Permutation standardize(const std::vector<double>& xs) {
    return standardize(std::span<const double>(xs));
}

/// pat_I(nu): the pattern induced by the 1-based index set I (given sorted).
inline Permutation pattern_at(const Permutation& nu, std::span<const int> indices) {
    if (indices.empty()) throw invalid_input("pattern_at: empty index set");
    std::vector<int> sub;
    sub.reserve(indices.size());
    int prev = 0;
    for (int i : indices) {
        if (i < 1 || i > nu.size()) throw invalid_input("pattern_at: index out of range");
        if (i <= prev) throw invalid_input("pattern_at: indices must be strictly increasing");
        prev = i;
        sub.push_back(nu(i));
    }
    return standardize(sub);
}

inline Permutation pattern_at(const Permutation& nu, const std::vector<int>& indices) {
    return pattern_at(nu, std::span<const int>(indices));
}

/// occ(pi, nu): occurrences of pi as a (classical) pattern, exact brute force
/// over index subsets. Refuses |pi| > 6 unless force is set; the cost is
/// binomial(|nu|, |pi|) subset scans.
inline std::uint64_t count_occurrences(const Permutation& nu, const Permutation& pi,
                                       bool force = false) {
    const int n = nu.size(), k = pi.size();
    if (k > n) return 0;
    if (k > 6 && !force)
        throw invalid_input("count_occurrences: |pi| > 6 needs force=true (combinatorial cost)");
    std::vector<int> idx(k);
    std::iota(idx.begin(), idx.end(), 1);
    std::uint64_t count = 0;
    while (true) {
        bool match = true;
        for (int a = 0; match && a < k; ++a)
            for (int b = a + 1; b < k; ++b)
                if ((nu(idx[a]) < nu(idx[b])) != (pi(a + 1) < pi(b + 1))) {
                    match = false;
                    break;
                }
        count += match;
        int pos = k - 1;
        while (pos >= 0 && idx[pos] == n - (k - 1 - pos)) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int j = pos + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return count;
}

/// c-occ(pi, nu): occurrences of pi as a consecutive pattern (interval windows).
inline std::uint64_t count_consecutive(const Permutation& nu, const Permutation& pi) {
    const int n = nu.size(), k = pi.size();
    if (k > n) return 0;
    std::uint64_t count = 0;
    for (int start = 1; start + k - 1 <= n; ++start) {
        bool match = true;
        for (int a = 0; match && a < k; ++a)
            for (int b = a + 1; b < k; ++b)
                if ((nu(start + a) < nu(start + b)) != (pi(a + 1) < pi(b + 1))) {
                    match = false;
                    break;
                }
        count += match;
    }
    return count;
}

/// theta[parts[0], ..., parts[d-1]]: substitution (inflation of each point of
/// theta by the diagram of the corresponding part).
inline Permutation substitute(const Permutation& theta, const std::vector<Permutation>& parts) {
    const int d = theta.size();
    if (static_cast<int>(parts.size()) != d)
        throw invalid_input("substitute: |parts| must equal |theta|");
    // Value offset of block i: total size of blocks with smaller theta-value.
    std::vector<int> offset(d, 0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (theta(j + 1) < theta(i + 1)) offset[i] += parts[j].size();
    std::vector<int> out;
    for (int i = 0; i < d; ++i)
        for (int v : parts[i].values()) out.push_back(v + offset[i]);
    return Permutation(std::move(out));
}

/// Simple permutation: size > 2 and no nontrivial interval mapped onto an
/// interval. O(n^2) min/max scan over intervals.
inline bool is_simple(const Permutation& nu) {
    const int n = nu.size();
    if (n <= 2) return false;
    for (int i = 1; i <= n; ++i) {
        int lo = nu(i), hi = nu(i);
        for (int j = i + 1; j <= n; ++j) {
            lo = std::min(lo, nu(j));
            hi = std::max(hi, nu(j));
            const int len = j - i + 1;
            if (len == n) break;
            if (hi - lo == j - i) return false;  // [i,j] is a nontrivial block
        }
    }
    return true;
}

/// Finest decomposition nu = plus_k[parts...]: every part +-indecomposable.
/// A single part iff nu itself is +-indecomposable.
inline std::vector<Permutation> plus_components(const Permutation& nu) {
    std::vector<Permutation> parts;
    const int n = nu.size();
    int start = 1, max_so_far = 0;
    for (int i = 1; i <= n; ++i) {
        max_so_far = std::max(max_so_far, nu(i));
        if (max_so_far == i) {
            std::vector<int> vals;
            for (int j = start; j <= i; ++j) vals.push_back(nu(j) - (start - 1));
            parts.emplace_back(std::move(vals));
            start = i + 1;
        }
    }
    return parts;
}

/// Finest decomposition nu = minus_k[parts...]: every part --indecomposable.
inline std::vector<Permutation> minus_components(const Permutation& nu) {
    std::vector<Permutation> parts;
    const int n = nu.size();
    int start = 1, min_so_far = n + 1;
    for (int i = 1; i <= n; ++i) {
        min_so_far = std::min(min_so_far, nu(i));
        if (min_so_far == n - i + 1) {
            std::vector<int> vals;
            for (int j = start; j <= i; ++j) vals.push_back(nu(j) - (n - i));
            parts.emplace_back(std::move(vals));
            start = i + 1;
        }
    }
    return parts;
}

/// socc(12, alpha): non-inversions, used by the limit-parameter formula.
inline std::uint64_t socc12(const Permutation& alpha) {
    std::uint64_t c = 0;
    for (int i = 1; i <= alpha.size(); ++i)
        for (int j = i + 1; j <= alpha.size(); ++j) c += alpha(i) < alpha(j);
    return c;
}

/// Inversion count in O(n log n); occ(12, nu) = binom(n,2) - inversions.
inline std::uint64_t count_inversions(const Permutation& nu) {
    const int n = nu.size();
    std::vector<int> bit(n + 1, 0);
    std::uint64_t inv = 0;
    for (int i = n; i >= 1; --i) {
        for (int j = nu(i) - 1; j > 0; j -= j & (-j)) inv += bit[j];
        for (int j = nu(i); j <= n; j += j & (-j)) ++bit[j];
    }
    return inv;
}

}  // namespace permclass
