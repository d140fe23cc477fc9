#pragma once

#include <cassert>
#include <optional>
#include <string>
#include <vector>

#include "permclass/class_spec.hpp"
#include "permclass/permutation.hpp"
#include "permclass/plane_tree.hpp"

namespace permclass {

enum class DecKind : std::uint8_t {
    none,    // leaf
    plus,    // increasing permutation (size = outdegree)
    minus,   // decreasing permutation
    simple,  // simple permutation alpha, |alpha| = outdegree
    star,    // packed-tree monotone vertex (size = outdegree)
    gadget,  // packed-tree merged vertex
};

/// Height-<=2 decoration of a packed tree: a simple root permutation and one
/// slot per root child, either a leaf (1) or an increasing vertex with m >= 2
/// leaves below it.
struct Gadget {
    Permutation root;
    std::vector<int> slots;  // slot value 1 = Leaf, m >= 2 = Plus(m)

    int size() const {
        int s = 0;
        for (int m : slots) s += m;
        return s;
    }

    /// Slot owning the i-th gadget leaf (both 1-based).
    int slot_of_leaf(int i) const {
        int acc = 0;
        for (std::size_t s = 0; s < slots.size(); ++s) {
            acc += slots[s];
            if (i <= acc) return static_cast<int>(s) + 1;
        }
        throw invalid_input("gadget: leaf index out of range");
    }

    bool operator==(const Gadget&) const = default;
};

struct Dec {
    DecKind kind = DecKind::none;
    std::optional<Permutation> alpha;  // simple decoration
    std::optional<Gadget> gadget;      // gadget decoration

    static Dec leaf() { return {}; }
    static Dec plus() { return {DecKind::plus, std::nullopt, std::nullopt}; }
    static Dec minus() { return {DecKind::minus, std::nullopt, std::nullopt}; }
    static Dec star() { return {DecKind::star, std::nullopt, std::nullopt}; }
    static Dec simple(Permutation a) { return {DecKind::simple, std::move(a), std::nullopt}; }
    static Dec of_gadget(Gadget g) { return {DecKind::gadget, std::nullopt, std::move(g)}; }

    bool operator==(const Dec&) const = default;
};

/// Plane tree whose internal vertices carry decorations from S-hat
/// (monotone or simple), no two adjacent vertices sharing a monotone sign.
/// Size = number of leaves; produced by canonical_tree.
struct CanonicalTree {
    PlaneTree tree;
    std::vector<Dec> dec;  // indexed by vertex id

    int size() const { return tree.leaf_count(); }
};

/// Plane tree decorated from G-hat(S) = gadgets + stars.
struct PackedTree {
    PlaneTree tree;
    std::vector<Dec> dec;

    int size() const { return tree.leaf_count(); }
};

/// Non-empty ordered sequence of packed trees, one per +-component.
struct DecoratedForest {
    std::vector<PackedTree> trees;

    int size() const {
        int s = 0;
        for (const auto& t : trees) s += t.size();
        return s;
    }
};

// ---------------------------------------------------------------------------
// Substitution decomposition
// ---------------------------------------------------------------------------

struct Decomposition {
    DecKind kind = DecKind::none;      // plus, minus or simple
    std::optional<Permutation> alpha;  // set in the simple case
    std::vector<Permutation> parts;
};

/// Unique first-level decomposition of nu (|nu| >= 2): either a +-sum of
/// +-indecomposables, a --sum of --indecomposables, or the inflation of a
/// simple permutation by its maximal proper blocks.
inline Decomposition substitution_decompose(const Permutation& nu) {
    const int n = nu.size();
    if (n < 2) throw invalid_input("substitution_decompose: size must be >= 2");

    if (auto parts = plus_components(nu); parts.size() >= 2)
        return {DecKind::plus, std::nullopt, std::move(parts)};
    if (auto parts = minus_components(nu); parts.size() >= 2)
        return {DecKind::minus, std::nullopt, std::move(parts)};

    // Simple case: maximal proper blocks are pairwise disjoint and cover
    // [1, n]; scan each start position left-to-right for the longest proper
    // interval mapped onto an interval.
    Decomposition out;
    out.kind = DecKind::simple;
    std::vector<int> leaders;
    int start = 1;
    while (start <= n) {
        int lo = nu(start), hi = nu(start), best_end = start;
        int run_lo = lo, run_hi = hi;
        for (int j = start + 1; j <= n; ++j) {
            run_lo = std::min(run_lo, nu(j));
            run_hi = std::max(run_hi, nu(j));
            if (j - start + 1 == n) break;  // proper blocks only
            if (run_hi - run_lo == j - start) {
                best_end = j;
                lo = run_lo;
                hi = run_hi;
            }
        }
        std::vector<int> vals;
        for (int j = start; j <= best_end; ++j) vals.push_back(nu(j) - lo + 1);
        out.parts.emplace_back(std::move(vals));
        leaders.push_back(lo);
        start = best_end + 1;
    }
    Permutation alpha = standardize(leaders);
    assert(is_simple(alpha));
    out.alpha = std::move(alpha);
    return out;
}

// ---------------------------------------------------------------------------
// Canonical trees
// ---------------------------------------------------------------------------

namespace detail {
inline void build_canonical(const Permutation& nu, CanonicalTree& t, int parent) {
    const int v = parent == PlaneTree::npos ? t.tree.add_root() : t.tree.add_child(parent);
    t.dec.emplace_back();
    if (nu.size() == 1) return;
    Decomposition d = substitution_decompose(nu);
    t.dec[v] = d.kind == DecKind::plus    ? Dec::plus()
               : d.kind == DecKind::minus ? Dec::minus()
                                          : Dec::simple(*d.alpha);
    for (const auto& part : d.parts) build_canonical(part, t, v);
}
}  // namespace detail

/// CanTree(nu): recursive substitution decomposition. The i-th leaf in
/// depth-first order corresponds to the i-th element of nu.
inline CanonicalTree canonical_tree(const Permutation& nu) {
    CanonicalTree t;
    detail::build_canonical(nu, t, PlaneTree::npos);
    return t;
}

/// No two adjacent vertices share a monotone sign, and outdegrees match
/// decoration sizes.
inline bool is_canonical(const CanonicalTree& t) {
    for (int v = 0; v < t.tree.size(); ++v) {
        const Dec& d = t.dec[v];
        if (t.tree.is_leaf(v)) {
            if (d.kind != DecKind::none) return false;
            continue;
        }
        const int deg = t.tree.outdegree(v);
        switch (d.kind) {
            case DecKind::plus:
            case DecKind::minus:
                if (deg < 2) return false;
                break;
            case DecKind::simple:
                if (!d.alpha || !is_simple(*d.alpha) || d.alpha->size() != deg) return false;
                break;
            default:
                return false;
        }
        const int p = t.tree.parent(v);
        if (p != PlaneTree::npos &&
            (d.kind == DecKind::plus || d.kind == DecKind::minus) && t.dec[p].kind == d.kind)
            return false;
    }
    return true;
}

namespace detail {
inline Permutation eval_vertex(const CanonicalTree& t, int v) {
    if (t.tree.is_leaf(v)) return Permutation::identity(1);
    std::vector<Permutation> parts;
    for (int c : t.tree.children(v)) parts.push_back(eval_vertex(t, c));
    const int d = static_cast<int>(parts.size());
    const Dec& dec = t.dec[v];
    switch (dec.kind) {
        case DecKind::plus:
            return substitute(Permutation::identity(d), parts);
        case DecKind::minus:
            return substitute(Permutation::decreasing(d), parts);
        case DecKind::simple:
            if (!dec.alpha || dec.alpha->size() != d)
                throw invalid_input("eval_tree: decoration size does not match outdegree");
            return substitute(*dec.alpha, parts);
        default:
            throw invalid_input("eval_tree: internal vertex without decoration");
    }
}
}  // namespace detail

/// CanTree^{-1}, extended to all S-hat-decorated trees (adjacent equal signs
/// allowed; the map is then no longer injective).
inline Permutation eval_tree(const CanonicalTree& t) {
    return detail::eval_vertex(t, t.tree.root());
}

// ---------------------------------------------------------------------------
// Packing
// ---------------------------------------------------------------------------

namespace detail {
inline void build_packed(const CanonicalTree& t, int v, PackedTree& p, int parent) {
    const int w = parent == PlaneTree::npos ? p.tree.add_root() : p.tree.add_child(parent);
    p.dec.emplace_back();
    if (t.tree.is_leaf(v)) return;
    const Dec& d = t.dec[v];
    if (d.kind == DecKind::plus || d.kind == DecKind::minus) {
        p.dec[w] = Dec::star();
        for (int c : t.tree.children(v)) build_packed(t, c, p, w);
        return;
    }
    // Simple vertex: merge with its +-children into one gadget vertex.
    Gadget g;
    g.root = *d.alpha;
    for (int c : t.tree.children(v)) {
        if (!t.tree.is_leaf(c) && t.dec[c].kind == DecKind::plus) {
            g.slots.push_back(t.tree.outdegree(c));
            for (int gc : t.tree.children(c)) build_packed(t, gc, p, w);
        } else {
            g.slots.push_back(1);
            build_packed(t, c, p, w);
        }
    }
    p.dec[w] = Dec::of_gadget(std::move(g));
}

inline void build_unpacked(const PackedTree& p, int w, CanonicalTree& t, int parent,
                           DecKind parent_kind) {
    if (p.tree.is_leaf(w)) {
        const int v = parent == PlaneTree::npos ? t.tree.add_root() : t.tree.add_child(parent);
        t.dec.emplace_back();
        (void)v;
        return;
    }
    const Dec& d = p.dec[w];
    if (d.kind == DecKind::star) {
        // Root or child of a gadget: minus. Below another star: alternate.
        DecKind kind;
        if (parent == PlaneTree::npos || parent_kind == DecKind::gadget)
            kind = DecKind::minus;
        else
            kind = parent_kind == DecKind::minus ? DecKind::plus : DecKind::minus;
        const int v = parent == PlaneTree::npos ? t.tree.add_root() : t.tree.add_child(parent);
        t.dec.emplace_back(kind == DecKind::plus ? Dec::plus() : Dec::minus());
        for (int c : p.tree.children(w))
            build_unpacked(p, c, t, v, kind);
        return;
    }
    // Gadget: expand into a simple vertex whose children follow the slots.
    const Gadget& g = *d.gadget;
    const int v = parent == PlaneTree::npos ? t.tree.add_root() : t.tree.add_child(parent);
    t.dec.emplace_back(Dec::simple(g.root));
    auto kids = p.tree.children(w);
    std::size_t next = 0;
    for (int m : g.slots) {
        if (m == 1) {
            build_unpacked(p, kids.at(next++), t, v, DecKind::gadget);
        } else {
            const int plus_v = t.tree.add_child(v);
            t.dec.emplace_back(Dec::plus());
            for (int j = 0; j < m; ++j)
                build_unpacked(p, kids.at(next++), t, plus_v, DecKind::plus);
        }
    }
    if (next != kids.size()) throw invalid_input("unpack: gadget slots do not match outdegree");
}
}  // namespace detail

/// Pack(T): merge each simple-decorated vertex with its +-children into a
/// gadget vertex; remaining monotone decorations become stars. Requires a
/// root not decorated with plus.
inline PackedTree pack(const CanonicalTree& t) {
    const int r = t.tree.root();
    if (!t.tree.is_leaf(r) && t.dec[r].kind == DecKind::plus)
        throw invalid_input("pack: root must not be decorated with plus");
    PackedTree p;
    detail::build_packed(t, r, p, PlaneTree::npos);
    return p;
}

/// Inverse of pack: expand gadgets, re-sign stars (root or below a gadget:
/// minus, then alternating).
inline CanonicalTree unpack(const PackedTree& p) {
    CanonicalTree t;
    detail::build_unpacked(p, p.tree.root(), t, PlaneTree::npos, DecKind::none);
    return t;
}

inline bool is_packed(const PackedTree& p) {
    for (int v = 0; v < p.tree.size(); ++v) {
        const Dec& d = p.dec[v];
        if (p.tree.is_leaf(v)) {
            if (d.kind != DecKind::none) return false;
            continue;
        }
        const int deg = p.tree.outdegree(v);
        if (d.kind == DecKind::star) {
            if (deg < 2) return false;
        } else if (d.kind == DecKind::gadget) {
            if (!d.gadget || d.gadget->size() != deg || d.gadget->root.size() < 4 ||
                !is_simple(d.gadget->root) ||
                static_cast<int>(d.gadget->slots.size()) != d.gadget->root.size())
                return false;
            for (int m : d.gadget->slots)
                if (m < 1) return false;
        } else {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Forest bijection
// ---------------------------------------------------------------------------

/// True iff every simple decoration of the canonical tree of nu lies in the
/// class. Throws membership_error when a truncated spec cannot decide.
inline bool class_membership(const Permutation& nu, const ClassSpec& spec) {
    CanonicalTree t = canonical_tree(nu);
    for (int v = 0; v < t.tree.size(); ++v)
        if (t.dec[v].kind == DecKind::simple && !spec.contains_simple(*t.dec[v].alpha))
            return false;
    return true;
}

/// DF(nu): one packed tree per +-component. Rejects permutations outside the
/// class.
inline DecoratedForest forest_encode(const Permutation& nu, const ClassSpec& spec) {
    DecoratedForest forest;
    for (const auto& part : plus_components(nu)) {
        CanonicalTree t = canonical_tree(part);
        for (int v = 0; v < t.tree.size(); ++v)
            if (t.dec[v].kind == DecKind::simple && !spec.contains_simple(*t.dec[v].alpha))
                throw membership_error("forest_encode: " + nu.str() + " is not in class " +
                                       spec.name());
        forest.trees.push_back(pack(t));
    }
    return forest;
}

/// DF^{-1}: decode each component and rebuild the +-sum.
inline Permutation forest_decode(const DecoratedForest& forest) {
    if (forest.trees.empty()) throw invalid_input("forest_decode: empty forest");
    std::vector<Permutation> parts;
    parts.reserve(forest.trees.size());
    for (const auto& p : forest.trees) parts.push_back(eval_tree(unpack(p)));
    if (parts.size() == 1) return parts[0];
    return substitute(Permutation::identity(static_cast<int>(parts.size())), parts);
}

// ---------------------------------------------------------------------------
// Reading patterns on packed trees
// ---------------------------------------------------------------------------

/// Whether leaves a and b (vertex ids, a before b in leaf order) form an
/// inversion: gadget ancestors decide through their leaves, star ancestors
/// through the parity of the distance to the nearest gadget ancestor (or to
/// the root when there is none).
inline bool leaves_form_inversion(const PackedTree& p, int a, int b) {
    const int u = p.tree.common_ancestor(a, b);
    const int i1 = p.tree.child_rank(p.tree.child_towards(u, a)) + 1;
    const int i2 = p.tree.child_rank(p.tree.child_towards(u, b)) + 1;
    const Dec& d = p.dec[u];
    if (d.kind == DecKind::gadget) {
        const Gadget& g = *d.gadget;
        const int s1 = g.slot_of_leaf(i1), s2 = g.slot_of_leaf(i2);
        if (s1 == s2) return false;  // same increasing branch
        return g.root(s1) > g.root(s2);
    }
    // Star vertex: find the nearest gadget ancestor.
    int dist = 0;
    for (int anc = p.tree.parent(u); anc != PlaneTree::npos; anc = p.tree.parent(anc)) {
        ++dist;
        if (p.dec[anc].kind == DecKind::gadget) return dist % 2 == 1;
    }
    // No gadget above: the root corresponds to a minus vertex.
    return p.tree.depth(u) % 2 == 0;
}

/// Pattern induced by the given leaf numbers (1-based, strictly increasing,
/// in depth-first leaf order). Equals pattern_at on the decoded permutation.
inline Permutation read_pattern(const PackedTree& p, std::span<const int> leaf_numbers) {
    auto leaves = p.tree.leaves_in_order();
    const int k = static_cast<int>(leaf_numbers.size());
    if (k == 0) throw invalid_input("read_pattern: empty leaf set");
    std::vector<int> vs(k);
    int prev = 0;
    for (int i = 0; i < k; ++i) {
        const int num = leaf_numbers[i];
        if (num <= prev || num > static_cast<int>(leaves.size()))
            throw invalid_input("read_pattern: leaf numbers must be increasing and in range");
        prev = num;
        vs[i] = leaves[num - 1];
    }
    std::vector<int> rank(k, 1);
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
            if (leaves_form_inversion(p, vs[i], vs[j]))
                ++rank[i];
            else
                ++rank[j];
        }
    return Permutation(std::move(rank));
}

inline Permutation read_pattern(const PackedTree& p, const std::vector<int>& leaf_numbers) {
    return read_pattern(p, std::span<const int>(leaf_numbers));
}

// ---------------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------------
//
//   tree  := "." | "(" dec { " " tree }+ ")"
//   dec   := "*" | "+" | "-" | "s " perm | "g " perm " [" slots "]"
//   slots := ("L" | "P" m) { "," ... }
//   perm  := digits (n <= 9) | comma-separated values
//
// Forests are trees joined by " | ". Stable format, used by golden tests.

namespace detail {
inline std::string perm_token(const Permutation& q) {
    if (q.size() <= 9) return q.compact();
    std::string out;
    for (int i = 1; i <= q.size(); ++i) {
        if (i > 1) out += ',';
        out += std::to_string(q(i));
    }
    return out;
}

template <typename TreeT>
inline void write_tree(const TreeT& t, int v, std::string& out) {
    if (t.tree.is_leaf(v)) {
        out += '.';
        return;
    }
    out += '(';
    const Dec& d = t.dec[v];
    switch (d.kind) {
        case DecKind::star: out += '*'; break;
        case DecKind::plus: out += '+'; break;
        case DecKind::minus: out += '-'; break;
        case DecKind::simple:
            out += "s ";
            out += perm_token(*d.alpha);
            break;
        case DecKind::gadget: {
            out += "g ";
            out += perm_token(d.gadget->root);
            out += " [";
            for (std::size_t i = 0; i < d.gadget->slots.size(); ++i) {
                if (i) out += ',';
                const int m = d.gadget->slots[i];
                out += m == 1 ? "L" : "P" + std::to_string(m);
            }
            out += ']';
            break;
        }
        default: throw invalid_input("write_tree: undecorated internal vertex");
    }
    for (int c : t.tree.children(v)) {
        out += ' ';
        write_tree(t, c, out);
    }
    out += ')';
}

struct TreeParser {
    const std::string& text;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && text[pos] == ' ') ++pos;
    }
    char peek() {
        if (pos >= text.size()) throw invalid_input("tree parse: unexpected end of input");
        return text[pos];
    }
    void expect(char c) {
        if (peek() != c)
            throw invalid_input(std::string("tree parse: expected '") + c + "' at position " +
                                std::to_string(pos));
        ++pos;
    }
    std::string token_until(const std::string& stops) {
        std::size_t start = pos;
        while (pos < text.size() && stops.find(text[pos]) == std::string::npos) ++pos;
        return text.substr(start, pos - start);
    }

    template <typename TreeT>
    int parse_node(TreeT& t, int parent) {
        skip_ws();
        if (peek() == '.') {
            ++pos;
            const int v = parent == PlaneTree::npos ? t.tree.add_root() : t.tree.add_child(parent);
            t.dec.emplace_back();
            return v;
        }
        expect('(');
        Dec d;
        switch (peek()) {
            case '*': ++pos; d = Dec::star(); break;
            case '+': ++pos; d = Dec::plus(); break;
            case '-': ++pos; d = Dec::minus(); break;
            case 's': {
                ++pos;
                skip_ws();
                d = Dec::simple(Permutation::parse(token_until(" )")));
                break;
            }
            case 'g': {
                ++pos;
                skip_ws();
                Gadget g;
                g.root = Permutation::parse(token_until(" "));
                skip_ws();
                expect('[');
                while (true) {
                    if (peek() == 'L') {
                        ++pos;
                        g.slots.push_back(1);
                    } else {
                        expect('P');
                        g.slots.push_back(std::stoi(token_until(",]")));
                    }
                    if (peek() == ']') break;
                    expect(',');
                }
                expect(']');
                d = Dec::of_gadget(std::move(g));
                break;
            }
            default: throw invalid_input("tree parse: unknown decoration");
        }
        const int v = parent == PlaneTree::npos ? t.tree.add_root() : t.tree.add_child(parent);
        t.dec.push_back(std::move(d));
        skip_ws();
        while (peek() != ')') {
            parse_node(t, v);
            skip_ws();
        }
        expect(')');
        return v;
    }
};
}  // namespace detail

inline std::string to_text(const CanonicalTree& t) {
    std::string out;
    detail::write_tree(t, t.tree.root(), out);
    return out;
}

inline std::string to_text(const PackedTree& p) {
    std::string out;
    detail::write_tree(p, p.tree.root(), out);
    return out;
}

inline std::string to_text(const DecoratedForest& f) {
    std::string out;
    for (std::size_t i = 0; i < f.trees.size(); ++i) {
        if (i) out += " | ";
        out += to_text(f.trees[i]);
    }
    return out;
}

inline CanonicalTree parse_canonical_tree(const std::string& text) {
    CanonicalTree t;
    detail::TreeParser parser{text};
    parser.parse_node(t, PlaneTree::npos);
    return t;
}

inline PackedTree parse_packed_tree(const std::string& text) {
    PackedTree p;
    detail::TreeParser parser{text};
    parser.parse_node(p, PlaneTree::npos);
    if (!is_packed(p)) throw invalid_input("parse_packed_tree: not a valid packed tree");
    return p;
}

inline DecoratedForest parse_forest(const std::string& text) {
    DecoratedForest f;
    std::size_t start = 0;
    while (true) {
        std::size_t sep = text.find(" | ", start);
        std::string part = text.substr(start, sep == std::string::npos ? sep : sep - start);
        f.trees.push_back(parse_packed_tree(part));
        if (sep == std::string::npos) break;
        start = sep + 3;
    }
    return f;
}

}  // namespace permclass
