#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "permclass/decomposition.hpp"
#include "permclass/sampler.hpp"

#include <json.hpp>

namespace permclass {

struct insufficient_realization : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Skeleton extraction
// ---------------------------------------------------------------------------

/// Contracted t-neighbourhood of the ancestor tree of the marked vertices:
/// the shape keeps the marks' ancestor tree, every branch attached within
/// distance t of an essential vertex (root, marks, pairwise closest common
/// ancestors), and contracts each middle segment into one labelled edge.
/// Labels are stored as deleted-vertex counts; the scale s applies at read
/// time.
struct SkeletonView {
    PlaneTree shape;
    std::vector<int> marks;                // shape ids, one per input mark
    std::vector<int> label_edges;          // child vertex under each contracted edge
    std::vector<long long> label_counts;   // deleted vertices per contracted edge
    double scale = 1.0;
    int k = 0;
    int t = 0;
    std::vector<int> omega;
    bool generic = false;

    std::vector<double> labels() const {
        std::vector<double> out(label_counts.size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = scale * static_cast<double>(label_counts[i]);
        return out;
    }

    double label_sum() const {
        long long total = 0;
        for (long long c : label_counts) total += c;
        return scale * static_cast<double>(total);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        std::string text;
        write_shape(shape.root(), text);
        j["shape"] = text;
        j["marks"] = marks;
        j["label_edges"] = label_edges;
        j["label_counts"] = label_counts;
        j["labels"] = labels();
        j["generic"] = generic;
        j["k"] = k;
        j["t"] = t;
        j["omega"] = omega;
        j["scale"] = scale;
        return j;
    }

    /// Undecorated shape text: leaf ".", internal "(" children ")".
    void write_shape(int v, std::string& out) const {
        if (shape.is_leaf(v)) {
            out += '.';
            return;
        }
        out += '(';
        bool first = true;
        for (int c : shape.children(v)) {
            if (!first) out += ' ';
            first = false;
            write_shape(c, out);
        }
        out += ')';
    }

    std::string shape_text() const {
        std::string out;
        write_shape(shape.root(), out);
        return out;
    }
};

inline SkeletonView extract_skeleton(const PlaneTree& tree, const std::vector<int>& marks,
                                     int t, double scale = 1.0,
                                     std::vector<int> omega = {0}) {
    if (marks.empty()) throw invalid_input("extract_skeleton: need at least one mark");
    SkeletonView view;
    view.scale = scale;
    view.k = static_cast<int>(marks.size());
    view.t = t;
    view.omega = std::move(omega);

    const int n = tree.size();
    std::vector<char> in_r(n, 0), essential(n, 0);
    for (int m : marks) {
        if (m < 0 || m >= n) throw invalid_input("extract_skeleton: mark out of range");
        essential[m] = 1;
        for (int u = m; u != PlaneTree::npos; u = tree.parent(u)) in_r[u] = 1;
    }
    in_r[tree.root()] = 1;
    essential[tree.root()] = 1;
    for (std::size_t i = 0; i < marks.size(); ++i)
        for (std::size_t j = i + 1; j < marks.size(); ++j)
            essential[tree.common_ancestor(marks[i], marks[j])] = 1;

    // Distance to the nearest essential vertex inside R (BFS along R edges).
    std::vector<int> dist(n, -1);
    std::deque<int> queue;
    for (int v = 0; v < n; ++v)
        if (essential[v]) {
            dist[v] = 0;
            queue.push_back(v);
        }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        auto relax = [&](int u) {
            if (u != PlaneTree::npos && in_r[u] && dist[u] < 0) {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        };
        relax(tree.parent(v));
        for (int c : tree.children(v)) relax(c);
    }

    // Copy, dropping far branches and contracting deleted runs.
    std::vector<int> shape_id(n, -1);
    auto copy_branch = [&](auto&& self, int src, int parent) -> void {
        const int v = parent == PlaneTree::npos ? view.shape.add_root()
                                                : view.shape.add_child(parent);
        shape_id[src] = v;
        for (int c : tree.children(src)) self(self, c, v);
    };
    auto walk = [&](auto&& self, int u, int shape_parent, long long pending) -> void {
        const bool survives = dist[u] >= 0 && dist[u] <= t;
        if (!survives) {
            // Deleted middle-segment vertex: exactly one R-child continues.
            for (int c : tree.children(u))
                if (in_r[c]) self(self, c, shape_parent, pending + 1);
            return;
        }
        const int v = shape_parent == PlaneTree::npos ? view.shape.add_root()
                                                      : view.shape.add_child(shape_parent);
        shape_id[u] = v;
        if (pending > 0) {
            view.label_edges.push_back(v);
            view.label_counts.push_back(pending);
        }
        for (int c : tree.children(u)) {
            if (in_r[c])
                self(self, c, v, 0);
            else
                copy_branch(copy_branch, c, v);
        }
    };
    walk(walk, tree.root(), PlaneTree::npos, 0);

    for (int m : marks) view.marks.push_back(shape_id[m]);

    // Genericity: 2k distinct essential vertices and successive essential
    // distances all exactly 2t+1 in the contracted shape.
    std::set<int> ess_shape;
    for (int v = 0; v < n; ++v)
        if (essential[v] && shape_id[v] >= 0) ess_shape.insert(shape_id[v]);
    bool generic = static_cast<int>(ess_shape.size()) == 2 * view.k;
    for (int e : ess_shape) {
        if (e == view.shape.root()) continue;
        int d = 0, u = e;
        while (u != view.shape.root()) {
            u = view.shape.parent(u);
            ++d;
            if (ess_shape.count(u)) break;
        }
        if (d != 2 * t + 1) generic = false;
    }
    view.generic = generic;
    return view;
}

/// R*(T, marks): ancestor tree of the marks with every non-root vertex of
/// outdegree one removed. Root keeps outdegree one; leaves are the marks.
struct ReducedTree {
    PlaneTree tree;
    std::vector<int> mark_vertices;  // per input mark (deduplicated vertices)
};

inline ReducedTree reduced_tree(const PlaneTree& tree, const std::vector<int>& marks) {
    if (marks.empty()) throw invalid_input("reduced_tree: need at least one mark");
    const int n = tree.size();
    std::vector<char> in_r(n, 0);
    for (int m : marks)
        for (int u = m; u != PlaneTree::npos; u = tree.parent(u)) in_r[u] = 1;

    std::vector<char> is_mark(n, 0);
    for (int m : marks) is_mark[m] = 1;

    ReducedTree out;
    std::vector<int> shape_id(n, -1);
    auto r_children = [&](int u) {
        std::vector<int> cs;
        for (int c : tree.children(u))
            if (in_r[c]) cs.push_back(c);
        return cs;
    };
    auto walk = [&](auto&& self, int u, int parent) -> void {
        auto cs = r_children(u);
        const bool keep = u == tree.root() || is_mark[u] || cs.size() >= 2;
        int attach = parent;
        if (keep) {
            attach = parent == PlaneTree::npos ? out.tree.add_root() : out.tree.add_child(parent);
            shape_id[u] = attach;
        }
        for (int c : cs) self(self, c, attach);
    };
    walk(walk, tree.root(), PlaneTree::npos);
    for (int m : marks) out.mark_vertices.push_back(shape_id[m]);
    return out;
}

// ---------------------------------------------------------------------------
// Rooted permutations and the local distances
// ---------------------------------------------------------------------------

/// A finite rooted permutation (nu, i), equivalently a total order on the
/// integer window [-(i-1), |nu|-i] around 0.
struct RootedPermutation {
    Permutation perm;
    int root = 1;

    RootedPermutation() = default;
    RootedPermutation(Permutation p, int r) : perm(std::move(p)), root(r) {
        if (root < 1 || root > perm.size())
            throw invalid_input("rooted permutation: root index out of range");
    }

    int window_lo() const { return -(root - 1); }
    int window_hi() const { return perm.size() - root; }

    bool operator==(const RootedPermutation&) const = default;
};

/// r_h: restriction to the window [-h, h] around the root.
inline RootedPermutation restrict_rooted(const RootedPermutation& r, int h) {
    if (h < 0) throw invalid_input("restrict_rooted: h must be >= 0");
    const int a = std::max(1, r.root - h);
    const int b = std::min(r.perm.size(), r.root + h);
    std::vector<int> idx;
    for (int i = a; i <= b; ++i) idx.push_back(i);
    return RootedPermutation(pattern_at(r.perm, idx), r.root - a + 1);
}

/// Local distance between rooted permutations: 2^-(H+1) where H is the
/// largest radius at which the restrictions agree (0 for identical inputs;
/// r_0 always agrees, so the distance is at most 1/2).
inline double perm_local_distance(const RootedPermutation& r1, const RootedPermutation& r2) {
    if (r1 == r2) return 0.0;
    const int max_h = std::max(std::max(r1.root, r1.perm.size() - r1.root + 1),
                               std::max(r2.root, r2.perm.size() - r2.root + 1));
    int agree = 0;
    for (int h = 1; h <= max_h; ++h) {
        if (restrict_rooted(r1, h) == restrict_rooted(r2, h))
            agree = h;
        else
            break;
    }
    return std::ldexp(1.0, -(agree + 1));
}

// ---------------------------------------------------------------------------
// Pointed-tree fringes and the tree local distance
// ---------------------------------------------------------------------------

/// Fringe subtree of a packed tree, with decorations, plus the image of a
/// tracked leaf.
inline PackedTree fringe_packed(const PackedTree& p, int root_vertex, int tracked = -1,
                                int* tracked_out = nullptr) {
    PackedTree out;
    auto copy = [&](auto&& self, int src, int parent) -> void {
        const int v = parent == PlaneTree::npos ? out.tree.add_root() : out.tree.add_child(parent);
        out.dec.push_back(p.dec[src]);
        if (src == tracked && tracked_out) *tracked_out = v;
        for (int c : p.tree.children(src)) self(self, c, v);
    };
    copy(copy, root_vertex, PlaneTree::npos);
    return out;
}

/// f_h: the pointed fringe rooted at the h-th spine ancestor of the pointed
/// leaf, clamped to the whole realization when h exceeds the spine.
inline PointedPackedTree pointed_fringe(const PointedPackedTree& pt, int h) {
    const int m = pt.spine_depth();
    const int use = std::min(h, m);
    PointedPackedTree out;
    int mapped = -1;
    out.packed = fringe_packed(pt.packed, pt.spine[use], pt.pointed_leaf, &mapped);
    out.pointed_leaf = mapped;
    // Spine ids in the copied tree: ancestors of the pointed leaf.
    for (int v = mapped; v != PlaneTree::npos; v = out.packed.tree.parent(v))
        out.spine.push_back(v);
    out.fringe_vertex_cap = pt.fringe_vertex_cap;
    return out;
}

namespace detail {
inline std::string pointed_key(const PointedPackedTree& pt) {
    auto leaves = pt.packed.tree.leaves_in_order();
    int pos = -1;
    for (std::size_t i = 0; i < leaves.size(); ++i)
        if (leaves[i] == pt.pointed_leaf) pos = static_cast<int>(i);
    return std::to_string(pos) + "@" + to_text(pt.packed);
}
}  // namespace detail

/// Local distance between pointed decorated trees: 2^-(H+1) with H the
/// largest h at which the pointed fringes agree (decorations compared
/// exactly); 0 for identical realizations.
inline double tree_local_distance(const PointedPackedTree& t1, const PointedPackedTree& t2) {
    if (detail::pointed_key(t1) == detail::pointed_key(t2)) return 0.0;
    const int top = std::max(t1.spine_depth(), t2.spine_depth());
    int agree = 0;
    for (int h = 1; h <= top; ++h) {
        if (detail::pointed_key(pointed_fringe(t1, h)) ==
            detail::pointed_key(pointed_fringe(t2, h)))
            agree = h;
        else
            break;
    }
    return std::ldexp(1.0, -(agree + 1));
}

// ---------------------------------------------------------------------------
// Realization maps (packed trees -> rooted permutations)
// ---------------------------------------------------------------------------

/// RP on finite packed trees: the decoded permutation rooted at the position
/// of the given leaf (1-based leaf number).
inline RootedPermutation realize_finite(const PackedTree& p, int leaf_number) {
    return RootedPermutation(eval_tree(unpack(p)), leaf_number);
}

namespace detail {
struct WindowAnchor {
    int spine_index = -1;   // index into pt.spine of the certifying ancestor
    int leaf_pos = -1;      // pointed leaf position in the whole-tree leaf order
    int fringe_lo = -1;     // first leaf position inside the fringe
    int fringe_hi = -1;     // last leaf position inside the fringe
};

/// First spine ancestor whose fringe holds w leaves strictly before and after
/// the pointed leaf; optionally requires a gadget decoration at that ancestor.
inline WindowAnchor certify_window(const PointedPackedTree& pt, int w, bool need_gadget) {
    const auto& tree = pt.packed.tree;
    auto leaves = tree.leaves_in_order();
    WindowAnchor a;
    for (std::size_t i = 0; i < leaves.size(); ++i)
        if (leaves[i] == pt.pointed_leaf) a.leaf_pos = static_cast<int>(i);

    // Leftmost/rightmost leaf positions below each spine vertex, bottom-up.
    std::vector<int> pos_of(tree.size(), -1);
    for (std::size_t i = 0; i < leaves.size(); ++i) pos_of[leaves[i]] = static_cast<int>(i);
    for (int s = 1; s <= pt.spine_depth(); ++s) {
        const int u = pt.spine[s];
        // Fringe leaves form a consecutive block; find its extent by walking
        // to the leftmost and rightmost descendant leaves.
        int lo = u, hi = u;
        while (!tree.is_leaf(lo)) lo = tree.first_child(lo);
        while (!tree.is_leaf(hi)) {
            const auto cs = tree.children(hi);
            hi = cs.back();
        }
        const int before = a.leaf_pos - pos_of[lo];
        const int after = pos_of[hi] - a.leaf_pos;
        if (before >= w && after >= w &&
            (!need_gadget || pt.packed.dec[u].kind == DecKind::gadget)) {
            a.spine_index = s;
            a.fringe_lo = pos_of[lo];
            a.fringe_hi = pos_of[hi];
            return a;
        }
    }
    throw insufficient_realization("window of half-width " + std::to_string(w) +
                                   " not certifiable from this realization; deepen the spine");
}
}  // namespace detail

/// Certified window of the rooted permutation realized by a pointed packed
/// tree: the order on [-w, w] read off the first gadget-rooted spine fringe
/// with w leaves on both sides (stable under further growth of the
/// realization).
inline RootedPermutation realize_rooted_permutation(const PointedPackedTree& pt, int w) {
    if (pt.spine_depth() == 0 || w < 0)
        throw invalid_input("realize_rooted_permutation: bad arguments");
    auto anchor = detail::certify_window(pt, w, /*need_gadget=*/true);
    std::vector<int> window;
    for (int pos = anchor.leaf_pos - w; pos <= anchor.leaf_pos + w; ++pos)
        window.push_back(pos - anchor.fringe_lo + 1);
    int mapped = -1;
    PackedTree fringe =
        fringe_packed(pt.packed, pt.spine[anchor.spine_index], pt.pointed_leaf, &mapped);
    return RootedPermutation(read_pattern(fringe, window), w + 1);
}

/// Separable-class realization: decorations are implied by depth parity and
/// an external sign; the parent of the pointed leaf is plus when sign > 0.
/// Finite form: decorate the whole tree and decode.
inline RootedPermutation realize_signed_finite(const PlaneTree& tree, int pointed_leaf,
                                               int sign) {
    if (tree.size() == 1) return RootedPermutation(Permutation::identity(1), 1);
    CanonicalTree t;
    t.tree = tree;
    t.dec.resize(tree.size());
    const int anchor = tree.parent(pointed_leaf);
    const int anchor_depth = tree.depth(anchor);
    for (int v = 0; v < tree.size(); ++v) {
        if (tree.is_leaf(v)) continue;
        const bool same = tree.depth(v) % 2 == anchor_depth % 2;
        const bool plus = sign > 0 ? same : !same;
        t.dec[v] = plus ? Dec::plus() : Dec::minus();
    }
    auto leaves = tree.leaves_in_order();
    int number = -1;
    for (std::size_t i = 0; i < leaves.size(); ++i)
        if (leaves[i] == pointed_leaf) number = static_cast<int>(i) + 1;
    return RootedPermutation(eval_tree(t), number);
}

/// Separable-class certified window: any spine fringe with w leaves on both
/// sides certifies; pairwise orders follow the parity decoration rule.
inline RootedPermutation realize_signed_window(const PointedPackedTree& pt, int sign, int w) {
    if (pt.spine_depth() == 0 || w < 0)
        throw invalid_input("realize_signed_window: bad arguments");
    auto anchor = detail::certify_window(pt, w, /*need_gadget=*/false);
    const auto& tree = pt.packed.tree;
    auto leaves = tree.leaves_in_order();
    const int parent_depth = tree.depth(tree.parent(pt.pointed_leaf));

    const int k = 2 * w + 1;
    std::vector<int> vs(k);
    for (int i = 0; i < k; ++i) vs[i] = leaves[anchor.leaf_pos - w + i];
    std::vector<int> rank(k, 1);
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
            const int cca = tree.common_ancestor(vs[i], vs[j]);
            const bool same = tree.depth(cca) % 2 == parent_depth % 2;
            const bool plus = sign > 0 ? same : !same;
            if (!plus)
                ++rank[i];
            else
                ++rank[j];
        }
    return RootedPermutation(Permutation(std::move(rank)), w + 1);
}

}  // namespace permclass
