#include <catch2/catch_amalgamated.hpp>

#include "permclass/skeleton.hpp"

#include "oracles.hpp"

using namespace permclass;
using Catch::Approx;

namespace {
const ClassSpec& separable() {
    static ClassSpec spec = ClassSpec::separable();
    return spec;
}
const ClassSpec& class_2413_3142() {
    static ClassSpec spec("s2413-3142",
                          {Permutation::parse("2413"), Permutation::parse("3142")});
    return spec;
}

/// path root - v1 - v2 - leaf
PlaneTree path_tree(int edges) {
    PlaneTree t;
    int v = t.add_root();
    for (int i = 0; i < edges; ++i) v = t.add_child(v);
    return t;
}
}  // namespace

TEST_CASE("extract_skeleton on a path") {
    // Root-to-leaf path of length 3, one mark at the leaf, t = 0: the two
    // inner vertices contract into a single labelled edge.
    PlaneTree t = path_tree(3);
    const int leaf = 3;
    SkeletonView view = extract_skeleton(t, {leaf}, 0);
    CHECK(view.shape.size() == 2);
    CHECK(view.shape_text() == "(.)");
    REQUIRE(view.label_counts.size() == 1);
    CHECK(view.label_counts[0] == 2);
    CHECK(view.labels()[0] == 2.0);
    CHECK(view.label_sum() == 2.0);

    // Scale applies at read time.
    SkeletonView scaled = extract_skeleton(t, {leaf}, 0, 0.5);
    CHECK(scaled.label_counts[0] == 2);
    CHECK(scaled.labels()[0] == 1.0);
}

TEST_CASE("extract_skeleton keeps everything when t covers the tree") {
    // Marks at all leaves, t >= height: nothing removed, no labels.
    const Permutation nu = Permutation::parse("13 12 5 3 4 2 6 11 9 10 1 7 8");
    const PackedTree p = pack(canonical_tree(nu));
    auto leaves = p.tree.leaves_in_order();
    std::vector<int> marks(leaves.begin(), leaves.end());
    SkeletonView view = extract_skeleton(p.tree, marks, 64);
    CHECK(view.shape.size() == p.tree.size());
    CHECK(view.label_counts.empty());
    SkeletonView tmp;
    tmp.shape = p.tree;
    CHECK(view.shape_text() == tmp.shape_text());
}

TEST_CASE("extract_skeleton with two marks and a middle segment") {
    // Two marks in disjoint branches hanging far below a branching vertex.
    PlaneTree t;
    const int root = t.add_root();
    int a = t.add_child(root);  // path down to the branch point
    a = t.add_child(a);
    a = t.add_child(a);
    const int fork = a;
    int left = t.add_child(fork);
    left = t.add_child(left);
    left = t.add_child(left);
    left = t.add_child(left);
    int right = t.add_child(fork);
    right = t.add_child(right);
    right = t.add_child(right);
    right = t.add_child(right);

    SkeletonView view = extract_skeleton(t, {left, right}, 0);
    // Three contracted segments: root->fork (2 deleted), fork->each mark
    // (3 deleted each).
    REQUIRE(view.label_counts.size() == 3);
    CHECK(view.label_sum() == 8.0);
    CHECK(view.generic);  // 4 distinct essentials, all distances 2t+1 = 1.

    // t = 1: every contracted distance is still exactly 2t+1 = 3.
    SkeletonView closer = extract_skeleton(t, {left, right}, 1);
    CHECK(closer.generic);
    REQUIRE(closer.label_counts.size() == 2);  // root->fork no longer contracts
    CHECK(closer.label_sum() == 2.0);

    // t = 2: the root->fork distance (3) falls short of 2t+1 = 5.
    SkeletonView wide = extract_skeleton(t, {left, right}, 2);
    CHECK_FALSE(wide.generic);
    CHECK(wide.label_counts.empty());
}

TEST_CASE("skeleton re-expansion is lossless") {
    // At s = 1 the labels count deleted vertices exactly: expanding each
    // contracted edge back by its count and re-attaching the kept branches
    // recovers the vertex count of R^[t].
    Rng rng(31);
    OffspringModel model = offspring_model(separable());
    PackedTreeSampler sampler(separable(), model);
    for (int rep = 0; rep < 40; ++rep) {
        PackedTree p = sampler.sample(40, rng);
        auto leaves = p.tree.leaves_in_order();
        std::vector<int> marks{leaves[rng.uniform_index(leaves.size())],
                               leaves[rng.uniform_index(leaves.size())]};
        const int t = 1;
        SkeletonView view = extract_skeleton(p.tree, marks, t);

        // Count the vertices of R^[t] directly from the definition.
        const int n = p.tree.size();
        std::vector<char> in_r(n, 0), essential(n, 0);
        for (int m : marks) {
            essential[m] = 1;
            for (int u = m; u != PlaneTree::npos; u = p.tree.parent(u)) in_r[u] = 1;
        }
        essential[p.tree.root()] = 1;
        essential[p.tree.common_ancestor(marks[0], marks[1])] = 1;
        // distance to essentials within R
        std::vector<int> dist(n, -1);
        std::vector<int> queue;
        for (int v = 0; v < n; ++v)
            if (essential[v]) {
                dist[v] = 0;
                queue.push_back(v);
            }
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const int v = queue[qi];
            auto relax = [&](int u) {
                if (u != PlaneTree::npos && in_r[u] && dist[u] < 0) {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            };
            relax(p.tree.parent(v));
            for (int c : p.tree.children(v)) relax(c);
        }
        long long expected = 0;
        auto count_branch = [&](auto&& self, int v) -> long long {
            long long acc = 1;
            for (int c : p.tree.children(v)) acc += self(self, c);
            return acc;
        };
        for (int v = 0; v < n; ++v) {
            if (!in_r[v]) continue;
            ++expected;
            if (dist[v] <= t)
                for (int c : p.tree.children(v))
                    if (!in_r[c]) expected += count_branch(count_branch, c);
        }
        long long got = view.shape.size();
        for (long long c : view.label_counts) got += c;
        CHECK(got == expected);
    }
}

TEST_CASE("reduced_tree") {
    PlaneTree path = path_tree(3);
    ReducedTree single = reduced_tree(path, {3});
    CHECK(single.tree.size() == 2);  // root with outdegree 1 kept, leaf = mark
    CHECK(single.tree.outdegree(single.tree.root()) == 1);

    // Two marks in disjoint branches: proper 2-tree shape.
    PlaneTree t;
    const int root = t.add_root();
    const int mid = t.add_child(root);
    const int fork = t.add_child(mid);
    const int l1 = t.add_child(fork);
    const int l2 = t.add_child(fork);
    ReducedTree two = reduced_tree(t, {l1, l2});
    CHECK(two.tree.size() == 4);
    const int top = two.tree.first_child(two.tree.root());
    CHECK(two.tree.outdegree(two.tree.root()) == 1);
    CHECK(two.tree.outdegree(top) == 2);
    CHECK(two.mark_vertices.size() == 2);
}

TEST_CASE("restrict_rooted") {
    const RootedPermutation r(Permutation::parse("1532467"), 3);
    CHECK(restrict_rooted(r, 10) == r);
    const RootedPermutation r1 = restrict_rooted(r, 1);
    CHECK(r1.perm == Permutation::parse("321"));
    CHECK(r1.root == 2);

    const RootedPermutation s(Permutation::parse("87532461"), 4);
    const RootedPermutation s2 = restrict_rooted(s, 2);
    CHECK(s2.perm == Permutation::parse("54213"));
    CHECK(s2.root == 3);

    // Idempotence: r_h о r_h = r_h.
    Rng rng(37);
    const auto pool = oracle::all_permutations(6);
    for (int rep = 0; rep < 100; ++rep) {
        const Permutation& nu = pool[rng.uniform_index(pool.size())];
        const int root = 1 + static_cast<int>(rng.uniform_index(6));
        const int h = static_cast<int>(rng.uniform_index(4));
        const RootedPermutation base(nu, root);
        CHECK(restrict_rooted(restrict_rooted(base, h), h) == restrict_rooted(base, h));
    }
}

TEST_CASE("perm_local_distance") {
    const RootedPermutation a(Permutation::parse("12345"), 3);
    CHECK(perm_local_distance(a, a) == 0.0);

    // Same singleton at r_0, different already at r_1: distance 1/2.
    const RootedPermutation one(Permutation::identity(1), 1);
    const RootedPermutation pair(Permutation::parse("12"), 1);
    CHECK(perm_local_distance(one, pair) == 0.5);

    // Valid inputs always agree at r_0.
    Rng rng(41);
    const auto pool = oracle::all_permutations(5);
    std::vector<RootedPermutation> xs;
    for (const auto& nu : pool)
        for (int root = 1; root <= 5; root += 2) xs.emplace_back(nu, root);
    for (int rep = 0; rep < 300; ++rep) {
        const auto& x = xs[rng.uniform_index(xs.size())];
        const auto& y = xs[rng.uniform_index(xs.size())];
        const auto& z = xs[rng.uniform_index(xs.size())];
        const double dxy = perm_local_distance(x, y);
        CHECK(dxy <= 0.5);
        CHECK(dxy == perm_local_distance(y, x));
        // Ultrametric inequality.
        CHECK(perm_local_distance(x, z) <=
              std::max(dxy, perm_local_distance(y, z)) + 1e-15);
    }
}

TEST_CASE("tree_local_distance") {
    SamplerConfig cfg;
    OffspringModel model = offspring_model(class_2413_3142());
    Rng rng(43);

    PointedPackedTree a = sample_limit_pointed_tree(model, class_2413_3142(), 6, cfg, rng);
    CHECK(tree_local_distance(a, a) == 0.0);

    // Fringe nesting: f_g(f_h(t)) = f_g(t) for g <= h.
    for (int rep = 0; rep < 10; ++rep) {
        PointedPackedTree t = sample_limit_pointed_tree(model, class_2413_3142(), 8, cfg, rng);
        const int h = 2 + static_cast<int>(rng.uniform_index(5));
        const int g = static_cast<int>(rng.uniform_index(h + 1));
        PointedPackedTree fh = pointed_fringe(t, h);
        CHECK(detail::pointed_key(pointed_fringe(fh, g)) ==
              detail::pointed_key(pointed_fringe(t, g)));
    }

    // Agreement exactly up to the common fringe.
    PointedPackedTree b = a;
    PointedPackedTree c = sample_limit_pointed_tree(model, class_2413_3142(), 6, cfg, rng);
    const double d = tree_local_distance(b, c);
    CHECK(d <= 0.5);
    if (d > 0) {
        const int agree = static_cast<int>(-std::log2(d)) - 1;
        CHECK(detail::pointed_key(pointed_fringe(b, agree)) ==
              detail::pointed_key(pointed_fringe(c, agree)));
        CHECK(detail::pointed_key(pointed_fringe(b, agree + 1)) !=
              detail::pointed_key(pointed_fringe(c, agree + 1)));
    }

    // Ultrametric on random triples.
    std::vector<PointedPackedTree> xs;
    for (int i = 0; i < 12; ++i)
        xs.push_back(sample_limit_pointed_tree(model, class_2413_3142(), 4, cfg, rng));
    for (int rep = 0; rep < 60; ++rep) {
        const auto& x = xs[rng.uniform_index(xs.size())];
        const auto& y = xs[rng.uniform_index(xs.size())];
        const auto& z = xs[rng.uniform_index(xs.size())];
        CHECK(tree_local_distance(x, z) <=
              std::max(tree_local_distance(x, y), tree_local_distance(y, z)) + 1e-15);
    }
}

TEST_CASE("realize on finite trees") {
    const PackedTree leaf = forest_encode(Permutation::identity(1), separable()).trees[0];
    const RootedPermutation r = realize_finite(leaf, 1);
    CHECK(r.perm == Permutation::identity(1));
    CHECK(r.root == 1);

    const Permutation nu = Permutation::parse("13 12 5 3 4 2 6 11 9 10 1 7 8");
    const PackedTree p = pack(canonical_tree(nu));
    const RootedPermutation full = realize_finite(p, 4);
    CHECK(full.perm == nu);
    std::vector<int> window{4, 6, 12};
    CHECK(pattern_at(full.perm, window) == Permutation::parse("213"));
}

TEST_CASE("realize certified windows from the local limit") {
    SamplerConfig cfg;
    OffspringModel model = offspring_model(class_2413_3142());
    Rng rng(47);

    for (int rep = 0; rep < 60; ++rep) {
        PointedPackedTree pt =
            sample_limit_pointed_tree(model, class_2413_3142(), 24, cfg, rng);
        try {
            const RootedPermutation w2 = realize_rooted_permutation(pt, 2);
            CHECK(w2.perm.size() == 5);
            CHECK(w2.root == 3);
            // Restriction compatibility: the w = 1 window is r_1 of the
            // w = 2 window.
            const RootedPermutation w1 = realize_rooted_permutation(pt, 1);
            CHECK(restrict_rooted(w2, 1) == w1);
        } catch (const insufficient_realization&) {
            // Rare at this depth; acceptable.
        }
    }
}

TEST_CASE("signed realization for the separable class") {
    // Plus and minus signs give complement-related windows on a 3-leaf tree.
    PlaneTree t;
    const int root = t.add_root();
    const int inner = t.add_child(root);
    t.add_child(inner);
    t.add_child(inner);
    t.add_child(root);
    // leaves: two under inner, one under root

    auto leaves = t.leaves_in_order();
    REQUIRE(leaves.size() == 3);
    const RootedPermutation plus = realize_signed_finite(t, leaves[0], +1);
    const RootedPermutation minus = realize_signed_finite(t, leaves[0], -1);
    CHECK(plus.root == 1);
    CHECK(minus.root == 1);
    // Complement: values are flipped.
    const int n = plus.perm.size();
    for (int i = 1; i <= n; ++i) CHECK(plus.perm(i) == n + 1 - minus.perm(i));

    // The parent of the pointed leaf carries the sign: its sibling leaf
    // compares as a non-inversion under +1.
    CHECK(plus.perm(1) < plus.perm(2));
    CHECK(minus.perm(1) > minus.perm(2));

    // Window realization agrees with the finite evaluation on the fringe.
    SamplerConfig cfg;
    Rng rng(53);
    OffspringModel model = offspring_model(separable());
    for (int rep = 0; rep < 40; ++rep) {
        PointedPackedTree pt = sample_limit_pointed_tree(model, separable(), 20, cfg, rng);
        const int sign = rng.bernoulli(0.5) ? 1 : -1;
        try {
            const RootedPermutation w = realize_signed_window(pt, sign, 2);
            CHECK(w.perm.size() == 5);
            // Validate against evaluating the decorated fringe directly.
            auto anchor_order = [&]() {
                // find the anchor the same way: first spine ancestor with
                // two leaves on both sides
                auto leaves2 = pt.packed.tree.leaves_in_order();
                int pos = -1;
                for (std::size_t i = 0; i < leaves2.size(); ++i)
                    if (leaves2[i] == pt.pointed_leaf) pos = static_cast<int>(i);
                for (int s = 1; s <= pt.spine_depth(); ++s) {
                    int lo = pt.spine[s], hi = pt.spine[s];
                    while (!pt.packed.tree.is_leaf(lo)) lo = pt.packed.tree.first_child(lo);
                    while (!pt.packed.tree.is_leaf(hi)) hi = pt.packed.tree.children(hi).back();
                    int lo_pos = -1, hi_pos = -1;
                    for (std::size_t i = 0; i < leaves2.size(); ++i) {
                        if (leaves2[i] == lo) lo_pos = static_cast<int>(i);
                        if (leaves2[i] == hi) hi_pos = static_cast<int>(i);
                    }
                    if (pos - lo_pos >= 2 && hi_pos - pos >= 2) {
                        int mapped = -1;
                        PackedTree fringe =
                            fringe_packed(pt.packed, pt.spine[s], pt.pointed_leaf, &mapped);
                        auto fl = fringe.tree.leaves_in_order();
                        int fpos = -1;
                        for (std::size_t i = 0; i < fl.size(); ++i)
                            if (fl[i] == mapped) fpos = static_cast<int>(i);
                        const RootedPermutation whole =
                            realize_signed_finite(fringe.tree, mapped, sign);
                        (void)fpos;
                        return restrict_rooted(whole, 2);
                    }
                }
                throw insufficient_realization("no anchor");
            };
            CHECK(w == anchor_order());
        } catch (const insufficient_realization&) {
        }
    }
}
