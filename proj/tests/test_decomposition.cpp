#include <catch2/catch_amalgamated.hpp>

#include "permclass/decomposition.hpp"
#include "permclass/rng.hpp"

#include "oracles.hpp"

using namespace permclass;

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
}  // namespace

TEST_CASE("substitution_decompose") {
    auto d = substitution_decompose(Permutation::parse("231"));
    CHECK(d.kind == DecKind::minus);
    REQUIRE(d.parts.size() == 2);
    CHECK(d.parts[0] == Permutation::parse("12"));
    CHECK(d.parts[1] == Permutation::parse("1"));

    d = substitution_decompose(Permutation::identity(5));
    CHECK(d.kind == DecKind::plus);
    CHECK(d.parts.size() == 5);

    d = substitution_decompose(Permutation::parse("2413"));
    CHECK(d.kind == DecKind::simple);
    CHECK(*d.alpha == Permutation::parse("2413"));
    CHECK(d.parts.size() == 4);

    CHECK_THROWS_AS(substitution_decompose(Permutation::identity(1)), invalid_input);

    // Reconstruction and part-indecomposability, exhaustively to n = 7.
    for (int n = 2; n <= 7; ++n)
        for (const auto& nu : oracle::all_permutations(n)) {
            auto dec = substitution_decompose(nu);
            Permutation theta =
                dec.kind == DecKind::plus
                    ? Permutation::identity(static_cast<int>(dec.parts.size()))
                    : (dec.kind == DecKind::minus
                           ? Permutation::decreasing(static_cast<int>(dec.parts.size()))
                           : *dec.alpha);
            CHECK(substitute(theta, dec.parts) == nu);
            if (dec.kind == DecKind::simple) {
                CHECK(is_simple(theta));
                CHECK(theta.size() >= 4);
            } else {
                CHECK(dec.parts.size() >= 2);
            }
        }
}

TEST_CASE("canonical_tree and eval_tree") {
    CHECK(to_text(canonical_tree(Permutation::identity(1))) == ".");
    CHECK(to_text(canonical_tree(Permutation::parse("231"))) == "(- (+ . .) .)");
    CHECK(eval_tree(parse_canonical_tree("(- (+ . .) .)")) == Permutation::parse("231"));
    CHECK(eval_tree(parse_canonical_tree(".")) == Permutation::identity(1));

    // Non-canonical trees evaluate too; witness of non-injectivity.
    CHECK(eval_tree(parse_canonical_tree("(+ (+ . .) .)")) == Permutation::identity(3));
    CHECK(eval_tree(parse_canonical_tree("(+ . . .)")) == Permutation::identity(3));

    for (int n = 1; n <= 8; ++n)
        for (const auto& nu : oracle::all_permutations(n)) {
            CanonicalTree t = canonical_tree(nu);
            CHECK(is_canonical(t));
            CHECK(t.size() == n);
            CHECK(eval_tree(t) == nu);
        }
}

TEST_CASE("tree serialization round trip") {
    Rng rng(17);
    const auto pool = oracle::all_permutations(6);
    for (int rep = 0; rep < 200; ++rep) {
        const Permutation& nu = pool[rng.uniform_index(pool.size())];
        const CanonicalTree t = canonical_tree(nu);
        const std::string text = to_text(t);
        CHECK(eval_tree(parse_canonical_tree(text)) == nu);
        CHECK(to_text(parse_canonical_tree(text)) == text);
    }
}

TEST_CASE("pack and unpack") {
    // Separable tree: same shape, all stars.
    const CanonicalTree t231 = canonical_tree(Permutation::parse("231"));
    const PackedTree p231 = pack(t231);
    CHECK(to_text(p231) == "(* (* . .) .)");
    CHECK(eval_tree(unpack(p231)) == Permutation::parse("231"));

    CHECK_THROWS_AS(pack(canonical_tree(Permutation::identity(3))), invalid_input);

    // The worked example: a 2413 vertex merged with its two plus-children.
    const Permutation nu = Permutation::parse("13 12 5 3 4 2 6 11 9 10 1 7 8");
    const CanonicalTree t = canonical_tree(nu);
    const PackedTree p = pack(t);
    CHECK(is_packed(p));
    int gadgets = 0;
    for (const auto& d : p.dec)
        if (d.kind == DecKind::gadget) {
            ++gadgets;
            CHECK(d.gadget->root == Permutation::parse("2413"));
            CHECK(d.gadget->slots == std::vector<int>{2, 1, 1, 2});
            CHECK(d.gadget->size() == 6);
        }
    CHECK(gadgets == 1);
    CHECK(eval_tree(unpack(p)) == nu);

    // Round trip on every canonical tree of size <= 8 with a non-plus root.
    for (int n = 1; n <= 8; ++n)
        for (const auto& mu : oracle::all_permutations(n)) {
            const CanonicalTree ct = canonical_tree(mu);
            if (!ct.tree.is_leaf(ct.tree.root()) &&
                ct.dec[ct.tree.root()].kind == DecKind::plus)
                continue;
            const PackedTree pt = pack(ct);
            CHECK(is_packed(pt));
            CHECK(pt.size() == n);
            const CanonicalTree back = unpack(pt);
            CHECK(to_text(back) == to_text(ct));
        }
}

TEST_CASE("class membership") {
    CHECK_FALSE(class_membership(Permutation::parse("2413"), separable()));
    CHECK(class_membership(Permutation::parse("2413"), class_2413_3142()));
    CHECK_FALSE(class_membership(Permutation::parse("24153"), class_2413_3142()));
    CHECK(class_membership(Permutation::identity(9), separable()));
    CHECK(class_membership(Permutation::decreasing(9), class_2413_3142()));

    // Equivalent to avoiding {2413, 3142} for the separable class.
    for (int n = 1; n <= 7; ++n)
        for (const auto& nu : oracle::all_permutations(n))
            CHECK(class_membership(nu, separable()) ==
                  oracle::avoids(nu, {Permutation::parse("2413"), Permutation::parse("3142")}));
}

TEST_CASE("forest bijection") {
    const DecoratedForest id_forest = forest_encode(Permutation::identity(5), separable());
    CHECK(id_forest.trees.size() == 5);
    for (const auto& tr : id_forest.trees) CHECK(tr.size() == 1);

    CHECK(forest_encode(Permutation::parse("231"), separable()).trees.size() == 1);
    CHECK_THROWS_AS(forest_encode(Permutation::parse("2413"), separable()), membership_error);

    // decode(encode(nu)) = nu for all class members of size <= 8, both classes;
    // encode is injective (distinct serializations).
    for (const ClassSpec* spec : {&separable(), &class_2413_3142()}) {
        for (int n = 1; n <= 8; ++n) {
            std::set<std::string> seen;
            for (const auto& nu : oracle::all_permutations(n)) {
                if (!class_membership(nu, *spec)) continue;
                const DecoratedForest f = forest_encode(nu, *spec);
                CHECK(forest_decode(f) == nu);
                CHECK(seen.insert(to_text(f)).second);
                CHECK(f.size() == n);
            }
        }
    }

    // Forest serialization parses back.
    const DecoratedForest f = forest_encode(Permutation::parse("1532467"), separable());
    CHECK(forest_decode(parse_forest(to_text(f))) == Permutation::parse("1532467"));
}

TEST_CASE("leaf order matches element order") {
    // The i-th leaf corresponds to the i-th element: two-leaf reads must
    // match the inversion structure of the permutation.
    Rng rng(23);
    const auto pool = oracle::all_permutations(7);
    for (int rep = 0; rep < 100; ++rep) {
        const Permutation& nu = pool[rng.uniform_index(pool.size())];
        if (!oracle::plus_indecomposable(nu)) continue;
        const PackedTree p = pack(canonical_tree(nu));
        for (int i = 1; i <= 6; ++i)
            for (int j = i + 1; j <= 7; ++j) {
                const Permutation pat = read_pattern(p, {i, j});
                CHECK((pat == Permutation::parse("21")) == (nu(i) > nu(j)));
            }
    }
}

TEST_CASE("read_pattern") {
    // The worked example: leaves 4, 6, 12 carry values 3, 2, 7.
    const Permutation nu = Permutation::parse("13 12 5 3 4 2 6 11 9 10 1 7 8");
    const PackedTree p = pack(canonical_tree(nu));
    CHECK(read_pattern(p, {4, 6, 12}) == Permutation::parse("213"));
    CHECK(read_pattern(p, {4, 6, 12}) == pattern_at(nu, {4, 6, 12}));

    // Leaves 12 and 13 carry values 7 and 8, one plus slot of the gadget:
    // never an inversion.
    CHECK(read_pattern(p, {12, 13}) == Permutation::parse("12"));

    // Oracle equivalence on random (nu, I) pairs over class members.
    Rng rng(29);
    for (const ClassSpec* spec : {&separable(), &class_2413_3142()}) {
        std::vector<Permutation> simples;
        for (const auto& [k, set] : spec->simples())
            simples.insert(simples.end(), set.begin(), set.end());
        auto members = oracle::closure_members(simples, 8);
        for (int n = 4; n <= 8; ++n) {
            std::vector<Permutation> pool(members[n].begin(), members[n].end());
            for (int rep = 0; rep < 300; ++rep) {
                const Permutation& mu = pool[rng.uniform_index(pool.size())];
                if (!oracle::plus_indecomposable(mu)) continue;
                const PackedTree pt = pack(canonical_tree(mu));
                const int k = 1 + static_cast<int>(rng.uniform_index(n));
                auto subset = rng.uniform_subset(n, k);
                std::vector<int> idx;
                for (auto s : subset) idx.push_back(static_cast<int>(s) + 1);
                CHECK(read_pattern(pt, idx) == pattern_at(mu, idx));
            }
        }
    }
}

TEST_CASE("read_pattern is fringe-local") {
    // Reading inside any gadget-rooted fringe containing the leaves gives
    // the same pattern as reading in the full tree.
    const Permutation nu = Permutation::parse("13 12 5 3 4 2 6 11 9 10 1 7 8");
    const PackedTree p = pack(canonical_tree(nu));
    int gadget_vertex = -1;
    for (int v = 0; v < p.tree.size(); ++v)
        if (p.dec[v].kind == DecKind::gadget) gadget_vertex = v;
    REQUIRE(gadget_vertex >= 0);

    auto leaves = p.tree.leaves_in_order();
    std::vector<int> below;  // global leaf numbers under the gadget vertex
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        int u = leaves[i];
        while (u != PlaneTree::npos && u != gadget_vertex) u = p.tree.parent(u);
        if (u == gadget_vertex) below.push_back(static_cast<int>(i) + 1);
    }
    REQUIRE(below.size() >= 3);

    PackedTree fringe;
    auto copy = [&](auto&& self, int src, int parent) -> void {
        const int v = parent == PlaneTree::npos ? fringe.tree.add_root()
                                                : fringe.tree.add_child(parent);
        fringe.dec.push_back(p.dec[src]);
        for (int c : p.tree.children(src)) self(self, c, v);
    };
    copy(copy, gadget_vertex, PlaneTree::npos);

    const std::vector<int> global{below[0], below[1], below[2]};
    std::vector<int> local;
    for (int g : global) local.push_back(g - below[0] + 1);
    CHECK(read_pattern(p, global) == read_pattern(fringe, local));
}
