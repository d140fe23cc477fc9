#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace permclass {

/// Rooted plane tree stored as parallel arrays (parent, first child, next
/// sibling, last child). Vertex ids are creation order; the root is vertex 0
/// once created. Children are appended left to right.
class PlaneTree {
public:
    static constexpr int npos = -1;

    PlaneTree() = default;

    int add_root() {
        if (!parent_.empty()) throw std::logic_error("add_root: tree already has a root");
        return add_vertex(npos);
    }

    int add_child(int parent) {
        if (parent < 0 || parent >= size()) throw std::logic_error("add_child: bad parent");
        return add_vertex(parent);
    }

    int size() const { return static_cast<int>(parent_.size()); }
    int root() const { return 0; }
    int parent(int v) const { return parent_[v]; }
    int first_child(int v) const { return first_child_[v]; }
    int next_sibling(int v) const { return next_sibling_[v]; }
    bool is_leaf(int v) const { return first_child_[v] == npos; }

    int outdegree(int v) const {
        int d = 0;
        for (int c = first_child_[v]; c != npos; c = next_sibling_[c]) ++d;
        return d;
    }

    std::vector<int> children(int v) const {
        std::vector<int> out;
        for (int c = first_child_[v]; c != npos; c = next_sibling_[c]) out.push_back(c);
        return out;
    }

    /// 0-based rank of v among the children of its parent.
    int child_rank(int v) const {
        int r = 0;
        for (int c = first_child_[parent_[v]]; c != v; c = next_sibling_[c]) ++r;
        return r;
    }

    int leaf_count() const {
        int n = 0;
        for (int v = 0; v < size(); ++v) n += is_leaf(v);
        return n;
    }

    int depth(int v) const {
        int d = 0;
        for (int u = v; parent_[u] != npos; u = parent_[u]) ++d;
        return d;
    }

    /// Leaves in depth-first (left-to-right) order; position i holds the
    /// vertex id of leaf number i+1.
    std::vector<int> leaves_in_order() const {
        std::vector<int> out;
        out.reserve(size());
        if (size() == 0) return out;
        std::vector<int> stack{root()};
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            if (is_leaf(v)) {
                out.push_back(v);
                continue;
            }
            auto ch = children(v);
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
        }
        return out;
    }

    /// Vertices in depth-first preorder.
    std::vector<int> preorder() const {
        std::vector<int> out;
        out.reserve(size());
        if (size() == 0) return out;
        std::vector<int> stack{root()};
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            out.push_back(v);
            auto ch = children(v);
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
        }
        return out;
    }

    /// Closest common ancestor (depths computed on the fly).
    int common_ancestor(int u, int v) const {
        int du = depth(u), dv = depth(v);
        while (du > dv) { u = parent_[u]; --du; }
        while (dv > du) { v = parent_[v]; --dv; }
        while (u != v) { u = parent_[u]; v = parent_[v]; }
        return u;
    }

    /// Child of `ancestor` on the path to descendant v (v must be a strict
    /// descendant of ancestor).
    int child_towards(int ancestor, int v) const {
        int prev = v;
        while (parent_[prev] != ancestor) prev = parent_[prev];
        return prev;
    }

private:
    int add_vertex(int parent) {
        const int id = size();
        parent_.push_back(parent);
        first_child_.push_back(npos);
        next_sibling_.push_back(npos);
        last_child_.push_back(npos);
        if (parent != npos) {
            if (last_child_[parent] == npos)
                first_child_[parent] = id;
            else
                next_sibling_[last_child_[parent]] = id;
            last_child_[parent] = id;
        }
        return id;
    }

    std::vector<int> parent_, first_child_, next_sibling_, last_child_;
};

}  // namespace permclass
