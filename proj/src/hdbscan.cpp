#include "responsivity/clusterlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace responsivity::clusterlab::detail {

namespace {

struct Merge {
    int left;
    int right;
    double distance;
    int size;
};

struct CondensedEdge {
    int parent;
    int child; // < n: a point, otherwise a cluster
    double lambda;
    int size;
};

class DisjointSet {
public:
    explicit DisjointSet(int n) : parent_(static_cast<std::size_t>(n)) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x) {
        while (parent_[static_cast<std::size_t>(x)] != x) {
            parent_[static_cast<std::size_t>(x)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
            x = parent_[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void join(int a, int b, int into) {
        parent_[static_cast<std::size_t>(a)] = into;
        parent_[static_cast<std::size_t>(b)] = into;
    }
    void grow(int n) {
        const auto old = parent_.size();
        parent_.resize(old + static_cast<std::size_t>(n));
        std::iota(parent_.begin() + static_cast<std::ptrdiff_t>(old), parent_.end(), static_cast<int>(old));
    }

private:
    std::vector<int> parent_;
};

// Mutual-reachability MST via Prim on the dense graph, then single linkage.
std::vector<Merge> single_linkage(const Eigen::MatrixXd& pts, int min_samples) {
    const int n = static_cast<int>(pts.rows());
    Eigen::MatrixXd dist(n, n);
    for (int i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            dist(i, j) = dist(j, i) = (pts.row(i) - pts.row(j)).norm();
        }
    }
    // k-th smallest distance with the point itself counted
    const int k = std::clamp(min_samples, 1, n);
    std::vector<double> core(static_cast<std::size_t>(n));
    std::vector<double> buf(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) buf[static_cast<std::size_t>(j)] = dist(i, j);
        std::nth_element(buf.begin(), buf.begin() + (k - 1), buf.end());
        core[static_cast<std::size_t>(i)] = buf[static_cast<std::size_t>(k - 1)];
    }
    auto mrd = [&](int i, int j) {
        return std::max({dist(i, j), core[static_cast<std::size_t>(i)], core[static_cast<std::size_t>(j)]});
    };

    struct Edge {
        int a;
        int b;
        double w;
    };
    std::vector<Edge> edges;
    std::vector<bool> in_tree(static_cast<std::size_t>(n), false);
    std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::vector<int> from(static_cast<std::size_t>(n), -1);
    int current = 0;
    in_tree[0] = true;
    for (int step = 1; step < n; ++step) {
        int next = -1;
        for (int j = 0; j < n; ++j) {
            if (in_tree[static_cast<std::size_t>(j)]) continue;
            const double w = mrd(current, j);
            if (w < best[static_cast<std::size_t>(j)]) {
                best[static_cast<std::size_t>(j)] = w;
                from[static_cast<std::size_t>(j)] = current;
            }
            if (next < 0 || best[static_cast<std::size_t>(j)] < best[static_cast<std::size_t>(next)]) next = j;
        }
        in_tree[static_cast<std::size_t>(next)] = true;
        edges.push_back({from[static_cast<std::size_t>(next)], next, best[static_cast<std::size_t>(next)]});
        current = next;
    }
    std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });

    std::vector<Merge> merges;
    DisjointSet sets(n);
    sets.grow(n - 1);
    std::vector<int> size(static_cast<std::size_t>(2 * n - 1), 1);
    int next_node = n;
    for (const Edge& e : edges) {
        const int ra = sets.find(e.a);
        const int rb = sets.find(e.b);
        const int s = size[static_cast<std::size_t>(ra)] + size[static_cast<std::size_t>(rb)];
        merges.push_back({ra, rb, e.w, s});
        size[static_cast<std::size_t>(next_node)] = s;
        sets.join(ra, rb, next_node);
        ++next_node;
    }
    return merges;
}

std::vector<CondensedEdge> condense(const std::vector<Merge>& merges, int n, int min_cluster_size) {
    const int root = 2 * n - 2;
    auto node_size = [&](int node) { return node < n ? 1 : merges[static_cast<std::size_t>(node - n)].size; };

    // Zero distances would give infinite lambdas; cap them above every real one.
    double max_w = 0.0;
    double min_pos = std::numeric_limits<double>::infinity();
    for (const Merge& m : merges) {
        max_w = std::max(max_w, m.distance);
        if (m.distance > 0) min_pos = std::min(min_pos, m.distance);
    }
    const double floor_w = std::isfinite(min_pos) ? min_pos * 1e-6 : 1.0;
    auto lambda_of = [&](double d) { return 1.0 / std::max(d, floor_w); };

    std::vector<CondensedEdge> out;
    std::vector<int> relabel(static_cast<std::size_t>(2 * n - 1), -1);
    relabel[static_cast<std::size_t>(root)] = n;
    int next_label = n + 1;

    auto emit_leaves = [&](int node, int parent_label, double lambda) {
        std::vector<int> stack{node};
        while (!stack.empty()) {
            const int x = stack.back();
            stack.pop_back();
            if (x < n) {
                out.push_back({parent_label, x, lambda, 1});
            } else {
                const Merge& m = merges[static_cast<std::size_t>(x - n)];
                stack.push_back(m.right);
                stack.push_back(m.left);
            }
        }
    };

    std::vector<int> stack{root};
    while (!stack.empty()) {
        const int node = stack.back();
        stack.pop_back();
        const Merge& m = merges[static_cast<std::size_t>(node - n)];
        const int label = relabel[static_cast<std::size_t>(node)];
        const double lambda = lambda_of(m.distance);
        const int ls = node_size(m.left);
        const int rs = node_size(m.right);
        const bool big_left = ls >= min_cluster_size;
        const bool big_right = rs >= min_cluster_size;
        if (big_left && big_right) {
            for (int child : {m.left, m.right}) {
                relabel[static_cast<std::size_t>(child)] = next_label++;
                out.push_back({label, relabel[static_cast<std::size_t>(child)], lambda, node_size(child)});
                stack.push_back(child);
            }
        } else if (!big_left && !big_right) {
            emit_leaves(m.left, label, lambda);
            emit_leaves(m.right, label, lambda);
        } else {
            const int keep = big_left ? m.left : m.right;
            const int drop = big_left ? m.right : m.left;
            emit_leaves(drop, label, lambda);
            if (keep < n) {
                out.push_back({label, keep, lambda, 1});
            } else {
                relabel[static_cast<std::size_t>(keep)] = label;
                stack.push_back(keep);
            }
        }
    }
    return out;
}

} // namespace

std::vector<int> hdbscan(const Eigen::MatrixXd& points, int min_cluster_size, int min_samples) {
    const int n = static_cast<int>(points.rows());
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    if (n == 0 || n < min_cluster_size) return labels;
    if (n == 1) {
        labels[0] = 0;
        return labels;
    }

    const auto merges = single_linkage(points, min_samples);
    const auto tree = condense(merges, n, min_cluster_size);

    // Cluster labels run n .. max; birth lambda of the root is 0.
    int max_label = n;
    for (const auto& e : tree) max_label = std::max({max_label, e.parent, e.child});
    const int count = max_label - n + 1;
    std::vector<double> birth(static_cast<std::size_t>(count), 0.0);
    std::vector<int> parent_of(static_cast<std::size_t>(count), -1);
    std::vector<std::vector<int>> children(static_cast<std::size_t>(count));
    for (const auto& e : tree) {
        if (e.child >= n) {
            birth[static_cast<std::size_t>(e.child - n)] = e.lambda;
            parent_of[static_cast<std::size_t>(e.child - n)] = e.parent - n;
            children[static_cast<std::size_t>(e.parent - n)].push_back(e.child - n);
        }
    }
    std::vector<double> stability(static_cast<std::size_t>(count), 0.0);
    for (const auto& e : tree) {
        const auto p = static_cast<std::size_t>(e.parent - n);
        stability[p] += (e.lambda - birth[p]) * e.size;
    }

    // Excess of mass; children always have larger labels than their parent.
    std::vector<bool> selected(static_cast<std::size_t>(count), false);
    std::vector<double> best(stability);
    for (int c = count - 1; c >= 1; --c) {
        const auto cu = static_cast<std::size_t>(c);
        if (children[cu].empty()) {
            selected[cu] = true;
            continue;
        }
        double sub = 0.0;
        for (int ch : children[cu]) sub += best[static_cast<std::size_t>(ch)];
        if (sub > stability[cu]) {
            best[cu] = sub;
        } else {
            selected[cu] = true;
            std::vector<int> stack(children[cu]);
            while (!stack.empty()) {
                const int x = stack.back();
                stack.pop_back();
                selected[static_cast<std::size_t>(x)] = false;
                for (int ch : children[static_cast<std::size_t>(x)]) stack.push_back(ch);
            }
        }
    }
    // No split anywhere: the whole set is one cluster.
    if (children[0].empty()) {
        std::fill(labels.begin(), labels.end(), 0);
        return labels;
    }

    std::vector<int> final_id(static_cast<std::size_t>(count), -1);
    int next = 0;
    for (int c = 1; c < count; ++c) {
        if (selected[static_cast<std::size_t>(c)]) final_id[static_cast<std::size_t>(c)] = next++;
    }
    for (const auto& e : tree) {
        if (e.child >= n) continue;
        int c = e.parent - n;
        while (c > 0 && !selected[static_cast<std::size_t>(c)]) c = parent_of[static_cast<std::size_t>(c)];
        if (c > 0) labels[static_cast<std::size_t>(e.child)] = final_id[static_cast<std::size_t>(c)];
    }
    return labels;
}

} // namespace responsivity::clusterlab::detail
