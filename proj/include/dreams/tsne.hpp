#ifndef DREAMS_TSNE_HPP
#define DREAMS_TSNE_HPP

#include <array>
#include <cmath>
#include <vector>

#include "dreams/affinity.hpp"
#include "dreams/core.hpp"
#include "dreams/parallel.hpp"

namespace dreams {

/// Cauchy kernel (1 + d^2)^-1 on a squared distance.
template <typename Scalar>
inline Scalar cauchy(Scalar squared_distance) {
    return Scalar(1) / (Scalar(1) + squared_distance);
}

template <typename Scalar>
void check_affinity_shape(const SparseAffinity<Scalar>& P, Index n, const char* who) {
    if (P.size() != n)
        throw ShapeError(std::string(who) + ": affinity has " + std::to_string(P.size()) +
                         " points, embedding has " + std::to_string(n));
    if (n < 2)
        throw ShapeError(std::string(who) + ": need at least two points");
}

/// Normalization Z = sum over k != l of (1 + |y_k - y_l|^2)^-1, O(n^2).
template <typename Scalar>
Scalar cauchy_normalization(const Embedding<Scalar>& Y) {
    const Index n = Y.rows();
    Vector<Scalar> partial = Vector<Scalar>::Zero(n);
    parallel_for(0, n, [&](std::ptrdiff_t i) {
        Scalar s = 0;
        for (Index j = 0; j < n; ++j)
            if (j != i)
                s += cauchy((Y.row(i) - Y.row(j)).squaredNorm());
        partial(i) = s;
    });
    return partial.sum();
}

namespace detail {

// sum_ij P_ij log(P_ij / (qt_ij / Z)) with qt the unnormalized kernel; P scaled by `exaggeration`.
template <typename Scalar>
Scalar kl_given_normalization(const SparseAffinity<Scalar>& P, const Embedding<Scalar>& Y, Scalar Z,
                              Scalar exaggeration) {
    const Scalar logZ = std::log(Z);
    Scalar total = 0;
    for (Index i = 0; i < P.P.outerSize(); ++i) {
        for (typename Eigen::SparseMatrix<Scalar, Eigen::RowMajor>::InnerIterator it(P.P, i); it; ++it) {
            const Scalar p = exaggeration * it.value();
            const Scalar qt = cauchy((Y.row(i) - Y.row(it.col())).squaredNorm());
            total += p * (std::log(p) - std::log(qt) + logZ);
        }
    }
    return total;
}

} // namespace detail

/// KL(P || Q) with Q normalized over all ordered pairs. O(n^2).
template <typename Scalar>
Scalar kl_divergence(const SparseAffinity<Scalar>& P, const Embedding<Scalar>& Y) {
    check_affinity_shape(P, Y.rows(), "kl_divergence");
    return detail::kl_given_normalization(P, Y, cauchy_normalization(Y), Scalar(1));
}

/**
 * Exact gradient of KL(P || Q) in O(n^2):
 * 4 sum_j (e p_ij - q_ij) qt_ij (y_i - y_j), with qt the unnormalized kernel,
 * q = qt / Z and e the exaggeration applied to the attractive term.
 */
template <typename Scalar>
Embedding<Scalar> grad_exact(const SparseAffinity<Scalar>& P, const Embedding<Scalar>& Y,
                             Scalar exaggeration = 1, Scalar* normalization = nullptr) {
    const Index n = Y.rows();
    check_affinity_shape(P, n, "grad_exact");
    Embedding<Scalar> repulsion(n, 2);
    Vector<Scalar> partial(n);
    parallel_for(0, n, [&](std::ptrdiff_t i) {
        Scalar fx = 0, fy = 0, z = 0;
        for (Index j = 0; j < n; ++j) {
            if (j == i)
                continue;
            const Scalar dx = Y(i, 0) - Y(j, 0);
            const Scalar dy = Y(i, 1) - Y(j, 1);
            const Scalar q = cauchy(dx * dx + dy * dy);
            z += q;
            fx += q * q * dx;
            fy += q * q * dy;
        }
        repulsion(i, 0) = fx;
        repulsion(i, 1) = fy;
        partial(i) = z;
    });
    const Scalar Z = partial.sum();
    if (normalization)
        *normalization = Z;

    Embedding<Scalar> grad(n, 2);
    parallel_for(0, n, [&](std::ptrdiff_t i) {
        Scalar ax = 0, ay = 0;
        for (typename Eigen::SparseMatrix<Scalar, Eigen::RowMajor>::InnerIterator it(P.P, i); it; ++it) {
            const Index j = it.col();
            const Scalar dx = Y(i, 0) - Y(j, 0);
            const Scalar dy = Y(i, 1) - Y(j, 1);
            const Scalar w = it.value() * cauchy(dx * dx + dy * dy);
            ax += w * dx;
            ay += w * dy;
        }
        grad(i, 0) = 4 * (exaggeration * ax - repulsion(i, 0) / Z);
        grad(i, 1) = 4 * (exaggeration * ay - repulsion(i, 1) / Z);
    });
    return grad;
}

/**
 * Point-region quadtree over a 2-D embedding.
 *
 * Nodes are stored in a flat array; children of an internal node occupy four
 * consecutive slots. Subdivision stops at depth 50, where all remaining points
 * share one leaf.
 */
template <typename Scalar>
class QuadTree {
public:
    static constexpr int max_depth = 50;

    struct Node {
        Scalar center_x = 0, center_y = 0;
        Scalar half_width = 0;
        Scalar com_x = 0, com_y = 0;
        Index count = 0;
        Index first_child = -1; // -1 for leaves
        Index first_point = -1; // head of the leaf's point list
        int depth = 0;
        // Pre-order interval; a node is an ancestor of `other` iff other.order lies in [order, order_end).
        Index order = 0, order_end = 0;

        bool is_leaf() const { return first_child < 0; }
        Scalar width() const { return 2 * half_width; }
    };

    explicit QuadTree(const Embedding<Scalar>& Y) : next_(static_cast<std::size_t>(Y.rows()), -1) {
        const Index n = Y.rows();
        Node root;
        if (n > 0) {
            const Scalar min_x = Y.col(0).minCoeff(), max_x = Y.col(0).maxCoeff();
            const Scalar min_y = Y.col(1).minCoeff(), max_y = Y.col(1).maxCoeff();
            root.center_x = (min_x + max_x) / 2;
            root.center_y = (min_y + max_y) / 2;
            // Slightly enlarged so that points on the max edge stay strictly inside.
            root.half_width = std::max(max_x - min_x, max_y - min_y) / 2 * Scalar(1.0000001) + Scalar(1e-12);
        }
        nodes_.push_back(root);
        for (Index i = 0; i < n; ++i)
            insert(i, Y(i, 0), Y(i, 1));
        for (auto& node : nodes_) {
            if (node.count > 0) {
                node.com_x /= static_cast<Scalar>(node.count);
                node.com_y /= static_cast<Scalar>(node.count);
            }
        }
        leaf_of_.assign(static_cast<std::size_t>(n), 0);
        Index counter = 0;
        number(0, counter);
    }

    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_.front(); }

    /// Calls fn(point) for every point stored in a leaf.
    template <typename Fn>
    void for_each_point(const Node& leaf, Fn&& fn) const {
        for (Index p = leaf.first_point; p >= 0; p = next_[static_cast<std::size_t>(p)])
            fn(p);
    }

    /// True if `point` is stored in the subtree rooted at `node`.
    bool holds(const Node& node, Index point) const {
        const Index o = nodes_[static_cast<std::size_t>(leaf_of_[static_cast<std::size_t>(point)])].order;
        return o >= node.order && o < node.order_end;
    }

    /// Index of the leaf storing `point`.
    Index leaf_of(Index point) const { return leaf_of_[static_cast<std::size_t>(point)]; }

private:
    static int quadrant(const Node& node, Scalar x, Scalar y) {
        return (x >= node.center_x ? 1 : 0) + (y >= node.center_y ? 2 : 0);
    }

    void split(Index idx) {
        const Index first = static_cast<Index>(nodes_.size());
        const Node parent = nodes_[static_cast<std::size_t>(idx)];
        for (int q = 0; q < 4; ++q) {
            Node child;
            child.half_width = parent.half_width / 2;
            child.center_x = parent.center_x + ((q & 1) ? child.half_width : -child.half_width);
            child.center_y = parent.center_y + ((q & 2) ? child.half_width : -child.half_width);
            child.depth = parent.depth + 1;
            nodes_.push_back(child);
        }
        nodes_[static_cast<std::size_t>(idx)].first_child = first;
    }

    void number(Index idx, Index& counter) {
        nodes_[static_cast<std::size_t>(idx)].order = counter++;
        const Node& node = nodes_[static_cast<std::size_t>(idx)];
        if (node.is_leaf()) {
            for_each_point(node, [&](Index p) { leaf_of_[static_cast<std::size_t>(p)] = idx; });
        } else {
            const Index first = node.first_child;
            for (int c = 0; c < 4; ++c)
                number(first + c, counter);
        }
        nodes_[static_cast<std::size_t>(idx)].order_end = counter;
    }

    void add_to(Index idx, Scalar x, Scalar y) {
        Node& node = nodes_[static_cast<std::size_t>(idx)];
        node.com_x += x;
        node.com_y += y;
        ++node.count;
    }

    void insert(Index point, Scalar x, Scalar y) {
        Index idx = 0;
        for (;;) {
            Node& node = nodes_[static_cast<std::size_t>(idx)];
            if (!node.is_leaf()) {
                add_to(idx, x, y);
                idx = node.first_child + quadrant(node, x, y);
                continue;
            }
            if (node.count == 0 || node.depth >= max_depth) {
                add_to(idx, x, y);
                Node& leaf = nodes_[static_cast<std::size_t>(idx)];
                next_[static_cast<std::size_t>(point)] = leaf.first_point;
                leaf.first_point = point;
                return;
            }
            // Occupied leaf above the depth cap: push its point down one level.
            const Index resident = node.first_point;
            const Scalar rx = node.com_x, ry = node.com_y; // count == 1, so com holds the coordinates
            split(idx);
            Node& parent = nodes_[static_cast<std::size_t>(idx)];
            parent.first_point = -1;
            const Index child = parent.first_child + quadrant(parent, rx, ry);
            add_to(child, rx, ry);
            nodes_[static_cast<std::size_t>(child)].first_point = resident;
            next_[static_cast<std::size_t>(resident)] = -1;
            // The new point is inserted on the next pass through the loop, starting at the now-internal node.
        }
    }

    std::vector<Node> nodes_;
    std::vector<Index> next_;
    std::vector<Index> leaf_of_;
};

namespace detail {

// Repulsive force sum_j qt_ij^2 (y_i - y_j) and partial normalization sum_j qt_ij for point i.
template <typename Scalar>
void bh_repulsion(const QuadTree<Scalar>& tree, const Embedding<Scalar>& Y, Index i, Scalar theta,
                  Scalar& fx, Scalar& fy, Scalar& z, std::vector<Index>& stack) {
    using Node = typename QuadTree<Scalar>::Node;
    const auto& nodes = tree.nodes();
    const Scalar xi = Y(i, 0), yi = Y(i, 1);
    const Scalar theta2 = theta * theta;
    fx = fy = z = 0;
    stack.clear();
    stack.push_back(0);
    while (!stack.empty()) {
        const Node& node = nodes[static_cast<std::size_t>(stack.back())];
        stack.pop_back();
        if (node.count == 0)
            continue;
        const Scalar dx = xi - node.com_x;
        const Scalar dy = yi - node.com_y;
        const Scalar d2 = dx * dx + dy * dy;
        const bool holds_i = tree.holds(node, i);
        if (node.is_leaf()) {
            if (!holds_i) {
                const Scalar q = cauchy(d2);
                const Scalar m = static_cast<Scalar>(node.count);
                z += m * q;
                fx += m * q * q * dx;
                fy += m * q * q * dy;
            } else {
                tree.for_each_point(node, [&](Index j) {
                    if (j == i)
                        return;
                    const Scalar ex = xi - Y(j, 0), ey = yi - Y(j, 1);
                    const Scalar q = cauchy(ex * ex + ey * ey);
                    z += q;
                    fx += q * q * ex;
                    fy += q * q * ey;
                });
            }
            continue;
        }
        const Scalar w = node.width();
        if (!holds_i && w * w < theta2 * d2) {
            const Scalar q = cauchy(d2);
            const Scalar m = static_cast<Scalar>(node.count);
            z += m * q;
            fx += m * q * q * dx;
            fy += m * q * q * dy;
            continue;
        }
        for (int c = 3; c >= 0; --c)
            stack.push_back(node.first_child + c);
    }
}

} // namespace detail

/**
 * Barnes-Hut KL gradient. Attraction is exact over the stored entries of P;
 * repulsion summarizes a quadtree cell by its center of mass when
 * width / distance < theta. theta = 0 reproduces grad_exact.
 *
 * If `normalization` is given it receives the estimated Z.
 */
template <typename Scalar>
Embedding<Scalar> grad_bh(const SparseAffinity<Scalar>& P, const Embedding<Scalar>& Y, Scalar theta,
                          Scalar exaggeration = 1, Scalar* normalization = nullptr) {
    const Index n = Y.rows();
    check_affinity_shape(P, n, "grad_bh");
    if (!(theta >= Scalar(0) && theta <= Scalar(1)))
        throw ConfigError("grad_bh: theta must lie in [0, 1]");
    const QuadTree<Scalar> tree(Y);

    Embedding<Scalar> repulsion(n, 2);
    Vector<Scalar> partial(n);
    parallel_for(0, n, [&](std::ptrdiff_t i) {
        thread_local std::vector<Index> stack;
        Scalar fx, fy, z;
        detail::bh_repulsion(tree, Y, i, theta, fx, fy, z, stack);
        repulsion(i, 0) = fx;
        repulsion(i, 1) = fy;
        partial(i) = z;
    });
    const Scalar Z = partial.sum();
    if (normalization)
        *normalization = Z;

    Embedding<Scalar> grad(n, 2);
    parallel_for(0, n, [&](std::ptrdiff_t i) {
        Scalar ax = 0, ay = 0;
        for (typename Eigen::SparseMatrix<Scalar, Eigen::RowMajor>::InnerIterator it(P.P, i); it; ++it) {
            const Index j = it.col();
            const Scalar dx = Y(i, 0) - Y(j, 0);
            const Scalar dy = Y(i, 1) - Y(j, 1);
            const Scalar w = it.value() * cauchy(dx * dx + dy * dy);
            ax += w * dx;
            ay += w * dy;
        }
        grad(i, 0) = 4 * (exaggeration * ax - repulsion(i, 0) / Z);
        grad(i, 1) = 4 * (exaggeration * ay - repulsion(i, 1) / Z);
    });
    return grad;
}

} // namespace dreams

#endif // DREAMS_TSNE_HPP
