#include "metaemb/ball_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metaemb/error.hpp"

namespace metaemb {

namespace {

// Squared distance between a double query and a float row, accumulated in
// double. Both the tree scan and the brute-force oracle use this formula, so
// their results agree bit-for-bit.
double sq_dist(const double* q, const float* row, int dim) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) {
        double d = q[j] - static_cast<double>(row[j]);
        s += d * d;
    }
    return s;
}

// Strict (distance, id) order; with this as heap comparator the worst
// candidate sits at the front.
bool better(const Neighbour& a, const Neighbour& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.id < b.id;
}

}  // namespace

BallTree::BallTree(const MatrixXfRow& points, int leaf_size)
    : points_(points), leaf_size_(leaf_size) {
    if (points_.rows() == 0) throw Error("ball tree requires a non-empty point set");
    if (leaf_size_ < 1) throw Error("ball tree leaf_size must be >= 1");
    perm_.resize(static_cast<std::size_t>(points_.rows()));
    std::iota(perm_.begin(), perm_.end(), 0u);
    nodes_.reserve(static_cast<std::size_t>(2 * points_.rows() / leaf_size_ + 8));
    root_ = build(0, static_cast<std::uint32_t>(points_.rows()));
}

std::int32_t BallTree::build(std::uint32_t begin, std::uint32_t end) {
    const int dim = static_cast<int>(points_.cols());
    BallTreeNode node;
    node.begin = begin;
    node.end = end;

    // centroid and covering radius in double
    node.center.assign(static_cast<std::size_t>(dim), 0.0);
    for (std::uint32_t i = begin; i < end; ++i) {
        const float* row = points_.row(perm_[i]).data();
        for (int j = 0; j < dim; ++j) node.center[static_cast<std::size_t>(j)] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(end - begin);
    for (auto& c : node.center) c *= inv;
    double max_sq = 0.0;
    for (std::uint32_t i = begin; i < end; ++i)
        max_sq = std::max(max_sq, sq_dist(node.center.data(), points_.row(perm_[i]).data(), dim));
    node.radius = std::sqrt(max_sq);

    // split on the dimension of greatest spread; degenerate spread -> leaf
    int split_dim = -1;
    double best_spread = 0.0;
    if (end - begin > static_cast<std::uint32_t>(leaf_size_)) {
        for (int j = 0; j < dim; ++j) {
            float lo = points_(perm_[begin], j), hi = lo;
            for (std::uint32_t i = begin + 1; i < end; ++i) {
                float v = points_(perm_[i], j);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            double spread = static_cast<double>(hi) - static_cast<double>(lo);
            if (spread > best_spread) {
                best_spread = spread;
                split_dim = j;
            }
        }
    }

    const auto node_id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(std::move(node));

    if (split_dim >= 0) {
        std::uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             float va = points_(a, split_dim), vb = points_(b, split_dim);
                             if (va != vb) return va < vb;
                             return a < b;
                         });
        std::int32_t left = build(begin, mid);
        std::int32_t right = build(mid, end);
        nodes_[static_cast<std::size_t>(node_id)].left = left;
        nodes_[static_cast<std::size_t>(node_id)].right = right;
    }
    return node_id;
}

void BallTree::search(std::int32_t node_id, const double* query,
                      std::int64_t exclude_id, std::size_t k,
                      std::vector<Neighbour>& heap) const {
    const auto& node = nodes_[static_cast<std::size_t>(node_id)];
    const int dim = static_cast<int>(points_.cols());

    // Lower bound on the distance from the query to anything in this ball.
    double center_sq_dist = 0.0;
    for (int j = 0; j < dim; ++j) {
        double d = query[j] - node.center[static_cast<std::size_t>(j)];
        center_sq_dist += d * d;
    }
    double bound = std::max(0.0, std::sqrt(center_sq_dist) - node.radius);
    if (heap.size() == k && bound * bound > heap.front().distance) return;

    if (node.is_leaf()) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            std::uint32_t id = perm_[i];
            if (static_cast<std::int64_t>(id) == exclude_id) continue;
            double d2 = sq_dist(query, points_.row(id).data(), dim);
            Neighbour cand{id, d2};
            if (heap.size() < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), better);
            } else if (better(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), better);
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), better);
            }
        }
        return;
    }

    // Visit the child whose center is closer first; better pruning.
    const auto& lnode = nodes_[static_cast<std::size_t>(node.left)];
    const auto& rnode = nodes_[static_cast<std::size_t>(node.right)];
    auto center_sq = [&](const BallTreeNode& nd) {
        double s = 0.0;
        for (int j = 0; j < dim; ++j) {
            double d = query[j] - nd.center[static_cast<std::size_t>(j)];
            s += d * d;
        }
        return s;
    };
    if (center_sq(lnode) <= center_sq(rnode)) {
        search(node.left, query, exclude_id, k, heap);
        search(node.right, query, exclude_id, k, heap);
    } else {
        search(node.right, query, exclude_id, k, heap);
        search(node.left, query, exclude_id, k, heap);
    }
}

std::vector<Neighbour> BallTree::query_knn(std::uint32_t query_id, std::size_t k,
                                           bool include_self) const {
    if (query_id >= size()) throw Error("ball tree query id out of range");
    if (k < 1) throw Error("ball tree query requires k >= 1");
    Eigen::VectorXd q = points_.row(query_id).cast<double>();
    std::vector<Neighbour> heap;
    heap.reserve(k + 1);
    search(root_, q.data(), include_self ? -1 : static_cast<std::int64_t>(query_id), k, heap);
    std::sort(heap.begin(), heap.end(), better);
    for (auto& nb : heap) nb.distance = std::sqrt(nb.distance);
    return heap;
}

std::vector<Neighbour> BallTree::query_point(const Eigen::VectorXd& query, std::size_t k) const {
    if (query.size() != points_.cols()) throw Error("ball tree query dimension mismatch");
    if (k < 1) throw Error("ball tree query requires k >= 1");
    std::vector<Neighbour> heap;
    heap.reserve(k + 1);
    search(root_, query.data(), -1, k, heap);
    std::sort(heap.begin(), heap.end(), better);
    for (auto& nb : heap) nb.distance = std::sqrt(nb.distance);
    return heap;
}

}  // namespace metaemb
