// Ball tree over the rows of one embedding table. Queries are exact pruned
// k-NN under Euclidean distance; distances are accumulated in double.
#pragma once

#include <cstdint>
#include <vector>

#include "metaemb/embedding_set.hpp"

namespace metaemb {

struct BallTreeNode {
    std::vector<double> center;
    double radius = 0.0;
    std::uint32_t begin = 0;  // [begin, end) into the point permutation
    std::uint32_t end = 0;
    std::int32_t left = -1;   // child node indices, -1 for leaves
    std::int32_t right = -1;

    bool is_leaf() const { return left < 0; }
};

struct Neighbour {
    std::uint32_t id = 0;  // row index within the indexed set
    double distance = 0.0;
};

class BallTree {
public:
    static constexpr int kDefaultLeafSize = 40;

    BallTree(const MatrixXfRow& points, int leaf_size = kDefaultLeafSize);

    // k nearest rows to row `query_id`, ascending by (distance, id).
    // Returns fewer than k entries when the set is too small; never errors for that.
    std::vector<Neighbour> query_knn(std::uint32_t query_id, std::size_t k,
                                     bool include_self = false) const;

    // Same search for an arbitrary query point of matching dimension.
    std::vector<Neighbour> query_point(const Eigen::VectorXd& query, std::size_t k) const;

    std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
    const std::vector<BallTreeNode>& nodes() const { return nodes_; }
    const std::vector<std::uint32_t>& permutation() const { return perm_; }
    int leaf_size() const { return leaf_size_; }

private:
    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node_id, const double* query,
                std::int64_t exclude_id, std::size_t k,
                std::vector<Neighbour>& heap) const;

    MatrixXfRow points_;  // copy of the indexed rows
    int leaf_size_;
    std::vector<std::uint32_t> perm_;
    std::vector<BallTreeNode> nodes_;
    std::int32_t root_ = -1;
};

}  // namespace metaemb
