// Per-source k-nearest-neighbour graph over the union vocabulary.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metaemb/ball_tree.hpp"
#include "metaemb/embedding_set.hpp"

namespace metaemb {

struct NeighbourhoodGraph {
    std::uint32_t k = 0;
    bool include_self = false;
    // lists[source][union_id]: neighbour union-ids sorted ascending by
    // distance (ties by id); empty when the source does not cover the word.
    std::vector<std::vector<std::vector<std::uint32_t>>> lists;

    std::size_t source_count() const { return lists.size(); }
    std::size_t word_count() const { return lists.empty() ? 0 : lists[0].size(); }
};

// Builds one ball tree per source and materialises the graph over union ids.
NeighbourhoodGraph build_graph(const std::vector<EmbeddingSet>& sets,
                               const SourceMembership& membership,
                               std::size_t union_size, std::uint32_t k,
                               bool include_self = false,
                               int leaf_size = BallTree::kDefaultLeafSize,
                               int threads = 1);

void save_graph(const NeighbourhoodGraph& graph, const std::string& path);
NeighbourhoodGraph load_graph(const std::string& path);

// "word source: n1 n2 ..." rows for inspection.
void dump_graph_text(const NeighbourhoodGraph& graph, const Vocabulary& vocab,
                     const std::string& path);

}  // namespace metaemb
