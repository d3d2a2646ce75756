// Concatenation and truncated-SVD meta-embedding baselines.
#pragma once

#include <vector>

#include <Eigen/Core>

#include "metaemb/embedding_set.hpp"
#include "metaemb/project.hpp"

namespace metaemb {

inline constexpr double kDefaultScale = 1.0;
// Emphasis factor for designated high-quality sources.
inline constexpr double kEmphasisScale = 8.0;

enum class VocabPolicy : std::uint8_t { intersection, union_zero_fill };

struct ConcConfig {
    std::vector<double> scales;  // one per set; empty means kDefaultScale for all
    VocabPolicy policy = VocabPolicy::intersection;
};

// Concatenates per-source unit-normalised vectors, each block multiplied by
// its scale. Intersection policy keeps only words present in every set;
// union-zero-fill keeps the union vocabulary and fills missing blocks with
// zeros. Output dimensionality is the sum of the source dimensionalities.
MetaEmbedding concat(const std::vector<EmbeddingSet>& sets,
                     const ConcConfig& config = {});

struct SvdInfo {
    Eigen::VectorXd singular_values;  // descending, one per returned column
    int below_tolerance = 0;          // columns past numerical rank (zeroed)
};

// Rank-d truncated SVD of the zero-filled union concatenation matrix; rows of
// the meta-embedding are the first d left singular vectors (no singular-value
// weighting). Computed through the small Gram matrix, so the vocabulary-sized
// matrix is never materialised. The config's scales apply; its vocabulary
// policy is ignored because the decomposition requires the zero-filled union.
MetaEmbedding svd_meta(const std::vector<EmbeddingSet>& sets, int dim,
                       const ConcConfig& config = {}, SvdInfo* info = nullptr,
                       int threads = 1);

}  // namespace metaemb
