// Synthetic embedding-set generator for desk-scale testing: a shared Gaussian
// latent space observed through per-source orthonormal maps, additive noise,
// and partial vocabulary coverage.
#pragma once

#include <cstdint>
#include <vector>

#include "metaemb/embedding_set.hpp"

namespace metaemb {

struct SourceSpec {
    int dim = 0;             // must be >= latent_dim
    double noise_sigma = 0.0;
    double coverage = 1.0;   // per-word keep probability, in (0, 1]
};

struct SyntheticData {
    EmbeddingSet latent;                // all n words, latent_dim columns
    std::vector<EmbeddingSet> sources;  // covered subsets, per spec
};

// Latent rows are iid standard Gaussian; source i observes row z as
// z * A_i + noise with A_i having orthonormal rows (an isometry), then drops
// words to its coverage fraction. Every word is forced to survive in at least
// one source. Fully determined by the seed.
SyntheticData make_synthetic(std::size_t n, int latent_dim,
                             const std::vector<SourceSpec>& specs,
                             std::uint64_t seed);

}  // namespace metaemb
