// Reconstruction-weight fitting: for every word, the sparse coefficients over
// its per-source nearest neighbours that minimise the summed local distortion,
// with the row constrained to sum to one.
//
// Two solvers: per-word batch gradient descent with AdaGrad scheduling
// (weights normalised once at the end), and an exact equality-constrained
// least-squares solve used as the optimality reference.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metaemb/embedding_set.hpp"
#include "metaemb/neighbourhood.hpp"

namespace metaemb {

struct WeightEntry {
    std::uint32_t id = 0;
    double weight = 0.0;
};

struct SparseWeights {
    // rows[union_id]: (neighbour id, weight), ids ascending; support is the
    // union of the word's per-source neighbour lists. Finalised rows sum to 1.
    std::vector<std::vector<WeightEntry>> rows;

    std::size_t word_count() const { return rows.size(); }
};

struct SolverConfig {
    double learning_rate = 0.01;
    int max_iters = 100;
    double adagrad_epsilon = 1e-8;
    std::uint64_t seed = 0;
    double tolerance = 1e-7;  // stop on relative decrease of the word's distortion
};

struct FitStats {
    std::size_t words = 0;
    std::size_t total_iters = 0;
    std::size_t diverged_words = 0;  // distortion rose > 1e-9 after epoch 10
    std::size_t hit_iter_cap = 0;
};

// Total distortion of W over all words and sources covering them.
double reconstruction_error(const SparseWeights& weights,
                            const std::vector<EmbeddingSet>& sets,
                            const SourceMembership& membership,
                            const NeighbourhoodGraph& graph);

// Partial derivative of the distortion with respect to the (word, neighbour)
// coefficient. `neighbour` must lie in the word's union neighbourhood.
double error_gradient(const SparseWeights& weights,
                      const std::vector<EmbeddingSet>& sets,
                      const SourceMembership& membership,
                      const NeighbourhoodGraph& graph,
                      std::uint32_t word, std::uint32_t neighbour);

SparseWeights fit_weights_sgd(const std::vector<EmbeddingSet>& sets,
                              const SourceMembership& membership,
                              const NeighbourhoodGraph& graph,
                              const SolverConfig& config,
                              FitStats* stats = nullptr, int threads = 1);

// Closed-form per-word solve on the unit-sum manifold via the local residual
// Gram system (G + lambda I) w = 1 followed by rescaling to sum one, with
// Tikhonov regularisation for rank-deficient neighbour systems. G sums, over
// the sources covering the word, the inner products of the neighbour
// residuals v - u. For a single source (or identical per-source lists) this
// is the exact constrained minimiser of the distortion.
SparseWeights fit_weights_exact(const std::vector<EmbeddingSet>& sets,
                                const SourceMembership& membership,
                                const NeighbourhoodGraph& graph,
                                int threads = 1);

void save_weights(const SparseWeights& weights, const std::string& path);
SparseWeights load_weights(const std::string& path);
void dump_weights_text(const SparseWeights& weights, const Vocabulary& vocab,
                       const std::string& path);

}  // namespace metaemb
