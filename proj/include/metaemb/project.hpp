// Spectral projection: turns fitted reconstruction weights into a combined
// operator, exposes matrix-free products with M = (I - W')^T (I - W'), finds
// the smallest eigenpairs of M, and stacks the retained eigenvectors into the
// final meta-embedding.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "metaemb/embedding_set.hpp"
#include "metaemb/recon.hpp"

namespace metaemb {

// Sparse row/column views of W'. Rows are the fitted weights scaled by how
// many source neighbourhoods contain each (word, neighbour) pair; the column
// view mirrors the rows so both passes of the M product are gather-style and
// therefore independent of thread count.
struct CombinedWeights {
    std::size_t n = 0;
    std::vector<std::vector<WeightEntry>> rows;  // ids ascending per row
    std::vector<std::vector<WeightEntry>> cols;  // built by finalize()

    void finalize();
};

CombinedWeights combine_weights(const SparseWeights& weights,
                                const NeighbourhoodGraph& graph,
                                bool row_normalize = true);

// y = (I - W')^T (I - W') x, computed as two sparse passes.
void apply_m(const CombinedWeights& wp, const Eigen::VectorXd& x,
             Eigen::VectorXd& y, int threads = 1);
Eigen::VectorXd apply_m(const CombinedWeights& wp, const Eigen::VectorXd& x,
                        int threads = 1);

// Dense realisation of M; for small problems and reference checks.
Eigen::MatrixXd dense_m(const CombinedWeights& wp);

struct EigOptions {
    double tol = 1e-8;            // residual ||Mx - lx|| <= tol * max(1, l)
    int max_restarts = 30;
    std::size_t dense_cutoff = 2000;  // n at or below this solves densely
    std::uint64_t seed = 0;
    int threads = 1;
};

struct EigResult {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // n x count, orthonormal columns
    bool converged = false;
    bool used_dense = false;
    int restarts = 0;
    std::size_t matvecs = 0;
    double max_residual = 0.0;
};

// The `count` algebraically smallest eigenpairs of M. Iterative path is a
// thick-restart Krylov scheme on a spectral shift of M with full
// reorthogonalisation; below the dense cutoff a direct symmetric
// eigendecomposition is used instead.
EigResult smallest_eigenpairs(const CombinedWeights& wp, int count,
                              const EigOptions& opts);

enum class MetaMethod : std::uint8_t { lle = 0, conc = 1, svd = 2 };

const char* method_name(MetaMethod method);

// Meta-embedding held in double precision; converted to float32 only at the
// interchange boundary.
struct MetaEmbedding {
    std::shared_ptr<const Vocabulary> vocab;
    Eigen::MatrixXd vectors;  // n x dim, one row per word
    MetaMethod method = MetaMethod::lle;

    int dim() const { return static_cast<int>(vectors.cols()); }
    std::size_t size() const { return static_cast<std::size_t>(vectors.rows()); }
};

// Solves for dim+1 smallest eigenpairs, discards the bottom one, and uses the
// remaining eigenvectors as meta-embedding coordinates (ascending eigenvalue
// order). `info`, when given, receives the full eigensolve diagnostics.
MetaEmbedding project(const CombinedWeights& wp,
                      std::shared_ptr<const Vocabulary> vocab, int dim,
                      const EigOptions& opts, EigResult* info = nullptr);

// Row-wise projection cost sum_v ||p_v - sum_u W'_vu p_u||^2; equals the sum
// of the retained eigenvalues when the rows come from project().
double projection_cost(const CombinedWeights& wp, const MetaEmbedding& meta,
                       int threads = 1);

EmbeddingSet to_embedding_set(const MetaEmbedding& meta,
                              const std::string& name);

void save_meta(const MetaEmbedding& meta, const std::string& path);
MetaEmbedding load_meta(const std::string& path);

}  // namespace metaemb
