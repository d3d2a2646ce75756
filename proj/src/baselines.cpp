#include "metaemb/baselines.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "metaemb/error.hpp"
#include "metaemb/parallel.hpp"

namespace metaemb {
namespace {

// Singular values below this fraction of the largest are treated as numerical
// rank deficiency; the Gram route cannot resolve them reliably anyway.
constexpr double kRankTolerance = 1e-7;

// Number of fixed accumulation blocks for the Gram sum. Independent of the
// worker count so the merged result is bit-identical for any thread setting.
constexpr std::size_t kGramBlocks = 256;

std::vector<double> resolve_scales(const std::vector<EmbeddingSet>& sets,
                                   const ConcConfig& config) {
    std::vector<double> scales = config.scales;
    if (scales.empty()) scales.assign(sets.size(), kDefaultScale);
    if (scales.size() != sets.size()) {
        throw Error("got " + std::to_string(scales.size()) + " scales for " +
                        std::to_string(sets.size()) + " embedding sets",
                    "baselines");
    }
    for (double s : scales) {
        if (!(s > 0.0)) {
            throw Error("concatenation scales must be positive", "baselines");
        }
    }
    return scales;
}

int total_dim(const std::vector<EmbeddingSet>& sets) {
    int d = 0;
    for (const auto& set : sets) d += set.dim;
    return d;
}

// Unit-normalised, scaled source row in double precision.
void fill_block(const EmbeddingSet& set, std::int32_t row, double scale,
                double* out) {
    Eigen::VectorXd v = set.row(static_cast<std::uint32_t>(row));
    const double norm = v.norm();
    if (norm == 0.0) {
        throw Error("zero-norm vector for token '" +
                        set.vocab.word(static_cast<std::uint32_t>(row)) +
                        "' in set " + set.name,
                    "baselines");
    }
    const double f = scale / norm;
    for (Eigen::Index j = 0; j < v.size(); ++j) out[j] = v[j] * f;
}

// One zero-filled concatenated union row.
void fill_union_row(const std::vector<EmbeddingSet>& sets,
                    const SourceMembership& membership,
                    const std::vector<double>& scales, std::uint32_t word,
                    double* out, int dim) {
    std::fill(out, out + dim, 0.0);
    int offset = 0;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const std::int32_t row = membership.row_of[s][word];
        if (row >= 0) fill_block(sets[s], row, scales[s], out + offset);
        offset += sets[s].dim;
    }
}

}  // namespace

MetaEmbedding concat(const std::vector<EmbeddingSet>& sets,
                     const ConcConfig& config) {
    if (sets.size() < 2) {
        throw Error("concatenation needs at least two embedding sets",
                    "baselines");
    }
    const std::vector<double> scales = resolve_scales(sets, config);
    const int dim = total_dim(sets);
    auto [union_voc, membership] = union_vocab(sets);

    MetaEmbedding meta;
    meta.method = MetaMethod::conc;

    if (config.policy == VocabPolicy::intersection) {
        std::vector<std::uint32_t> kept;
        for (std::uint32_t id = 0; id < union_voc->size(); ++id) {
            bool everywhere = true;
            for (std::size_t s = 0; s < sets.size(); ++s) {
                if (!membership.covers(s, id)) {
                    everywhere = false;
                    break;
                }
            }
            if (everywhere) kept.push_back(id);
        }
        if (kept.empty()) {
            throw Error("the embedding sets share no words; intersection "
                        "concatenation is undefined",
                        "baselines");
        }
        auto vocab = std::make_shared<Vocabulary>();
        for (std::uint32_t id : kept) vocab->add(union_voc->word(id));
        meta.vocab = vocab;
        meta.vectors.resize(static_cast<Eigen::Index>(kept.size()), dim);
        parallel_for(std::size_t{0}, kept.size(), 1, [&](std::size_t r) {
            Eigen::VectorXd row(dim);
            int offset = 0;
            for (std::size_t s = 0; s < sets.size(); ++s) {
                fill_block(sets[s], membership.row_of[s][kept[r]], scales[s],
                           row.data() + offset);
                offset += sets[s].dim;
            }
            meta.vectors.row(static_cast<Eigen::Index>(r)) = row;
        });
        return meta;
    }

    meta.vocab = union_voc;
    meta.vectors.resize(static_cast<Eigen::Index>(union_voc->size()), dim);
    parallel_for(std::size_t{0}, union_voc->size(), 1, [&](std::size_t r) {
        Eigen::VectorXd row(dim);
        fill_union_row(sets, membership, scales, static_cast<std::uint32_t>(r),
                       row.data(), dim);
        meta.vectors.row(static_cast<Eigen::Index>(r)) = row;
    });
    return meta;
}

MetaEmbedding svd_meta(const std::vector<EmbeddingSet>& sets, int dim,
                       const ConcConfig& config, SvdInfo* info, int threads) {
    if (sets.size() < 2) {
        throw Error("the SVD baseline needs at least two embedding sets",
                    "baselines");
    }
    const std::vector<double> scales = resolve_scales(sets, config);
    const int d_total = total_dim(sets);
    if (dim < 1 || dim > d_total) {
        throw Error("SVD dimension must lie in [1, " + std::to_string(d_total) +
                        "], got " + std::to_string(dim),
                    "baselines");
    }
    auto [union_voc, membership] = union_vocab(sets);
    const std::size_t n = union_voc->size();

    // First streaming pass: Gram matrix C^T C accumulated over a fixed block
    // partition of the vocabulary, merged in block order.
    const std::size_t blocks = std::min<std::size_t>(kGramBlocks, std::max<std::size_t>(n, 1));
    std::vector<Eigen::MatrixXd> partial(
        blocks, Eigen::MatrixXd::Zero(d_total, d_total));
    const std::size_t chunk = (n + blocks - 1) / blocks;
    parallel_for(std::size_t{0}, blocks, threads, [&](std::size_t b) {
        const std::size_t begin = b * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        Eigen::VectorXd row(d_total);
        for (std::size_t v = begin; v < end; ++v) {
            fill_union_row(sets, membership, scales, static_cast<std::uint32_t>(v),
                           row.data(), d_total);
            partial[b].selfadjointView<Eigen::Lower>().rankUpdate(row);
        }
    });
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d_total, d_total);
    for (const auto& p : partial) gram += p;
    gram = gram.selfadjointView<Eigen::Lower>();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) {
        throw Error("Gram eigendecomposition failed", "baselines");
    }

    Eigen::VectorXd sigma(dim);
    Eigen::MatrixXd right(d_total, dim);  // right singular vectors, descending
    for (int i = 0; i < dim; ++i) {
        const Eigen::Index src = static_cast<Eigen::Index>(d_total - 1 - i);
        sigma[i] = std::sqrt(std::max(es.eigenvalues()[src], 0.0));
        right.col(i) = es.eigenvectors().col(src);
    }
    const double sigma_max = dim > 0 ? sigma[0] : 0.0;
    int deficient = 0;
    Eigen::VectorXd inv_sigma(dim);
    for (int i = 0; i < dim; ++i) {
        if (sigma[i] <= kRankTolerance * sigma_max || sigma[i] == 0.0) {
            inv_sigma[i] = 0.0;
            ++deficient;
        } else {
            inv_sigma[i] = 1.0 / sigma[i];
        }
    }

    // Second streaming pass: left singular vectors, one vocabulary row at a
    // time. Columns past the numerical rank stay zero.
    MetaEmbedding meta;
    meta.method = MetaMethod::svd;
    meta.vocab = union_voc;
    meta.vectors.resize(static_cast<Eigen::Index>(n), dim);
    parallel_for(std::size_t{0}, n, threads, [&](std::size_t v) {
        Eigen::VectorXd row(d_total);
        fill_union_row(sets, membership, scales, static_cast<std::uint32_t>(v),
                       row.data(), d_total);
        meta.vectors.row(static_cast<Eigen::Index>(v)) =
            ((row.transpose() * right).array() * inv_sigma.transpose().array())
                .matrix();
    });

    if (info != nullptr) {
        info->singular_values = sigma;
        info->below_tolerance = deficient;
    }
    return meta;
}

}  // namespace metaemb
