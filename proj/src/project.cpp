#include "metaemb/project.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "metaemb/binio.hpp"
#include "metaemb/error.hpp"
#include "metaemb/parallel.hpp"
#include "metaemb/rng.hpp"

namespace metaemb {
namespace {

constexpr char kMetaMagic[8] = {'M', 'E', 'M', 'B', 'M', 'E', 'T', '1'};
constexpr std::uint32_t kMetaVersion = 1;

// Largest n for which a dense realisation of M is allowed.
constexpr std::size_t kDenseLimit = 8192;

void check_finalized(const CombinedWeights& wp, const char* where) {
    if (wp.n == 0) throw Error(std::string(where) + ": empty operator", "project");
    if (wp.rows.size() != wp.n || wp.cols.size() != wp.n) {
        throw Error(std::string(where) +
                        ": combined weights not finalised (missing column view)",
                    "project");
    }
}

// Flips each column so its largest-magnitude entry (first such entry on ties)
// is positive; removes the sign ambiguity of eigenvectors.
void fix_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
            const double a = std::abs(vectors(r, c));
            if (a > best) {
                best = a;
                arg = r;
            }
        }
        if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
    }
}

Eigen::VectorXd random_unit(std::uint64_t seed, const char* stage,
                            std::uint64_t index, std::size_t n) {
    auto rng = make_engine(seed, stage, index);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    const double norm = v.norm();
    if (norm == 0.0) {
        v.setZero();
        v[0] = 1.0;
        return v;
    }
    return v / norm;
}

// Upper bound flavour estimate of the largest eigenvalue of M by power
// iteration; only steers the spectral shift, so moderate accuracy suffices.
double estimate_lambda_max(const CombinedWeights& wp, const EigOptions& opts) {
    Eigen::VectorXd x = random_unit(opts.seed, "eig-power", 0, wp.n);
    Eigen::VectorXd y(static_cast<Eigen::Index>(wp.n));
    double lambda = 0.0;
    for (int it = 0; it < 64; ++it) {
        apply_m(wp, x, y, opts.threads);
        const double next = x.dot(y);
        const double norm = y.norm();
        if (norm < 1e-300) return std::max(next, 0.0);
        y /= norm;
        x.swap(y);
        if (it > 4 && std::abs(next - lambda) <= 1e-6 * std::max(1.0, std::abs(next))) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::max(lambda, 0.0);
}

EigResult dense_smallest(const CombinedWeights& wp, int count) {
    Eigen::MatrixXd m = dense_m(wp);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) {
        throw Error("dense eigendecomposition failed", "project");
    }
    EigResult res;
    res.eigenvalues = es.eigenvalues().head(count);
    res.eigenvectors = es.eigenvectors().leftCols(count);
    res.converged = true;
    res.used_dense = true;
    res.max_residual = 0.0;
    for (int i = 0; i < count; ++i) {
        const double r =
            (m * res.eigenvectors.col(i) - res.eigenvalues[i] * res.eigenvectors.col(i))
                .norm();
        res.max_residual = std::max(res.max_residual, r);
    }
    fix_signs(res.eigenvectors);
    return res;
}

// Thick-restart Krylov iteration on Op = c*I - M. The largest eigenvalues of
// Op are the smallest of M. Basis vectors are kept fully orthonormal (two
// Gram-Schmidt passes per step) and the projected matrix is carried as an
// explicit symmetric block, which makes restarts plain basis rotations.
EigResult iterative_smallest(const CombinedWeights& wp, int count,
                             const EigOptions& opts) {
    const std::size_t n = wp.n;
    const double lambda_max = estimate_lambda_max(wp, opts);
    const double c = std::max(1.01 * lambda_max, 1.0);

    // The basis grows to about 50*count columns between restarts (capped for
    // memory on very large operators). Operators whose dimension fits inside
    // one cycle get an exact Rayleigh-Ritz solve on the full space, which
    // keeps badly spread spectra from stalling the restart loop.
    const std::size_t per_cycle = std::min<std::size_t>(
        std::size_t{50} * static_cast<std::size_t>(count), 1024);
    const std::size_t m_max = std::min(
        n, std::max({static_cast<std::size_t>(2 * count + 2), std::size_t{32},
                     per_cycle}));
    const std::size_t keep =
        std::min(m_max - 1,
                 static_cast<std::size_t>(count) +
                     std::max<std::size_t>(8, static_cast<std::size_t>(count) / 2));

    Eigen::MatrixXd V(static_cast<Eigen::Index>(n),
                      static_cast<Eigen::Index>(m_max + 1));
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_max + 1),
                                              static_cast<Eigen::Index>(m_max + 1));
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    Eigen::VectorXd mw(static_cast<Eigen::Index>(n));

    EigResult res;
    std::uint64_t breakdowns = 0;
    V.col(0) = random_unit(opts.seed, "eig-start", 0, n);
    std::size_t j = 0;  // columns 0..j of V hold basis vectors; H columns 0..j-1 filled

    const auto op_apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        apply_m(wp, x, mw, opts.threads);
        out = c * x - mw;
        ++res.matvecs;
    };

    Eigen::VectorXd ritz;          // Op Ritz values, descending
    Eigen::MatrixXd ritz_vecs;     // subspace coordinates, aligned with ritz
    double beta_last = 0.0;
    bool exhausted = false;  // no directions left to expand into

    for (int cycle = 0; cycle <= opts.max_restarts; ++cycle) {
        res.restarts = cycle;
        // Expansion: grow the basis to m_max columns.
        while (j < m_max && j < n) {
            op_apply(V.col(static_cast<Eigen::Index>(j)), w);
            const auto basis = V.leftCols(static_cast<Eigen::Index>(j + 1));
            Eigen::VectorXd h = basis.transpose() * w;
            w.noalias() -= basis * h;
            Eigen::VectorXd h2 = basis.transpose() * w;
            w.noalias() -= basis * h2;
            h += h2;
            H.col(static_cast<Eigen::Index>(j)).head(static_cast<Eigen::Index>(j + 1)) = h;
            double beta = w.norm();
            if (beta <= 1e-13 * std::max(1.0, c)) {
                // Invariant subspace: restart the recurrence in a fresh
                // random direction orthogonal to everything found so far.
                H(static_cast<Eigen::Index>(j + 1), static_cast<Eigen::Index>(j)) = 0.0;
                Eigen::VectorXd fresh =
                    random_unit(opts.seed, "eig-breakdown", breakdowns++, n);
                Eigen::VectorXd g = basis.transpose() * fresh;
                fresh.noalias() -= basis * g;
                g = basis.transpose() * fresh;
                fresh.noalias() -= basis * g;
                const double fn = fresh.norm();
                ++j;
                if (fn < 1e-10 || j >= n) {
                    exhausted = true;
                    break;
                }
                V.col(static_cast<Eigen::Index>(j)) = fresh / fn;
                continue;
            }
            H(static_cast<Eigen::Index>(j + 1), static_cast<Eigen::Index>(j)) = beta;
            V.col(static_cast<Eigen::Index>(j + 1)) = w / beta;
            ++j;
        }

        // Rayleigh-Ritz on the (symmetrised) projected block.
        const Eigen::Index jj = static_cast<Eigen::Index>(j);
        Eigen::MatrixXd hs =
            0.5 * (H.topLeftCorner(jj, jj) + H.topLeftCorner(jj, jj).transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hs);
        if (es.info() != Eigen::Success) {
            throw Error("projected eigendecomposition failed", "project");
        }
        const int take = static_cast<int>(
            std::min<std::size_t>(static_cast<std::size_t>(count), j));
        ritz.resize(take);
        ritz_vecs.resize(jj, take);
        for (int i = 0; i < take; ++i) {  // descending Op value
            ritz[i] = es.eigenvalues()[jj - 1 - i];
            ritz_vecs.col(i) = es.eigenvectors().col(jj - 1 - i);
        }
        beta_last = (j < n) ? H(jj, jj - 1) : 0.0;
        const bool terminal = exhausted || j >= n || cycle == opts.max_restarts;

        bool maybe_done = (take == count);
        if (maybe_done && !terminal) {
            for (int i = 0; i < take; ++i) {
                const double lam = c - ritz[i];
                const double bound = std::abs(beta_last * ritz_vecs(jj - 1, i));
                if (bound > opts.tol * std::max(1.0, std::abs(lam))) {
                    maybe_done = false;
                    break;
                }
            }
        }

        if (maybe_done || terminal) {
            // Explicit verification against the original operator.
            Eigen::MatrixXd x = V.leftCols(jj) * ritz_vecs;
            res.eigenvalues.resize(take);
            res.max_residual = 0.0;
            bool ok = (take == count);
            for (int i = 0; i < take; ++i) {
                const double lam = c - ritz[i];
                res.eigenvalues[i] = lam;
                apply_m(wp, x.col(i), mw, opts.threads);
                const double r = (mw - lam * x.col(i)).norm();
                res.max_residual = std::max(res.max_residual, r);
                if (r > opts.tol * std::max(1.0, std::abs(lam))) ok = false;
            }
            res.eigenvectors = std::move(x);
            res.converged = ok;
            if (ok || terminal) {
                fix_signs(res.eigenvectors);
                return res;
            }
        }

        // Thick restart: rotate the best `keep` Ritz directions into the new
        // basis and append the current residual direction.
        const std::size_t l = std::min(keep, j - 1);
        Eigen::MatrixXd s(jj, static_cast<Eigen::Index>(l));
        for (std::size_t i = 0; i < l; ++i) {
            s.col(static_cast<Eigen::Index>(i)) =
                es.eigenvectors().col(jj - 1 - static_cast<Eigen::Index>(i));
        }
        Eigen::MatrixXd rotated = V.leftCols(jj) * s;
        V.leftCols(static_cast<Eigen::Index>(l)) = rotated;
        V.col(static_cast<Eigen::Index>(l)) = V.col(jj);
        H.setZero();
        for (std::size_t i = 0; i < l; ++i) {
            const double theta = es.eigenvalues()[jj - 1 - static_cast<Eigen::Index>(i)];
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = theta;
            const double border = beta_last * s(jj - 1, static_cast<Eigen::Index>(i));
            H(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(i)) = border;
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = border;
        }
        j = l;
    }
    return res;  // unreachable; loop always returns at the budget boundary
}

}  // namespace

void CombinedWeights::finalize() {
    cols.assign(n, {});
    std::vector<std::size_t> counts(n, 0);
    for (const auto& row : rows) {
        for (const auto& e : row) ++counts[e.id];
    }
    for (std::size_t u = 0; u < n; ++u) cols[u].reserve(counts[u]);
    for (std::size_t v = 0; v < n; ++v) {
        for (const auto& e : rows[v]) {
            cols[e.id].push_back(WeightEntry{static_cast<std::uint32_t>(v), e.weight});
        }
    }
}

CombinedWeights combine_weights(const SparseWeights& weights,
                                const NeighbourhoodGraph& graph,
                                bool row_normalize) {
    const std::size_t n = weights.rows.size();
    if (graph.word_count() != n) {
        throw Error("weight table and neighbourhood graph cover different "
                    "vocabularies",
                    "project");
    }
    CombinedWeights wp;
    wp.n = n;
    wp.rows.resize(n);
    const std::size_t sources = graph.source_count();

    parallel_for(std::size_t{0}, n, 1, [&](std::size_t v) {
        const auto& wrow = weights.rows[v];
        if (wrow.empty()) return;
        std::vector<std::uint32_t> mult(wrow.size(), 0);
        for (std::size_t s = 0; s < sources; ++s) {
            for (std::uint32_t u : graph.lists[s][v]) {
                const auto it = std::lower_bound(
                    wrow.begin(), wrow.end(), u,
                    [](const WeightEntry& e, std::uint32_t id) { return e.id < id; });
                if (it == wrow.end() || it->id != u) {
                    throw Error("neighbourhood graph names id " + std::to_string(u) +
                                    " missing from the weight row of word " +
                                    std::to_string(v),
                                "project");
                }
                ++mult[static_cast<std::size_t>(it - wrow.begin())];
            }
        }
        std::vector<WeightEntry> row(wrow.size());
        double sum = 0.0;
        for (std::size_t p = 0; p < wrow.size(); ++p) {
            if (mult[p] == 0) {
                throw Error("weight row of word " + std::to_string(v) +
                                " references id " + std::to_string(wrow[p].id) +
                                " absent from the neighbourhood graph",
                            "project");
            }
            row[p] = WeightEntry{wrow[p].id,
                                 wrow[p].weight * static_cast<double>(mult[p])};
            sum += row[p].weight;
        }
        if (row_normalize) {
            if (!std::isfinite(sum) || std::abs(sum) < 1e-12) {
                throw Error("combined row of word " + std::to_string(v) +
                                " sums to nearly zero; cannot renormalise",
                            "project");
            }
            for (auto& e : row) e.weight /= sum;
        }
        wp.rows[v] = std::move(row);
    });
    wp.finalize();
    return wp;
}

void apply_m(const CombinedWeights& wp, const Eigen::VectorXd& x,
             Eigen::VectorXd& y, int threads) {
    check_finalized(wp, "apply_m");
    if (static_cast<std::size_t>(x.size()) != wp.n) {
        throw Error("apply_m: vector length does not match operator size",
                    "project");
    }
    Eigen::VectorXd t(static_cast<Eigen::Index>(wp.n));
    y.resize(static_cast<Eigen::Index>(wp.n));
    parallel_for(std::size_t{0}, wp.n, threads, [&](std::size_t v) {
        double s = x[static_cast<Eigen::Index>(v)];
        for (const auto& e : wp.rows[v]) s -= e.weight * x[e.id];
        t[static_cast<Eigen::Index>(v)] = s;
    });
    parallel_for(std::size_t{0}, wp.n, threads, [&](std::size_t u) {
        double s = t[static_cast<Eigen::Index>(u)];
        for (const auto& e : wp.cols[u]) s -= e.weight * t[e.id];
        y[static_cast<Eigen::Index>(u)] = s;
    });
}

Eigen::VectorXd apply_m(const CombinedWeights& wp, const Eigen::VectorXd& x,
                        int threads) {
    Eigen::VectorXd y;
    apply_m(wp, x, y, threads);
    return y;
}

Eigen::MatrixXd dense_m(const CombinedWeights& wp) {
    check_finalized(wp, "dense_m");
    if (wp.n > kDenseLimit) {
        throw Error("dense realisation requested for n = " + std::to_string(wp.n) +
                        " (limit " + std::to_string(kDenseLimit) + ")",
                    "project");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(wp.n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t v = 0; v < wp.n; ++v) {
        for (const auto& e : wp.rows[v]) {
            a(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(e.id)) -=
                e.weight;
        }
    }
    Eigen::MatrixXd m(n, n);
    m.noalias() = a.transpose() * a;
    return m;
}

EigResult smallest_eigenpairs(const CombinedWeights& wp, int count,
                              const EigOptions& opts) {
    check_finalized(wp, "smallest_eigenpairs");
    if (count < 1) throw Error("eigenpair count must be positive", "project");
    if (static_cast<std::size_t>(count) > wp.n) {
        throw Error("requested " + std::to_string(count) +
                        " eigenpairs from an operator of dimension " +
                        std::to_string(wp.n),
                    "project");
    }
    if (wp.n <= opts.dense_cutoff) return dense_smallest(wp, count);
    return iterative_smallest(wp, count, opts);
}

const char* method_name(MetaMethod method) {
    switch (method) {
        case MetaMethod::lle: return "lle";
        case MetaMethod::conc: return "conc";
        case MetaMethod::svd: return "svd";
    }
    return "unknown";
}

MetaEmbedding project(const CombinedWeights& wp,
                      std::shared_ptr<const Vocabulary> vocab, int dim,
                      const EigOptions& opts, EigResult* info) {
    check_finalized(wp, "project");
    if (dim < 1) throw Error("projection dimension must be positive", "project");
    if (!vocab || vocab->size() != wp.n) {
        throw Error("vocabulary size does not match the combined operator",
                    "project");
    }
    if (static_cast<std::size_t>(dim) + 1 > wp.n) {
        throw Error("projection dimension " + std::to_string(dim) +
                        " too large for a vocabulary of " + std::to_string(wp.n),
                    "project");
    }
    EigResult res = smallest_eigenpairs(wp, dim + 1, opts);
    if (!res.converged) {
        throw Error("eigensolver did not converge within its restart budget "
                    "(worst residual " +
                        std::to_string(res.max_residual) + ")",
                    "project");
    }
    MetaEmbedding meta;
    meta.vocab = std::move(vocab);
    // Drop the bottom eigenvector; the remaining ones, in ascending eigenvalue
    // order, become the meta-embedding coordinates.
    meta.vectors = res.eigenvectors.rightCols(dim);
    meta.method = MetaMethod::lle;
    if (info != nullptr) *info = std::move(res);
    return meta;
}

double projection_cost(const CombinedWeights& wp, const MetaEmbedding& meta,
                       int threads) {
    check_finalized(wp, "projection_cost");
    if (meta.size() != wp.n) {
        throw Error("meta-embedding rows do not match the combined operator",
                    "project");
    }
    double cost = 0.0;
    Eigen::VectorXd t(static_cast<Eigen::Index>(wp.n));
    for (Eigen::Index c = 0; c < meta.vectors.cols(); ++c) {
        const auto x = meta.vectors.col(c);
        parallel_for(std::size_t{0}, wp.n, threads, [&](std::size_t v) {
            double s = x[static_cast<Eigen::Index>(v)];
            for (const auto& e : wp.rows[v]) s -= e.weight * x[e.id];
            t[static_cast<Eigen::Index>(v)] = s;
        });
        cost += t.squaredNorm();
    }
    return cost;
}

EmbeddingSet to_embedding_set(const MetaEmbedding& meta,
                              const std::string& name) {
    EmbeddingSet set;
    set.name = name;
    set.dim = meta.dim();
    set.vocab = *meta.vocab;
    set.vectors = meta.vectors.cast<float>();
    set.unit_normalized = false;
    return set;
}

void save_meta(const MetaEmbedding& meta, const std::string& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        out.write(kMetaMagic, sizeof(kMetaMagic));
        write_pod<std::uint32_t>(out, kMetaVersion);
        write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(meta.method));
        write_pod<std::uint64_t>(out, meta.size());
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(meta.dim()));
        for (const auto& w : meta.vocab->words()) write_string(out, w);
        for (std::size_t r = 0; r < meta.size(); ++r) {
            for (int c = 0; c < meta.dim(); ++c) {
                write_pod<double>(out, meta.vectors(static_cast<Eigen::Index>(r), c));
            }
        }
    });
}

MetaEmbedding load_meta(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open meta-embedding file: " + path, "project");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMetaMagic, sizeof(magic)) != 0) {
        throw Error("not a meta-embedding file: " + path, "project");
    }
    auto version = read_pod<std::uint32_t>(in, "meta version");
    if (version != kMetaVersion) {
        throw Error("unsupported meta-embedding version in " + path, "project");
    }
    auto method = read_pod<std::uint8_t>(in, "method");
    if (method > 2) throw Error("bad method byte in " + path, "project");
    auto n = read_pod<std::uint64_t>(in, "row count");
    auto d = read_pod<std::uint32_t>(in, "dim");
    auto vocab = std::make_shared<Vocabulary>();
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::string token = read_string(in, "token");
        if (vocab->add(token) != i) {
            throw Error("duplicate token in meta-embedding file: " + token,
                        "project");
        }
    }
    MetaEmbedding meta;
    meta.method = static_cast<MetaMethod>(method);
    meta.vocab = std::move(vocab);
    meta.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::uint64_t r = 0; r < n; ++r) {
        for (std::uint32_t c = 0; c < d; ++c) {
            meta.vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                read_pod<double>(in, "value");
        }
    }
    return meta;
}

}  // namespace metaemb
