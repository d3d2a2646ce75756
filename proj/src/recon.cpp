#include "metaemb/recon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "metaemb/binio.hpp"
#include "metaemb/error.hpp"
#include "metaemb/parallel.hpp"
#include "metaemb/rng.hpp"

namespace metaemb {
namespace {

constexpr char kWeightsMagic[8] = {'M', 'E', 'M', 'B', 'W', 'T', 'S', '1'};
constexpr std::uint32_t kWeightsVersion = 1;

// Maximum union-neighbourhood size the exact solver will accept; the dense
// normal system is quadratic in this number.
constexpr std::size_t kExactSupportCap = 5000;

// Everything needed to evaluate one word's distortion: for each source that
// covers the word, the target vector and its neighbour vectors as columns,
// plus each column's position in the word's union support.
struct SourceBlock {
    int source = 0;
    Eigen::VectorXd target;
    Eigen::MatrixXd neighbours;  // d_i x |N_i(v)|
    std::vector<int> pos;        // column j corresponds to support[pos[j]]
};

struct WordProblem {
    std::vector<std::uint32_t> support;  // sorted ascending
    std::vector<SourceBlock> blocks;
};

WordProblem build_problem(const std::vector<EmbeddingSet>& sets,
                          const SourceMembership& membership,
                          const NeighbourhoodGraph& graph, std::uint32_t word) {
    WordProblem problem;
    const std::size_t num_sources = graph.source_count();
    for (std::size_t s = 0; s < num_sources; ++s) {
        const auto& list = graph.lists[s][word];
        problem.support.insert(problem.support.end(), list.begin(), list.end());
    }
    std::sort(problem.support.begin(), problem.support.end());
    problem.support.erase(
        std::unique(problem.support.begin(), problem.support.end()),
        problem.support.end());

    for (std::size_t s = 0; s < num_sources; ++s) {
        const auto& list = graph.lists[s][word];
        if (list.empty()) continue;
        const std::int64_t target_row = membership.row_of[s][word];
        if (target_row < 0) {
            throw Error("word " + std::to_string(word) +
                            " has neighbours in source " + sets[s].name +
                            " but is not covered by it",
                        "recon");
        }
        SourceBlock block;
        block.source = static_cast<int>(s);
        block.target = sets[s].row(static_cast<std::uint32_t>(target_row));
        block.neighbours.resize(sets[s].dim, static_cast<Eigen::Index>(list.size()));
        block.pos.resize(list.size());
        for (std::size_t j = 0; j < list.size(); ++j) {
            const std::int64_t row = membership.row_of[s][list[j]];
            if (row < 0) {
                throw Error("neighbour " + std::to_string(list[j]) +
                                " of word " + std::to_string(word) +
                                " is not covered by source " + sets[s].name,
                            "recon");
            }
            block.neighbours.col(static_cast<Eigen::Index>(j)) =
                sets[s].row(static_cast<std::uint32_t>(row));
            const auto it = std::lower_bound(problem.support.begin(),
                                             problem.support.end(), list[j]);
            block.pos[j] = static_cast<int>(it - problem.support.begin());
        }
        problem.blocks.push_back(std::move(block));
    }
    return problem;
}

// Distortion of one word given coefficients over its support.
double word_phi(const WordProblem& problem, const Eigen::VectorXd& w) {
    double phi = 0.0;
    for (const auto& block : problem.blocks) {
        Eigen::VectorXd residual = block.target;
        for (std::size_t j = 0; j < block.pos.size(); ++j) {
            residual.noalias() -=
                w[block.pos[j]] * block.neighbours.col(static_cast<Eigen::Index>(j));
        }
        phi += residual.squaredNorm();
    }
    return phi;
}

// Gradient of the word distortion with respect to the support coefficients.
void word_gradient(const WordProblem& problem, const Eigen::VectorXd& w,
                   Eigen::VectorXd& grad) {
    grad.setZero();
    for (const auto& block : problem.blocks) {
        Eigen::VectorXd residual = block.target;
        for (std::size_t j = 0; j < block.pos.size(); ++j) {
            residual.noalias() -=
                w[block.pos[j]] * block.neighbours.col(static_cast<Eigen::Index>(j));
        }
        for (std::size_t j = 0; j < block.pos.size(); ++j) {
            grad[block.pos[j]] -=
                2.0 * residual.dot(block.neighbours.col(static_cast<Eigen::Index>(j)));
        }
    }
}

// Coefficient vector over the problem's support taken from a weight row.
// Row ids outside the support indicate a stale graph and are rejected.
Eigen::VectorXd row_coefficients(const WordProblem& problem,
                                 const std::vector<WeightEntry>& row,
                                 std::uint32_t word) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(problem.support.size()));
    for (const auto& entry : row) {
        const auto it = std::lower_bound(problem.support.begin(),
                                         problem.support.end(), entry.id);
        if (it == problem.support.end() || *it != entry.id) {
            throw Error("weight row for word " + std::to_string(word) +
                            " references id " + std::to_string(entry.id) +
                            " outside its neighbourhood",
                        "recon");
        }
        w[it - problem.support.begin()] = entry.weight;
    }
    return w;
}

std::vector<WeightEntry> make_row(const WordProblem& problem,
                                  const Eigen::VectorXd& w) {
    std::vector<WeightEntry> row(problem.support.size());
    for (std::size_t p = 0; p < problem.support.size(); ++p) {
        row[p] = WeightEntry{problem.support[p], w[static_cast<Eigen::Index>(p)]};
    }
    return row;
}

void normalize_row(Eigen::VectorXd& w, std::uint32_t word) {
    const double sum = w.sum();
    if (!std::isfinite(sum) || std::abs(sum) < 1e-12) {
        throw Error("weight sum for word " + std::to_string(word) +
                        " is degenerate (|sum| < 1e-12); cannot normalise",
                    "recon");
    }
    w /= sum;
}

void check_graph_shape(const std::vector<EmbeddingSet>& sets,
                       const SourceMembership& membership,
                       const NeighbourhoodGraph& graph) {
    if (sets.size() != graph.source_count() ||
        sets.size() != membership.source_count()) {
        throw Error("source count mismatch between embeddings, membership and "
                    "neighbourhood graph",
                    "recon");
    }
    if (membership.covered.empty() ||
        graph.word_count() != membership.covered[0].size()) {
        throw Error("word count mismatch between membership and neighbourhood "
                    "graph",
                    "recon");
    }
}

}  // namespace

double reconstruction_error(const SparseWeights& weights,
                            const std::vector<EmbeddingSet>& sets,
                            const SourceMembership& membership,
                            const NeighbourhoodGraph& graph) {
    check_graph_shape(sets, membership, graph);
    if (weights.rows.size() != graph.word_count()) {
        throw Error("weight table does not cover the union vocabulary", "recon");
    }
    double total = 0.0;
    for (std::uint32_t v = 0; v < weights.rows.size(); ++v) {
        const WordProblem problem = build_problem(sets, membership, graph, v);
        if (problem.support.empty()) continue;
        const Eigen::VectorXd w = row_coefficients(problem, weights.rows[v], v);
        total += word_phi(problem, w);
    }
    return total;
}

double error_gradient(const SparseWeights& weights,
                      const std::vector<EmbeddingSet>& sets,
                      const SourceMembership& membership,
                      const NeighbourhoodGraph& graph,
                      std::uint32_t word, std::uint32_t neighbour) {
    check_graph_shape(sets, membership, graph);
    if (word >= graph.word_count()) {
        throw Error("word id " + std::to_string(word) + " out of range", "recon");
    }
    const WordProblem problem = build_problem(sets, membership, graph, word);
    const auto it = std::lower_bound(problem.support.begin(),
                                     problem.support.end(), neighbour);
    if (it == problem.support.end() || *it != neighbour) {
        throw Error("id " + std::to_string(neighbour) +
                        " is not a neighbour of word " + std::to_string(word),
                    "recon");
    }
    const Eigen::VectorXd w = row_coefficients(problem, weights.rows[word], word);
    Eigen::VectorXd grad(w.size());
    word_gradient(problem, w, grad);
    return grad[it - problem.support.begin()];
}

SparseWeights fit_weights_sgd(const std::vector<EmbeddingSet>& sets,
                              const SourceMembership& membership,
                              const NeighbourhoodGraph& graph,
                              const SolverConfig& config,
                              FitStats* stats, int threads) {
    check_graph_shape(sets, membership, graph);
    const std::size_t words = graph.word_count();
    SparseWeights weights;
    weights.rows.resize(words);

    std::vector<std::uint32_t> iters_used(words, 0);
    std::vector<std::uint8_t> diverged(words, 0);
    std::vector<std::uint8_t> capped(words, 0);

    parallel_for(std::size_t{0}, words, threads, [&](std::size_t v) {
        const std::uint32_t word = static_cast<std::uint32_t>(v);
        const WordProblem problem =
            build_problem(sets, membership, graph, word);
        const std::size_t m = problem.support.size();
        if (m == 0) return;  // no neighbour support; row stays empty

        // Start near the feasible simplex: entries uniform on (0, 2/m) have
        // unit expected sum, which keeps early AdaGrad steps well scaled.
        auto rng = make_engine(config.seed, "recon-sgd", word);
        std::uniform_real_distribution<double> init(0.0, 2.0 / static_cast<double>(m));
        Eigen::VectorXd w(static_cast<Eigen::Index>(m));
        for (std::size_t p = 0; p < m; ++p) {
            w[static_cast<Eigen::Index>(p)] = init(rng);
        }

        Eigen::VectorXd grad(w.size());
        Eigen::VectorXd accum = Eigen::VectorXd::Zero(w.size());
        double phi_prev = word_phi(problem, w);
        for (int iter = 0; iter < config.max_iters; ++iter) {
            word_gradient(problem, w, grad);
            accum.array() += grad.array().square();
            w.array() -= config.learning_rate * grad.array() /
                         (accum.array().sqrt() + config.adagrad_epsilon);
            const double phi = word_phi(problem, w);
            if (!std::isfinite(phi)) {
                throw Error("distortion diverged to a non-finite value for "
                            "word " + std::to_string(word),
                            "recon");
            }
            iters_used[v] = static_cast<std::uint32_t>(iter + 1);
            if (iter >= 10 && phi > phi_prev + 1e-9) diverged[v] = 1;
            if (phi_prev - phi < config.tolerance * std::max(phi_prev, 1e-300)) {
                phi_prev = phi;
                break;
            }
            phi_prev = phi;
        }
        if (iters_used[v] == static_cast<std::uint32_t>(config.max_iters)) {
            capped[v] = 1;
        }
        normalize_row(w, word);
        weights.rows[v] = make_row(problem, w);
    });

    if (stats != nullptr) {
        stats->words = words;
        stats->total_iters = 0;
        stats->diverged_words = 0;
        stats->hit_iter_cap = 0;
        for (std::size_t v = 0; v < words; ++v) {
            stats->total_iters += iters_used[v];
            stats->diverged_words += diverged[v];
            stats->hit_iter_cap += capped[v];
        }
    }
    return weights;
}

SparseWeights fit_weights_exact(const std::vector<EmbeddingSet>& sets,
                                const SourceMembership& membership,
                                const NeighbourhoodGraph& graph,
                                int threads) {
    check_graph_shape(sets, membership, graph);
    const std::size_t words = graph.word_count();
    SparseWeights weights;
    weights.rows.resize(words);

    parallel_for(std::size_t{0}, words, threads, [&](std::size_t v) {
        const std::uint32_t word = static_cast<std::uint32_t>(v);
        const WordProblem problem =
            build_problem(sets, membership, graph, word);
        const std::size_t m = problem.support.size();
        if (m == 0) return;
        if (m > kExactSupportCap) {
            throw Error("union neighbourhood of word " + std::to_string(word) +
                            " has " + std::to_string(m) +
                            " entries; exact solver caps at " +
                            std::to_string(kExactSupportCap),
                        "recon");
        }

        // On the unit-sum manifold each source's residual is a combination of
        // the neighbour residuals v - u, so the distortion is the quadratic
        // form of their summed Gram matrix G. Solve (G + lambda I) w = 1 and
        // rescale to sum one.
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                  static_cast<Eigen::Index>(m));
        for (const auto& block : problem.blocks) {
            const Eigen::Index cols = block.neighbours.cols();
            Eigen::MatrixXd residuals =
                (-block.neighbours).colwise() + block.target;
            Eigen::MatrixXd gram(cols, cols);
            gram.noalias() = residuals.transpose() * residuals;
            for (Eigen::Index j = 0; j < cols; ++j) {
                const int pj = block.pos[static_cast<std::size_t>(j)];
                for (Eigen::Index l = 0; l < cols; ++l) {
                    G(pj, block.pos[static_cast<std::size_t>(l)]) += gram(j, l);
                }
            }
        }

        // Ridge term scaled by the mean diagonal keeps the conditioning fix
        // invariant under a global rescaling of the vectors, and breaks the
        // degeneracy of duplicate neighbours towards the equal split.
        double lambda = 1e-8 * G.trace() / static_cast<double>(m);
        if (!(lambda > 0.0)) lambda = 1e-8;
        G.diagonal().array() += lambda;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
        if (ldlt.info() != Eigen::Success) {
            throw Error("residual Gram system for word " + std::to_string(word) +
                            " is singular even after regularisation",
                        "recon");
        }
        Eigen::VectorXd w = ldlt.solve(
            Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m)));
        if (!w.allFinite()) {
            throw Error("residual Gram system for word " + std::to_string(word) +
                            " is singular even after regularisation",
                        "recon");
        }
        normalize_row(w, word);
        weights.rows[v] = make_row(problem, w);
    });
    return weights;
}

void save_weights(const SparseWeights& weights, const std::string& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        out.write(kWeightsMagic, sizeof(kWeightsMagic));
        write_pod<std::uint32_t>(out, kWeightsVersion);
        write_pod<std::uint64_t>(out, weights.rows.size());
        for (const auto& row : weights.rows) {
            write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(row.size()));
            for (const auto& entry : row) {
                write_pod<std::uint32_t>(out, entry.id);
                write_pod<double>(out, entry.weight);
            }
        }
    });
}

SparseWeights load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open weights file: " + path, "recon");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kWeightsMagic, sizeof(magic)) != 0) {
        throw Error("not a weights file: " + path, "recon");
    }
    auto version = read_pod<std::uint32_t>(in, "weights version");
    if (version != kWeightsVersion) {
        throw Error("unsupported weights file version in " + path, "recon");
    }
    auto words = read_pod<std::uint64_t>(in, "word count");
    SparseWeights weights;
    weights.rows.resize(words);
    for (std::uint64_t v = 0; v < words; ++v) {
        auto count = read_pod<std::uint32_t>(in, "row size");
        auto& row = weights.rows[v];
        row.resize(count);
        for (std::uint32_t j = 0; j < count; ++j) {
            row[j].id = read_pod<std::uint32_t>(in, "neighbour id");
            row[j].weight = read_pod<double>(in, "weight");
        }
    }
    return weights;
}

void dump_weights_text(const SparseWeights& weights, const Vocabulary& vocab,
                       const std::string& path) {
    if (weights.rows.size() != vocab.size()) {
        throw Error("weight table and vocabulary sizes differ", "recon");
    }
    atomic_write_file(path, [&](std::ostream& out) {
        char buf[64];
        for (std::uint32_t v = 0; v < weights.rows.size(); ++v) {
            out << vocab.word(v);
            for (const auto& entry : weights.rows[v]) {
                std::snprintf(buf, sizeof(buf), ":%.9g", entry.weight);
                out << ' ' << vocab.word(entry.id) << buf;
            }
            out << '\n';
        }
    });
}

}  // namespace metaemb
