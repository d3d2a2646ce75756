#include "metaemb/synthetic.hpp"

#include <cstdio>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "metaemb/error.hpp"
#include "metaemb/rng.hpp"

namespace metaemb {
namespace {

std::string word_token(std::size_t id, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "w%0*zu", width, id);
    return std::string(buf);
}

// Random latent_dim x dim matrix with orthonormal rows: thin QR of a Gaussian
// dim x latent_dim matrix, transposed.
Eigen::MatrixXd orthonormal_map(int latent_dim, int dim, std::uint64_t seed,
                                std::size_t source) {
    auto rng = make_engine(seed, "syn-map", source);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(dim, latent_dim);
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
        for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = gauss(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd thin_q =
        qr.householderQ() * Eigen::MatrixXd::Identity(dim, latent_dim);
    return thin_q.transpose();
}

}  // namespace

SyntheticData make_synthetic(std::size_t n, int latent_dim,
                             const std::vector<SourceSpec>& specs,
                             std::uint64_t seed) {
    if (n == 0) throw Error("need at least one word", "synthetic");
    if (latent_dim < 1) throw Error("latent dimension must be positive", "synthetic");
    if (specs.empty()) throw Error("need at least one source spec", "synthetic");
    for (std::size_t s = 0; s < specs.size(); ++s) {
        if (specs[s].dim < latent_dim) {
            throw Error("source " + std::to_string(s) + " dimension " +
                            std::to_string(specs[s].dim) +
                            " is below the latent dimension " +
                            std::to_string(latent_dim),
                        "synthetic");
        }
        if (!(specs[s].coverage > 0.0) || specs[s].coverage > 1.0) {
            throw Error("source " + std::to_string(s) +
                            " coverage must lie in (0, 1]",
                        "synthetic");
        }
        if (specs[s].noise_sigma < 0.0) {
            throw Error("source " + std::to_string(s) +
                            " noise sigma must be non-negative",
                        "synthetic");
        }
    }

    int width = 1;
    for (std::size_t v = n - 1; v >= 10; v /= 10) ++width;

    // Latent rows, one substream per word.
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), latent_dim);
    SyntheticData data;
    data.latent.name = "latent";
    data.latent.dim = latent_dim;
    for (std::size_t v = 0; v < n; ++v) {
        auto rng = make_engine(seed, "syn-latent", v);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int c = 0; c < latent_dim; ++c) {
            z(static_cast<Eigen::Index>(v), c) = gauss(rng);
        }
        data.latent.vocab.add(word_token(v, width));
    }
    data.latent.vectors = z.cast<float>();

    // Coverage flags, with every word forced into at least one source.
    const std::size_t num_sources = specs.size();
    std::vector<std::vector<std::uint8_t>> keep(
        num_sources, std::vector<std::uint8_t>(n, 0));
    for (std::size_t v = 0; v < n; ++v) {
        bool anywhere = false;
        for (std::size_t s = 0; s < num_sources; ++s) {
            const std::string stage = "syn-cover-" + std::to_string(s);
            auto rng = make_engine(seed, stage.c_str(), v);
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            if (uni(rng) < specs[s].coverage) {
                keep[s][v] = 1;
                anywhere = true;
            }
        }
        if (!anywhere) keep[v % num_sources][v] = 1;
    }

    for (std::size_t s = 0; s < num_sources; ++s) {
        const Eigen::MatrixXd map = orthonormal_map(latent_dim, specs[s].dim,
                                                    seed, s);
        EmbeddingSet set;
        set.name = "src" + std::to_string(s);
        set.dim = specs[s].dim;
        std::vector<std::size_t> rows;
        for (std::size_t v = 0; v < n; ++v) {
            if (keep[s][v]) rows.push_back(v);
        }
        set.vectors.resize(static_cast<Eigen::Index>(rows.size()), specs[s].dim);
        const std::string noise_stage = "syn-noise-" + std::to_string(s);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const std::size_t v = rows[r];
            set.vocab.add(word_token(v, width));
            Eigen::VectorXd obs =
                map.transpose() * z.row(static_cast<Eigen::Index>(v)).transpose();
            if (specs[s].noise_sigma > 0.0) {
                auto rng = make_engine(seed, noise_stage.c_str(), v);
                std::normal_distribution<double> gauss(0.0, specs[s].noise_sigma);
                for (Eigen::Index c = 0; c < obs.size(); ++c) obs[c] += gauss(rng);
            }
            set.vectors.row(static_cast<Eigen::Index>(r)) =
                obs.transpose().cast<float>();
        }
        data.sources.push_back(std::move(set));
    }
    return data;
}

}  // namespace metaemb
