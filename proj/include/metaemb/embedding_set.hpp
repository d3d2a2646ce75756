// Source embedding tables: text/binary loading, unit normalisation, the
// union vocabulary, and per-source coverage masks.
//
// Vector tables are stored in float32; solver code promotes rows to double.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "metaemb/vocab.hpp"

namespace metaemb {

using MatrixXfRow = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct EmbeddingSet {
    std::string name;
    int dim = 0;
    Vocabulary vocab;
    MatrixXfRow vectors;  // vocab.size() x dim, row per word
    bool unit_normalized = false;

    std::size_t size() const { return vocab.size(); }

    // Row promoted to double for solver arithmetic.
    Eigen::VectorXd row(std::uint32_t i) const {
        return vectors.row(i).cast<double>();
    }
};

enum class EmbFormat { word2vec_text, glove_text, cache_binary };

EmbFormat parse_format(const std::string& name);
const char* format_name(EmbFormat f);

struct LoadStats {
    std::size_t lines_read = 0;
    std::size_t duplicates_dropped = 0;  // keep-first policy
};

// Loads one embedding file. word2vec-text expects an "n d" header line,
// glove-text infers dim from the first row, cache-binary is our own format.
EmbeddingSet load_embeddings(const std::string& path, EmbFormat format,
                             const std::string& name = "", LoadStats* stats = nullptr);

// Divides every row by its l2 norm. A zero-norm row is an error naming the token.
EmbeddingSet l2_normalize(EmbeddingSet set);

// Per-source coverage of the union vocabulary.
struct SourceMembership {
    // covered[s][union_id] — 1 when source s has a row for that word
    std::vector<std::vector<std::uint8_t>> covered;
    // row_of[s][union_id] — row index in source s, or -1 when absent
    std::vector<std::vector<std::int32_t>> row_of;

    std::size_t source_count() const { return covered.size(); }
    bool covers(std::size_t source, std::uint32_t union_id) const {
        return covered[source][union_id] != 0;
    }
};

// Union vocabulary ordered by first appearance across sets in the given order.
std::pair<std::shared_ptr<const Vocabulary>, SourceMembership>
union_vocab(const std::vector<EmbeddingSet>& sets);

// Self-describing binary cache; round-trips words, order and vectors bit-exactly.
void save_cache(const EmbeddingSet& set, const std::string& path);

// Headerless "token v1 .. vd" rows, floats printed with round-trip precision.
void save_glove_text(const EmbeddingSet& set, const std::string& path);

}  // namespace metaemb
