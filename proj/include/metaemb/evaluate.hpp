// The four evaluation protocols: word-similarity Spearman correlation,
// CosAdd analogy accuracy, leave-one-out offset-based relation
// classification, and centroid + logistic-regression text classification.
//
// Words missing from the embedding are skipped and reported through coverage
// figures rather than scored as failures.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metaemb/datasets.hpp"
#include "metaemb/embedding_set.hpp"

namespace metaemb {

// Spearman rank correlation with average ranks over ties. Errors when either
// input has zero rank variance (the correlation is undefined there).
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

struct SimilarityResult {
    double rho = 0.0;
    double coverage = 0.0;  // evaluated / total pairs
    std::size_t evaluated = 0;
    std::size_t total = 0;
};

SimilarityResult eval_similarity(const EmbeddingSet& emb,
                                 const SimilarityDataset& ds);

// "a is to b as c is to ?" — the vocabulary entry (excluding a, b, c) whose
// cosine with b - a + c is largest; ties resolved towards the smaller id.
std::string cosadd(const EmbeddingSet& emb, const std::string& a,
                   const std::string& b, const std::string& c);

struct AnalogyResult {
    bool defined = false;  // false when no question had full coverage
    double accuracy = 0.0;
    double coverage = 0.0;
    std::size_t evaluated = 0;
    std::size_t total = 0;
};

AnalogyResult eval_analogy(const EmbeddingSet& emb, const AnalogyDataset& ds,
                           int threads = 1);

struct RelationResult {
    double accuracy = 0.0;
    double coverage = 0.0;
    std::size_t evaluated = 0;
    std::size_t total = 0;
    std::size_t zero_offset_skipped = 0;
};

// Leave-one-out 1-nearest-neighbour over offset vectors word2 - word1,
// compared by cosine; micro-averaged accuracy.
RelationResult eval_relation(const EmbeddingSet& emb, const RelationDataset& ds,
                             int threads = 1);

struct TextResult {
    double accuracy = 0.0;
    double chosen_reg = 0.0;
    std::size_t train_docs = 0;
    std::size_t test_docs = 0;
};

// Document vector = centroid of in-vocabulary token vectors (zero when none).
// An l2-regularised logistic regression is trained by full-batch gradient
// descent; the regulariser strength is picked by k-fold cross-validation on
// the training split (folds assigned round-robin by document index, ties in
// validation accuracy go to the earlier grid entry).
TextResult eval_text(const EmbeddingSet& emb, const TextDataset& ds,
                     int folds = 5, std::vector<double> reg_grid = {},
                     int threads = 1);

}  // namespace metaemb
