// Benchmark dataset containers and text-format parsers.
//
// Formats: similarity files are whitespace-separated "w1 w2 score" lines with
// '#' comments; analogy files follow the Google questions-words layout
// (": section" headers, four tokens per line); relation files are plain
// three-field CSV "relation,word1,word2" (no quoting); text-classification
// files carry one "label<TAB>text" document per line with binary labels.
#pragma once

#include <string>
#include <vector>

namespace metaemb {

struct SimilarityPair {
    std::string word1;
    std::string word2;
    double score = 0.0;
};

struct SimilarityDataset {
    std::vector<SimilarityPair> pairs;
};

struct AnalogyQuestion {
    std::string a, b, c, d;
    std::string section;
};

struct AnalogyDataset {
    std::vector<AnalogyQuestion> questions;
};

struct RelationTriple {
    std::string relation;
    std::string word1;
    std::string word2;
};

struct RelationDataset {
    std::vector<RelationTriple> triples;
};

struct TextDoc {
    int label = 0;  // 0 or 1
    std::vector<std::string> tokens;
};

struct TextDataset {
    std::vector<TextDoc> train;
    std::vector<TextDoc> test;
};

SimilarityDataset parse_similarity(const std::string& path);
AnalogyDataset parse_analogy(const std::string& path);
RelationDataset parse_relation(const std::string& path);

// Lowercases and splits on non-alphanumeric runs.
std::vector<std::string> tokenize_text(const std::string& text);

std::vector<TextDoc> parse_text_file(const std::string& path);
TextDataset parse_text(const std::string& train_path,
                       const std::string& test_path);

}  // namespace metaemb
