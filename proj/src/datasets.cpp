#include "metaemb/datasets.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "metaemb/error.hpp"

namespace metaemb {
namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() &&
               (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) {
            ++i;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' &&
               line[i] != '\r') {
            ++i;
        }
        if (i > start) fields.emplace_back(line.substr(start, i - start));
    }
    return fields;
}

double parse_score(const std::string& field, const std::string& path,
                   std::size_t line_no) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw ParseError(path, line_no, "bad score '" + field + "'");
    }
    return value;
}

std::ifstream open_text(const std::string& path, const char* kind) {
    std::ifstream in(path);
    if (!in) {
        throw Error(std::string("cannot open ") + kind + " file: " + path,
                    "evalsuite");
    }
    return in;
}

bool blank_or_comment(const std::string& line) {
    for (char ch : line) {
        if (ch == ' ' || ch == '\t' || ch == '\r') continue;
        return ch == '#';
    }
    return true;
}

}  // namespace

SimilarityDataset parse_similarity(const std::string& path) {
    std::ifstream in = open_text(path, "similarity");
    SimilarityDataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank_or_comment(line)) continue;
        const auto fields = split_ws(line);
        if (fields.size() != 3) {
            throw ParseError(path, line_no,
                             "expected 'word1 word2 score', got " +
                                 std::to_string(fields.size()) + " fields");
        }
        ds.pairs.push_back(SimilarityPair{
            fields[0], fields[1], parse_score(fields[2], path, line_no)});
    }
    if (ds.pairs.empty()) {
        throw Error("no scored pairs in " + path, "evalsuite");
    }
    return ds;
}

AnalogyDataset parse_analogy(const std::string& path) {
    std::ifstream in = open_text(path, "analogy");
    AnalogyDataset ds;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank_or_comment(line)) continue;
        const auto fields = split_ws(line);
        if (!fields.empty() && fields[0] == ":") {
            section.clear();
            for (std::size_t i = 1; i < fields.size(); ++i) {
                if (i > 1) section += ' ';
                section += fields[i];
            }
            continue;
        }
        if (fields.size() != 4) {
            throw ParseError(path, line_no,
                             "expected four tokens, got " +
                                 std::to_string(fields.size()));
        }
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = i + 1; j < 4; ++j) {
                if (fields[i] == fields[j]) {
                    throw ParseError(path, line_no,
                                     "repeated token '" + fields[i] +
                                         "' in analogy question");
                }
            }
        }
        ds.questions.push_back(AnalogyQuestion{fields[0], fields[1], fields[2],
                                               fields[3], section});
    }
    if (ds.questions.empty()) {
        throw Error("no analogy questions in " + path, "evalsuite");
    }
    return ds;
}

RelationDataset parse_relation(const std::string& path) {
    std::ifstream in = open_text(path, "relation");
    RelationDataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank_or_comment(line)) continue;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
            line.pop_back();
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                fields.emplace_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty() ||
            fields[2].empty()) {
            throw ParseError(path, line_no,
                             "expected 'relation,word1,word2'");
        }
        ds.triples.push_back(RelationTriple{fields[0], fields[1], fields[2]});
    }
    if (ds.triples.size() < 2) {
        throw Error("need at least two relation triples in " + path,
                    "evalsuite");
    }
    std::map<std::string, std::size_t> members;
    for (const auto& t : ds.triples) ++members[t.relation];
    bool has_pair = false;
    for (const auto& [rel, count] : members) {
        if (count >= 2) {
            has_pair = true;
            break;
        }
    }
    if (!has_pair) {
        throw Error("no relation in " + path +
                        " has two members; nearest-neighbour classification "
                        "is undefined",
                    "evalsuite");
    }
    return ds;
}

std::vector<std::string> tokenize_text(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        const auto uc = static_cast<unsigned char>(ch);
        if (std::isalnum(uc)) {
            current.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<TextDoc> parse_text_file(const std::string& path) {
    std::ifstream in = open_text(path, "text");
    std::vector<TextDoc> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(path, line_no, "expected 'label<TAB>text'");
        }
        const std::string label = line.substr(0, tab);
        if (label != "0" && label != "1") {
            throw ParseError(path, line_no,
                             "label must be 0 or 1, got '" + label + "'");
        }
        TextDoc doc;
        doc.label = label == "1" ? 1 : 0;
        doc.tokens = tokenize_text(line.substr(tab + 1));
        docs.push_back(std::move(doc));
    }
    if (docs.empty()) throw Error("no documents in " + path, "evalsuite");
    return docs;
}

TextDataset parse_text(const std::string& train_path,
                       const std::string& test_path) {
    TextDataset ds;
    ds.train = parse_text_file(train_path);
    ds.test = parse_text_file(test_path);
    bool has0 = false, has1 = false;
    for (const auto& doc : ds.train) {
        (doc.label == 0 ? has0 : has1) = true;
    }
    if (!has0 || !has1) {
        throw Error("training split " + train_path +
                        " does not contain both classes",
                    "evalsuite");
    }
    return ds;
}

}  // namespace metaemb
