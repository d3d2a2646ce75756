#include "metaemb/embedding_set.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "metaemb/binio.hpp"

namespace metaemb {

namespace {

constexpr char kCacheMagic[8] = {'M', 'E', 'M', 'B', 'C', 'C', 'H', '1'};
constexpr std::uint32_t kCacheVersion = 1;

std::string default_name(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

// Splits a line on single spaces/tabs; empty fields collapse.
void split_fields(const std::string& line, std::vector<std::string_view>& out) {
    out.clear();
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
        while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
        const char* start = p;
        while (p < end && *p != ' ' && *p != '\t' && *p != '\r') ++p;
        if (p > start) out.emplace_back(start, static_cast<std::size_t>(p - start));
    }
}

float parse_float_field(std::string_view field, const std::string& path, std::size_t line_no) {
    float value = 0.0f;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError(path, line_no, "unparsable float '" + std::string(field) + "'");
    if (!std::isfinite(value))
        throw ParseError(path, line_no, "non-finite value '" + std::string(field) + "'");
    return value;
}

EmbeddingSet load_text(const std::string& path, EmbFormat format,
                       const std::string& name, LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embedding file: " + path);

    EmbeddingSet set;
    set.name = name.empty() ? default_name(path) : name;

    std::string line;
    std::vector<std::string_view> fields;
    std::size_t line_no = 0;
    std::size_t declared_rows = 0;

    if (format == EmbFormat::word2vec_text) {
        if (!std::getline(in, line)) throw Error("empty embedding file: " + path);
        ++line_no;
        split_fields(line, fields);
        if (fields.size() != 2)
            throw ParseError(path, line_no, "expected 'count dim' header");
        std::size_t n = 0;
        int d = 0;
        auto r1 = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), n);
        auto r2 = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), d);
        if (r1.ec != std::errc() || r2.ec != std::errc() || d <= 0)
            throw ParseError(path, line_no, "bad header values");
        declared_rows = n;
        set.dim = d;
    }

    std::vector<float> data;
    std::vector<std::uint32_t> keep_rows;  // provisional row -> kept slot, for duplicates
    std::size_t rows = 0;
    LoadStats local;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        split_fields(line, fields);
        if (fields.empty()) continue;
        if (set.dim == 0) {
            // glove-text: dim inferred from the first data line
            if (fields.size() < 2)
                throw ParseError(path, line_no, "expected token followed by floats");
            set.dim = static_cast<int>(fields.size()) - 1;
        }
        if (static_cast<int>(fields.size()) != set.dim + 1)
            throw ParseError(path, line_no,
                             "expected 1 token + " + std::to_string(set.dim) +
                                 " floats, got " + std::to_string(fields.size()) + " fields");
        std::string token(fields[0]);
        if (set.vocab.contains(token)) {
            ++local.duplicates_dropped;
            ++local.lines_read;
            continue;
        }
        set.vocab.add(token);
        for (int j = 0; j < set.dim; ++j)
            data.push_back(parse_float_field(fields[static_cast<std::size_t>(j) + 1], path, line_no));
        ++rows;
        ++local.lines_read;
        if (declared_rows != 0 && local.lines_read > declared_rows)
            throw ParseError(path, line_no, "more rows than declared in header");
    }

    if (rows == 0) throw Error("empty embedding file: " + path);
    if (declared_rows != 0 && local.lines_read < declared_rows)
        throw Error(path + ": header declares " + std::to_string(declared_rows) +
                    " rows but file has " + std::to_string(local.lines_read));

    set.vectors = Eigen::Map<MatrixXfRow>(data.data(), static_cast<Eigen::Index>(rows), set.dim);
    if (local.duplicates_dropped > 0)
        std::fprintf(stderr, "warning: %s: %zu duplicate token(s) dropped (kept first)\n",
                     path.c_str(), local.duplicates_dropped);
    if (stats) *stats = local;
    return set;
}

EmbeddingSet load_cache(const std::string& path, const std::string& name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open cache file: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
        throw Error("cache format/version mismatch: " + path);
    auto version = read_pod<std::uint32_t>(in, "cache version");
    if (version != kCacheVersion)
        throw Error("cache format/version mismatch: " + path + " (version " +
                    std::to_string(version) + ")");

    EmbeddingSet set;
    auto n = read_pod<std::uint64_t>(in, "row count");
    auto d = read_pod<std::uint32_t>(in, "dim");
    auto flags = read_pod<std::uint8_t>(in, "flags");
    set.dim = static_cast<int>(d);
    set.unit_normalized = (flags & 1) != 0;
    std::string stored_name = read_string(in, "set name");
    set.name = name.empty() ? stored_name : name;
    for (std::uint64_t i = 0; i < n; ++i) set.vocab.add(read_string(in, "token"));
    if (set.vocab.size() != n)
        throw Error("cache contains duplicate tokens: " + path);
    set.vectors.resize(static_cast<Eigen::Index>(n), set.dim);
    in.read(reinterpret_cast<char*>(set.vectors.data()),
            static_cast<std::streamsize>(n * d * sizeof(float)));
    if (!in) throw Error("truncated cache file: " + path);
    return set;
}

}  // namespace

EmbFormat parse_format(const std::string& name) {
    if (name == "word2vec-text") return EmbFormat::word2vec_text;
    if (name == "glove-text") return EmbFormat::glove_text;
    if (name == "cache-binary") return EmbFormat::cache_binary;
    throw Error("unknown embedding format '" + name +
                "' (expected word2vec-text, glove-text or cache-binary)");
}

const char* format_name(EmbFormat f) {
    switch (f) {
        case EmbFormat::word2vec_text: return "word2vec-text";
        case EmbFormat::glove_text: return "glove-text";
        case EmbFormat::cache_binary: return "cache-binary";
    }
    return "?";
}

EmbeddingSet load_embeddings(const std::string& path, EmbFormat format,
                             const std::string& name, LoadStats* stats) {
    if (format == EmbFormat::cache_binary) {
        if (stats) *stats = LoadStats{};
        return load_cache(path, name);
    }
    return load_text(path, format, name, stats);
}

EmbeddingSet l2_normalize(EmbeddingSet set) {
    for (Eigen::Index i = 0; i < set.vectors.rows(); ++i) {
        double norm = set.vectors.row(i).cast<double>().norm();
        if (norm == 0.0)
            throw Error("zero-norm row for token '" +
                        set.vocab.word(static_cast<std::uint32_t>(i)) + "' in set " + set.name);
        set.vectors.row(i) = (set.vectors.row(i).cast<double>() / norm).cast<float>();
    }
    set.unit_normalized = true;
    return set;
}

std::pair<std::shared_ptr<const Vocabulary>, SourceMembership>
union_vocab(const std::vector<EmbeddingSet>& sets) {
    if (sets.empty()) throw Error("union_vocab requires at least one embedding set");
    auto vocab = std::make_shared<Vocabulary>();
    for (const auto& set : sets)
        for (const auto& w : set.vocab.words()) vocab->add(w);

    SourceMembership membership;
    const std::size_t n = vocab->size();
    membership.covered.assign(sets.size(), std::vector<std::uint8_t>(n, 0));
    membership.row_of.assign(sets.size(), std::vector<std::int32_t>(n, -1));
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto& words = sets[s].vocab.words();
        for (std::size_t r = 0; r < words.size(); ++r) {
            std::uint32_t id = *vocab->lookup(words[r]);
            membership.covered[s][id] = 1;
            membership.row_of[s][id] = static_cast<std::int32_t>(r);
        }
    }
    return {std::move(vocab), std::move(membership)};
}

void save_cache(const EmbeddingSet& set, const std::string& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        out.write(kCacheMagic, sizeof(kCacheMagic));
        write_pod<std::uint32_t>(out, kCacheVersion);
        write_pod<std::uint64_t>(out, set.vocab.size());
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim));
        write_pod<std::uint8_t>(out, set.unit_normalized ? 1 : 0);
        write_string(out, set.name);
        for (const auto& w : set.vocab.words()) write_string(out, w);
        out.write(reinterpret_cast<const char*>(set.vectors.data()),
                  static_cast<std::streamsize>(set.vocab.size() *
                                               static_cast<std::size_t>(set.dim) * sizeof(float)));
    });
}

void save_glove_text(const EmbeddingSet& set, const std::string& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        char buf[64];
        for (std::size_t i = 0; i < set.vocab.size(); ++i) {
            out << set.vocab.word(static_cast<std::uint32_t>(i));
            for (int j = 0; j < set.dim; ++j) {
                // %.9g round-trips float32 exactly
                std::snprintf(buf, sizeof(buf), " %.9g",
                              static_cast<double>(set.vectors(static_cast<Eigen::Index>(i), j)));
                out << buf;
            }
            out << '\n';
        }
    });
}

}  // namespace metaemb
