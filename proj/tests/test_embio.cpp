#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "metaemb/embedding_set.hpp"
#include "metaemb/error.hpp"
#include "oracles.hpp"

using metaemb::EmbFormat;
using metaemb::EmbeddingSet;
using metaemb::LoadStats;

namespace {

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("glove text loads the smallest well-formed file") {
    oracle::TempDir dir("embio");
    const auto path = dir.write("toy.txt", "a 1.0 0.0\nb 0.0 1.0\n");
    const EmbeddingSet set = metaemb::load_embeddings(path, EmbFormat::glove_text);
    CHECK(set.dim == 2);
    CHECK(set.size() == 2);
    CHECK(set.vocab.word(0) == "a");
    CHECK(set.vocab.word(1) == "b");
    CHECK(set.vectors(0, 0) == doctest::Approx(1.0));
    CHECK(set.vectors(1, 1) == doctest::Approx(1.0));
    CHECK_FALSE(set.unit_normalized);
}

TEST_CASE("word2vec text uses the header for dimensions") {
    oracle::TempDir dir("embio");
    const auto path =
        dir.write("w2v.txt", "2 3\nfoo 1 2 3\nbar 4 5 6\n");
    const EmbeddingSet set =
        metaemb::load_embeddings(path, EmbFormat::word2vec_text);
    CHECK(set.dim == 3);
    CHECK(set.size() == 2);
    CHECK(set.vectors(1, 2) == doctest::Approx(6.0f));
}

TEST_CASE("malformed inputs raise line-numbered errors") {
    oracle::TempDir dir("embio");

    SUBCASE("wrong field count") {
        const auto path = dir.write("bad.txt", "a 1.0 2.0\nb 3.0\n");
        try {
            metaemb::load_embeddings(path, EmbFormat::glove_text);
            FAIL("expected a parse error");
        } catch (const metaemb::ParseError& e) {
            CHECK(contains(e.what(), ":2:"));
        }
    }
    SUBCASE("unparsable float") {
        const auto path = dir.write("bad.txt", "a 1.0 oops\n");
        CHECK_THROWS_AS(metaemb::load_embeddings(path, EmbFormat::glove_text),
                        metaemb::ParseError);
    }
    SUBCASE("non-finite value") {
        const auto path = dir.write("bad.txt", "a 1.0 inf\n");
        CHECK_THROWS_AS(metaemb::load_embeddings(path, EmbFormat::glove_text),
                        metaemb::ParseError);
    }
    SUBCASE("empty file") {
        const auto path = dir.write("empty.txt", "");
        CHECK_THROWS_AS(metaemb::load_embeddings(path, EmbFormat::glove_text),
                        metaemb::Error);
    }
    SUBCASE("header row-count mismatch") {
        const auto path = dir.write("w2v.txt", "3 2\na 1 2\nb 3 4\n");
        CHECK_THROWS_AS(
            metaemb::load_embeddings(path, EmbFormat::word2vec_text),
            metaemb::Error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(metaemb::load_embeddings(dir.file("absent.txt"),
                                                 EmbFormat::glove_text),
                        metaemb::Error);
    }
}

TEST_CASE("duplicate tokens keep the first occurrence") {
    oracle::TempDir dir("embio");
    const auto path =
        dir.write("dup.txt", "a 1.0 0.0\na 9.0 9.0\nb 0.0 1.0\n");
    LoadStats stats;
    const EmbeddingSet set =
        metaemb::load_embeddings(path, EmbFormat::glove_text, "dup", &stats);
    CHECK(set.size() == 2);
    CHECK(stats.duplicates_dropped == 1);
    CHECK(set.vectors(0, 0) == doctest::Approx(1.0f));  // first row wins
}

TEST_CASE("l2_normalize rescales rows and keeps direction") {
    std::vector<std::string> toks{"a", "b", "c"};
    Eigen::MatrixXd rows(3, 3);
    rows << 3, 4, 0, 1, 0, 0, -2, 0, 0;
    EmbeddingSet set = metaemb::l2_normalize(oracle::make_set("t", toks, rows));
    CHECK(set.unit_normalized);
    CHECK(set.vectors(0, 0) == doctest::Approx(0.6));
    CHECK(set.vectors(0, 1) == doctest::Approx(0.8));
    CHECK(set.vectors(1, 0) == doctest::Approx(1.0));  // already unit
    CHECK(set.vectors(2, 0) == doctest::Approx(-1.0));  // sign preserved

    SUBCASE("idempotence") {
        const EmbeddingSet again = metaemb::l2_normalize(set);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                CHECK(again.vectors(i, j) ==
                      doctest::Approx(set.vectors(i, j)).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("l2_normalize rejects zero rows naming the token") {
    Eigen::MatrixXd rows(2, 2);
    rows << 1, 0, 0, 0;
    const auto set = oracle::make_set("t", {"ok", "zero"}, rows);
    try {
        metaemb::l2_normalize(set);
        FAIL("expected an error");
    } catch (const metaemb::Error& e) {
        CHECK(contains(e.what(), "zero"));
    }
}

TEST_CASE("l2_normalize preserves cosine ordering among rows") {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXd rows(8, 5);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 5; ++j) rows(i, j) = dist(gen);
        rows.row(i) *= 1.0 + std::abs(dist(gen));  // varied lengths
    }
    const auto raw = oracle::make_set("t", oracle::tokens(8), rows);
    const auto unit = metaemb::l2_normalize(raw);
    auto cosine = [](const EmbeddingSet& s, int a, int b) {
        const Eigen::VectorXd va = s.row(a), vb = s.row(b);
        return va.dot(vb) / (va.norm() * vb.norm());
    };
    for (int b = 1; b < 8; ++b) {
        for (int c = b + 1; c < 8; ++c) {
            const bool before = cosine(raw, 0, b) < cosine(raw, 0, c);
            const bool after = cosine(unit, 0, b) < cosine(unit, 0, c);
            CHECK(before == after);
        }
    }
}

TEST_CASE("union_vocab merges by first appearance with coverage masks") {
    Eigen::MatrixXd r1(2, 2), r2(2, 2);
    r1 << 1, 0, 0, 1;
    r2 << 1, 1, 2, 2;
    const std::vector<EmbeddingSet> sets{
        oracle::make_set("s1", {"a", "b"}, r1),
        oracle::make_set("s2", {"b", "c"}, r2)};
    const auto [vocab, membership] = metaemb::union_vocab(sets);
    REQUIRE(vocab->size() == 3);
    CHECK(vocab->word(0) == "a");
    CHECK(vocab->word(1) == "b");
    CHECK(vocab->word(2) == "c");
    CHECK(membership.covers(0, 0));
    CHECK(membership.covers(0, 1));
    CHECK_FALSE(membership.covers(0, 2));
    CHECK_FALSE(membership.covers(1, 0));
    CHECK(membership.covers(1, 1));
    CHECK(membership.covers(1, 2));
    CHECK(membership.row_of[1][1] == 0);  // b is row 0 of s2
    CHECK(membership.row_of[1][0] == -1);
}

TEST_CASE("union_vocab on identical vocabularies is the identity") {
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(3, 3);
    const std::vector<EmbeddingSet> sets{
        oracle::make_set("s1", {"x", "y", "z"}, r),
        oracle::make_set("s2", {"x", "y", "z"}, r)};
    const auto [vocab, membership] = metaemb::union_vocab(sets);
    CHECK(vocab->size() == 3);
    for (std::uint32_t v = 0; v < 3; ++v) {
        CHECK(membership.covers(0, v));
        CHECK(membership.covers(1, v));
    }
}

TEST_CASE("union_vocab coverage is source-order independent as a set") {
    Eigen::MatrixXd r1(2, 2), r2(3, 2);
    r1 << 1, 0, 0, 1;
    r2 << 1, 1, 2, 2, 3, 3;
    const auto s1 = oracle::make_set("s1", {"a", "b"}, r1);
    const auto s2 = oracle::make_set("s2", {"b", "c", "d"}, r2);
    const auto [v12, m12] = metaemb::union_vocab({s1, s2});
    const auto [v21, m21] = metaemb::union_vocab({s2, s1});
    REQUIRE(v12->size() == v21->size());
    for (std::uint32_t i = 0; i < v12->size(); ++i) {
        const std::string& tok = v12->word(i);
        const auto j = v21->lookup(tok);
        REQUIRE(j.has_value());
        CHECK(m12.covers(0, i) == m21.covers(1, *j));
        CHECK(m12.covers(1, i) == m21.covers(0, *j));
    }
}

TEST_CASE("union_vocab rejects empty input") {
    CHECK_THROWS_AS(metaemb::union_vocab({}), metaemb::Error);
}

TEST_CASE("cache round-trip is bitwise for a 10k-word random set") {
    oracle::TempDir dir("embio");
    std::mt19937_64 gen(11);
    std::normal_distribution<double> dist(0.0, 1.0);
    const std::size_t n = 10000;
    const int d = 10;
    Eigen::MatrixXd rows(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            rows(static_cast<Eigen::Index>(i), j) = dist(gen);
        }
    }
    const EmbeddingSet set = oracle::make_set("big", oracle::tokens(n), rows);
    const auto path = dir.file("big.bin");
    metaemb::save_cache(set, path);
    const EmbeddingSet back =
        metaemb::load_embeddings(path, EmbFormat::cache_binary, "big");
    REQUIRE(back.size() == set.size());
    REQUIRE(back.dim == set.dim);
    for (std::uint32_t i = 0; i < n; ++i) {
        CHECK(back.vocab.word(i) == set.vocab.word(i));
    }
    CHECK(std::memcmp(back.vectors.data(), set.vectors.data(),
                      n * static_cast<std::size_t>(d) * sizeof(float)) == 0);
}

TEST_CASE("glove text round-trip preserves float32 values") {
    oracle::TempDir dir("embio");
    const EmbeddingSet set = oracle::gaussian_set("g", 50, 7, 3);
    const auto path = dir.file("g.txt");
    metaemb::save_glove_text(set, path);
    const EmbeddingSet back =
        metaemb::load_embeddings(path, EmbFormat::glove_text, "g");
    REQUIRE(back.size() == set.size());
    REQUIRE(back.dim == set.dim);
    CHECK(std::memcmp(back.vectors.data(), set.vectors.data(),
                      set.size() * 7 * sizeof(float)) == 0);
}

TEST_CASE("corrupted cache magic is rejected") {
    oracle::TempDir dir("embio");
    const EmbeddingSet set = oracle::gaussian_set("g", 5, 3, 1);
    const auto path = dir.file("c.bin");
    metaemb::save_cache(set, path);
    std::string bytes = dir.read("c.bin");
    REQUIRE(bytes.size() > 4);
    bytes[0] ^= 0x5a;
    dir.write("c.bin", bytes);
    try {
        metaemb::load_embeddings(path, EmbFormat::cache_binary);
        FAIL("expected an error");
    } catch (const metaemb::Error& e) {
        CHECK(contains(e.what(), "mismatch"));
    }
}

TEST_CASE("truncated cache file is rejected") {
    oracle::TempDir dir("embio");
    const EmbeddingSet set = oracle::gaussian_set("g", 20, 4, 2);
    const auto path = dir.file("t.bin");
    metaemb::save_cache(set, path);
    std::string bytes = dir.read("t.bin");
    bytes.resize(bytes.size() / 2);
    dir.write("t.bin", bytes);
    CHECK_THROWS_AS(metaemb::load_embeddings(path, EmbFormat::cache_binary),
                    metaemb::Error);
}

TEST_CASE("format names parse and print consistently") {
    CHECK(metaemb::parse_format("glove-text") == EmbFormat::glove_text);
    CHECK(metaemb::parse_format("word2vec-text") == EmbFormat::word2vec_text);
    CHECK(metaemb::parse_format("cache-binary") == EmbFormat::cache_binary);
    CHECK(std::string(metaemb::format_name(EmbFormat::glove_text)) ==
          "glove-text");
    CHECK_THROWS_AS(metaemb::parse_format("protobuf"), metaemb::Error);
}
