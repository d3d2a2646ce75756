#include "metaemb/neighbourhood.hpp"

#include <fstream>

#include "metaemb/binio.hpp"
#include "metaemb/parallel.hpp"

namespace metaemb {

namespace {
constexpr char kGraphMagic[8] = {'M', 'E', 'M', 'B', 'K', 'N', 'N', '1'};
constexpr std::uint32_t kGraphVersion = 1;
}  // namespace

NeighbourhoodGraph build_graph(const std::vector<EmbeddingSet>& sets,
                               const SourceMembership& membership,
                               std::size_t union_size, std::uint32_t k,
                               bool include_self, int leaf_size, int threads) {
    NeighbourhoodGraph graph;
    graph.k = k;
    graph.include_self = include_self;
    graph.lists.assign(sets.size(), std::vector<std::vector<std::uint32_t>>(union_size));

    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto& set = sets[s];
        BallTree tree(set.vectors, leaf_size);

        // source row -> union id
        std::vector<std::uint32_t> to_union(set.size());
        for (std::uint32_t id = 0; id < union_size; ++id) {
            std::int32_t row = membership.row_of[s][id];
            if (row >= 0) to_union[static_cast<std::size_t>(row)] = id;
        }

        auto& out = graph.lists[s];
        parallel_for(0, set.size(), threads, [&](std::size_t row) {
            auto found = tree.query_knn(static_cast<std::uint32_t>(row), k, include_self);
            auto& dst = out[to_union[row]];
            dst.reserve(found.size());
            for (const auto& nb : found) dst.push_back(to_union[nb.id]);
        });
    }
    return graph;
}

void save_graph(const NeighbourhoodGraph& graph, const std::string& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        out.write(kGraphMagic, sizeof(kGraphMagic));
        write_pod<std::uint32_t>(out, kGraphVersion);
        write_pod<std::uint32_t>(out, graph.k);
        write_pod<std::uint8_t>(out, graph.include_self ? 1 : 0);
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(graph.source_count()));
        write_pod<std::uint64_t>(out, graph.word_count());
        for (const auto& source : graph.lists) {
            for (const auto& list : source) {
                write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(list.size()));
                out.write(reinterpret_cast<const char*>(list.data()),
                          static_cast<std::streamsize>(list.size() * sizeof(std::uint32_t)));
            }
        }
    });
}

NeighbourhoodGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open graph file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kGraphMagic, sizeof(magic)) != 0)
        throw Error("graph format/version mismatch: " + path);
    auto version = read_pod<std::uint32_t>(in, "graph version");
    if (version != kGraphVersion)
        throw Error("graph format/version mismatch: " + path);

    NeighbourhoodGraph graph;
    graph.k = read_pod<std::uint32_t>(in, "k");
    graph.include_self = read_pod<std::uint8_t>(in, "include_self") != 0;
    auto sources = read_pod<std::uint32_t>(in, "source count");
    auto words = read_pod<std::uint64_t>(in, "word count");
    graph.lists.assign(sources, std::vector<std::vector<std::uint32_t>>(words));
    for (auto& source : graph.lists) {
        for (auto& list : source) {
            auto count = read_pod<std::uint32_t>(in, "list size");
            list.resize(count);
            in.read(reinterpret_cast<char*>(list.data()),
                    static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
            if (!in) throw Error("truncated graph file: " + path);
        }
    }
    return graph;
}

void dump_graph_text(const NeighbourhoodGraph& graph, const Vocabulary& vocab,
                     const std::string& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        for (std::size_t s = 0; s < graph.source_count(); ++s) {
            for (std::uint32_t v = 0; v < graph.word_count(); ++v) {
                const auto& list = graph.lists[s][v];
                if (list.empty()) continue;
                out << vocab.word(v) << ' ' << s << ':';
                for (auto u : list) out << ' ' << vocab.word(u);
                out << '\n';
            }
        }
    });
}

}  // namespace metaemb
