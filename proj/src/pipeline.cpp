#include "metaemb/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <utility>

#include "metaemb/binio.hpp"
#include "metaemb/datasets.hpp"
#include "metaemb/error.hpp"
#include "metaemb/evaluate.hpp"
#include "metaemb/hash.hpp"
#include "metaemb/neighbourhood.hpp"
#include "metaemb/parallel.hpp"

namespace fs = std::filesystem;

namespace metaemb {
namespace {

constexpr int kGraphLeafSize = BallTree::kDefaultLeafSize;

// Wraps a stage body so any error escaping it carries the stage name.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw Error(e.what(), name);
    } catch (const std::exception& e) {
        throw Error(e.what(), name);
    }
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t b = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > b) out.push_back(s.substr(b, i - b));
    }
    return out;
}

bool parse_bool_value(const std::string& v, const std::string& path,
                      std::size_t line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError(path, line, "expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v, const std::string& path, std::size_t line) {
    T value{};
    const char* b = v.data();
    const char* e = b + v.size();
    auto [ptr, ec] = std::from_chars(b, e, value);
    if (ec != std::errc() || ptr != e) {
        throw ParseError(path, line, "bad number '" + v + "'");
    }
    return value;
}

std::string filename_of(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
}

void check_path_outside_out(const std::string& path, const std::string& out) {
    const fs::path p = fs::absolute(fs::path(path)).lexically_normal();
    const fs::path o = fs::absolute(fs::path(out)).lexically_normal();
    auto mismatch = std::mismatch(o.begin(), o.end(), p.begin(), p.end());
    if (mismatch.first == o.end()) {
        throw Error("input path '" + path +
                        "' lies inside the output directory '" + out + "'",
                    "pipeline");
    }
}

void validate_config(const PipelineConfig& cfg) {
    if (cfg.sources.empty()) {
        throw Error("no sources configured", "pipeline");
    }
    if (cfg.k < 1) throw Error("k must be positive", "pipeline");
    if (cfg.dim < 1) throw Error("dim must be positive", "pipeline");
    for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
        if (cfg.sources[i].name.empty()) {
            throw Error("source " + std::to_string(i) + " has no name",
                        "pipeline");
        }
        for (std::size_t j = i + 1; j < cfg.sources.size(); ++j) {
            if (cfg.sources[i].name == cfg.sources[j].name) {
                throw Error("duplicate source name '" + cfg.sources[i].name +
                                "'",
                            "pipeline");
            }
        }
        check_path_outside_out(cfg.sources[i].path, cfg.out_dir);
    }
    for (const auto& e : cfg.evals) {
        check_path_outside_out(e.path, cfg.out_dir);
        if (!e.path2.empty()) check_path_outside_out(e.path2, cfg.out_dir);
    }
    if (cfg.method == MetaMethod::lle &&
        cfg.k < static_cast<std::uint32_t>(cfg.dim) + 1) {
        std::fprintf(stderr,
                     "warning: k = %u is below dim + 1 = %d; the projection "
                     "may lack support\n",
                     cfg.k, cfg.dim + 1);
    }
}

struct CachePaths {
    std::string dir;
    std::string file(const std::string& stem) const { return dir + "/" + stem + ".bin"; }
};

// ---- stage runners -------------------------------------------------------

std::vector<EmbeddingSet> stage_ingest(const PipelineConfig& cfg,
                                       const CachePaths& cache,
                                       std::vector<std::string>& keys) {
    return stage("ingest", [&] {
        std::vector<EmbeddingSet> sets;
        for (const auto& src : cfg.sources) {
            Fnv1a64 h;
            h.update("ingest-v1");
            h.update(src.name);
            h.update(format_name(src.format));
            h.update_pod(digest_file(src.path));
            const std::string key = h.hex();
            keys.push_back(key);
            const std::string path = cache.file("ingest_" + src.name + "_" + key);
            bool loaded = false;
            if (fs::exists(path)) {
                try {
                    EmbeddingSet set = load_embeddings(path, EmbFormat::cache_binary,
                                                       src.name);
                    if (set.unit_normalized) {
                        sets.push_back(std::move(set));
                        loaded = true;
                    }
                } catch (const std::exception&) {
                    loaded = false;  // stale or corrupt cache: recompute
                }
            }
            if (!loaded) {
                EmbeddingSet set =
                    l2_normalize(load_embeddings(src.path, src.format, src.name));
                save_cache(set, path);
                sets.push_back(std::move(set));
            }
        }
        return sets;
    });
}

NeighbourhoodGraph stage_knn(const PipelineConfig& cfg, const CachePaths& cache,
                             const std::vector<EmbeddingSet>& sets,
                             const SourceMembership& membership,
                             std::size_t union_size,
                             const std::vector<std::string>& ingest_keys,
                             std::string& key_out) {
    return stage("knn", [&] {
        Fnv1a64 h;
        h.update("knn-v1");
        for (const auto& k : ingest_keys) h.update(k);
        h.update_pod(cfg.k);
        h.update_pod(cfg.include_self);
        h.update_pod(kGraphLeafSize);
        key_out = h.hex();
        const std::string path = cache.file("knn_" + key_out);
        if (fs::exists(path)) {
            try {
                NeighbourhoodGraph graph = load_graph(path);
                if (graph.word_count() == union_size &&
                    graph.source_count() == sets.size()) {
                    return graph;
                }
            } catch (const std::exception&) {
            }
        }
        NeighbourhoodGraph graph =
            build_graph(sets, membership, union_size, cfg.k, cfg.include_self,
                        kGraphLeafSize, cfg.threads);
        save_graph(graph, path);
        return graph;
    });
}

SparseWeights stage_weights(const PipelineConfig& cfg, const CachePaths& cache,
                            const std::vector<EmbeddingSet>& sets,
                            const SourceMembership& membership,
                            const NeighbourhoodGraph& graph,
                            const std::string& knn_key, std::string& key_out) {
    return stage("weights", [&] {
        Fnv1a64 h;
        h.update("weights-v1");
        h.update(knn_key);
        h.update(solver_name(cfg.solver));
        h.update_pod(cfg.solver_config.learning_rate);
        h.update_pod(cfg.solver_config.max_iters);
        h.update_pod(cfg.solver_config.adagrad_epsilon);
        h.update_pod(cfg.solver_config.tolerance);
        h.update_pod(cfg.seed);
        key_out = h.hex();
        const std::string path = cache.file("weights_" + key_out);
        if (fs::exists(path)) {
            try {
                SparseWeights weights = load_weights(path);
                if (weights.rows.size() == graph.word_count()) return weights;
            } catch (const std::exception&) {
            }
        }
        SparseWeights weights;
        if (cfg.solver == SolverChoice::exact) {
            weights = fit_weights_exact(sets, membership, graph, cfg.threads);
        } else {
            SolverConfig sc = cfg.solver_config;
            sc.seed = cfg.seed;
            weights = fit_weights_sgd(sets, membership, graph, sc, nullptr,
                                      cfg.threads);
        }
        save_weights(weights, path);
        return weights;
    });
}

MetaEmbedding stage_project(const PipelineConfig& cfg, const CachePaths& cache,
                            std::shared_ptr<const Vocabulary> vocab,
                            const CombinedWeights& wp,
                            const std::string& weights_key,
                            std::string& key_out, std::string& path_out) {
    return stage("project", [&] {
        Fnv1a64 h;
        h.update("project-v1");
        h.update(weights_key);
        h.update_pod(cfg.dim);
        h.update_pod(cfg.row_normalize);
        h.update_pod(cfg.eig_tol);
        h.update_pod(cfg.max_restarts);
        h.update_pod(cfg.dense_cutoff);
        h.update_pod(cfg.seed);
        key_out = h.hex();
        path_out = cache.file("meta_" + key_out);
        if (fs::exists(path_out)) {
            try {
                MetaEmbedding meta = load_meta(path_out);
                if (meta.method == MetaMethod::lle && meta.vocab &&
                    *meta.vocab == *vocab && meta.dim() == cfg.dim) {
                    return meta;
                }
            } catch (const std::exception&) {
            }
        }
        EigOptions opts;
        opts.tol = cfg.eig_tol;
        opts.max_restarts = cfg.max_restarts;
        opts.dense_cutoff = cfg.dense_cutoff;
        opts.seed = cfg.seed;
        opts.threads = cfg.threads;
        MetaEmbedding meta = project(wp, std::move(vocab), cfg.dim, opts);
        save_meta(meta, path_out);
        return meta;
    });
}

MetaEmbedding stage_baseline(const PipelineConfig& cfg, const CachePaths& cache,
                             const std::vector<EmbeddingSet>& sets,
                             const std::vector<std::string>& ingest_keys,
                             std::string& key_out, std::string& path_out) {
    return stage("baselines", [&] {
        ConcConfig conc_cfg;
        for (const auto& src : cfg.sources) conc_cfg.scales.push_back(src.scale);
        Fnv1a64 h;
        h.update(cfg.method == MetaMethod::conc ? "conc-v1" : "svd-v1");
        for (const auto& k : ingest_keys) h.update(k);
        for (double s : conc_cfg.scales) h.update_pod(s);
        if (cfg.method == MetaMethod::svd) h.update_pod(cfg.dim);
        key_out = h.hex();
        path_out = cache.file("meta_" + key_out);
        if (fs::exists(path_out)) {
            try {
                MetaEmbedding meta = load_meta(path_out);
                if (meta.method == cfg.method) return meta;
            } catch (const std::exception&) {
            }
        }
        MetaEmbedding meta;
        if (cfg.method == MetaMethod::conc) {
            conc_cfg.policy = VocabPolicy::intersection;
            meta = concat(sets, conc_cfg);
        } else {
            meta = svd_meta(sets, cfg.dim, conc_cfg, nullptr, cfg.threads);
        }
        save_meta(meta, path_out);
        return meta;
    });
}

nlohmann::ordered_json run_evals(const PipelineConfig& cfg,
                                 const EmbeddingSet& meta_set) {
    return stage("eval", [&] {
        nlohmann::ordered_json evals = nlohmann::ordered_json::array();
        for (const auto& entry : cfg.evals) {
            nlohmann::ordered_json rec;
            rec["task"] = entry.task;
            rec["dataset"] = filename_of(entry.path);
            if (entry.task == "similarity") {
                const auto res =
                    eval_similarity(meta_set, parse_similarity(entry.path));
                rec["score"] = res.rho * 100.0;
                rec["coverage"] = res.coverage * 100.0;
                rec["evaluated"] = res.evaluated;
                rec["total"] = res.total;
            } else if (entry.task == "analogy") {
                const auto res = eval_analogy(meta_set, parse_analogy(entry.path),
                                              cfg.threads);
                if (res.defined) {
                    rec["score"] = res.accuracy * 100.0;
                } else {
                    rec["score"] = nullptr;  // zero coverage: undefined, not 0
                }
                rec["coverage"] = res.coverage * 100.0;
                rec["evaluated"] = res.evaluated;
                rec["total"] = res.total;
            } else if (entry.task == "relation") {
                const auto res = eval_relation(meta_set, parse_relation(entry.path),
                                               cfg.threads);
                rec["score"] = res.accuracy * 100.0;
                rec["coverage"] = res.coverage * 100.0;
                rec["evaluated"] = res.evaluated;
                rec["total"] = res.total;
                rec["zero_offset_skipped"] = res.zero_offset_skipped;
            } else if (entry.task == "text") {
                const auto res = eval_text(
                    meta_set, parse_text(entry.path, entry.path2), 5, {},
                    cfg.threads);
                rec["test_dataset"] = filename_of(entry.path2);
                rec["score"] = res.accuracy * 100.0;
                rec["chosen_reg"] = res.chosen_reg;
                rec["train_docs"] = res.train_docs;
                rec["test_docs"] = res.test_docs;
            } else {
                throw Error("unknown evaluation task '" + entry.task + "'");
            }
            evals.push_back(std::move(rec));
        }
        return evals;
    });
}

void write_report_files(const nlohmann::ordered_json& report,
                        const std::string& json_path,
                        const std::string& csv_path) {
    stage("report", [&] {
        atomic_write_file(json_path, [&](std::ostream& out) {
            out << report.dump(2) << '\n';
        });
        atomic_write_file(csv_path, [&](std::ostream& out) {
            out << "task,dataset,score,coverage\n";
            for (const auto& rec : report.at("evaluations")) {
                const std::string task = rec.at("task").get<std::string>();
                const std::string dataset = rec.at("dataset").get<std::string>();
                std::string score = "NA";
                if (rec.contains("score") && !rec.at("score").is_null()) {
                    score = format_double(rec.at("score").get<double>());
                }
                std::string coverage;
                if (rec.contains("coverage")) {
                    coverage = format_double(rec.at("coverage").get<double>());
                }
                out << csv_escape(task) << ',' << csv_escape(dataset) << ','
                    << score << ',' << coverage << '\n';
            }
        });
        return 0;
    });
}

struct ExecOutcome {
    RunResult result;
    nlohmann::ordered_json summary;
};

ExecOutcome execute(PipelineConfig cfg, Stage upto, const std::string& ablated,
                    bool write_artifacts) {
    cfg.threads = resolve_threads(cfg.threads);
    validate_config(cfg);
    CachePaths cache{cfg.out_dir + "/cache"};
    fs::create_directories(cache.dir);

    std::vector<std::string> ingest_keys;
    std::vector<EmbeddingSet> sets = stage_ingest(cfg, cache, ingest_keys);
    auto [vocab, membership] = union_vocab(sets);

    nlohmann::ordered_json source_block = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < cfg.sources.size(); ++s) {
        nlohmann::ordered_json rec;
        rec["name"] = cfg.sources[s].name;
        rec["path"] = cfg.sources[s].path;
        rec["format"] = format_name(cfg.sources[s].format);
        rec["scale"] = cfg.sources[s].scale;
        rec["words"] = sets[s].size();
        rec["dim"] = sets[s].dim;
        rec["cache"] = "cache/" + ("ingest_" + cfg.sources[s].name + "_" +
                                   ingest_keys[s] + ".bin");
        source_block.push_back(std::move(rec));
    }

    ExecOutcome out;
    if (upto == Stage::ingest) {
        out.summary["union_words"] = vocab->size();
        out.summary["sources"] = std::move(source_block);
        return out;
    }

    if (cfg.method != MetaMethod::lle &&
        (upto == Stage::knn || upto == Stage::weights)) {
        throw Error("the knn and weights stages apply to method lle only",
                    "pipeline");
    }

    std::string meta_key;
    double projection_cost_value = std::numeric_limits<double>::quiet_NaN();

    if (cfg.method == MetaMethod::lle) {
        std::string knn_key, weights_key;
        NeighbourhoodGraph graph =
            stage_knn(cfg, cache, sets, membership, vocab->size(), ingest_keys,
                      knn_key);
        if (upto == Stage::knn) {
            out.summary["k"] = cfg.k;
            out.summary["include_self"] = cfg.include_self;
            out.summary["union_words"] = vocab->size();
            out.summary["cache"] = "cache/knn_" + knn_key + ".bin";
            return out;
        }
        SparseWeights weights = stage_weights(cfg, cache, sets, membership,
                                              graph, knn_key, weights_key);
        if (upto == Stage::weights) {
            out.summary["solver"] = solver_name(cfg.solver);
            out.summary["union_words"] = vocab->size();
            out.summary["cache"] = "cache/weights_" + weights_key + ".bin";
            return out;
        }
        CombinedWeights wp = stage("project", [&] {
            return combine_weights(weights, graph, cfg.row_normalize);
        });
        out.result.meta = stage_project(cfg, cache, vocab, wp, weights_key,
                                        meta_key, out.result.meta_cache_path);
        projection_cost_value =
            projection_cost(wp, out.result.meta, cfg.threads);
    } else {
        out.result.meta = stage_baseline(cfg, cache, sets, ingest_keys,
                                         meta_key, out.result.meta_cache_path);
    }

    const EmbeddingSet meta_set = to_embedding_set(out.result.meta, "meta");
    const std::string tag = ablated.empty() ? "" : "_ablate_" + ablated;
    if (write_artifacts) {
        save_cache(meta_set, cfg.out_dir + "/meta" + tag + ".bin");
        save_glove_text(meta_set, cfg.out_dir + "/meta" + tag + ".txt");
    }

    nlohmann::ordered_json meta_block;
    meta_block["words"] = out.result.meta.size();
    meta_block["dim"] = out.result.meta.dim();
    meta_block["method"] = method_name(out.result.meta.method);
    meta_block["cache"] = "cache/" + filename_of(out.result.meta_cache_path);
    if (cfg.method == MetaMethod::lle) {
        meta_block["projection_cost"] = projection_cost_value;
    }

    if (upto == Stage::project) {
        out.summary["meta"] = std::move(meta_block);
        return out;
    }

    nlohmann::ordered_json evals = run_evals(cfg, meta_set);
    if (upto == Stage::eval) {
        out.summary["meta"] = std::move(meta_block);
        out.summary["evaluations"] = std::move(evals);
        return out;
    }

    nlohmann::ordered_json report;
    nlohmann::ordered_json config_block;
    config_block["method"] = method_name(cfg.method);
    config_block["k"] = cfg.k;
    config_block["dim"] = cfg.dim;
    config_block["seed"] = cfg.seed;
    config_block["solver"] = solver_name(cfg.solver);
    config_block["learning_rate"] = cfg.solver_config.learning_rate;
    config_block["max_iters"] = cfg.solver_config.max_iters;
    config_block["row_normalize"] = cfg.row_normalize;
    config_block["include_self"] = cfg.include_self;
    config_block["ablated"] = ablated;
    config_block["union_words"] = vocab->size();
    config_block["sources"] = std::move(source_block);
    report["config"] = std::move(config_block);
    report["meta"] = std::move(meta_block);
    report["evaluations"] = std::move(evals);

    out.result.report = std::move(report);
    if (write_artifacts) {
        out.result.report_json_path = cfg.out_dir + "/report" + tag + ".json";
        out.result.report_csv_path = cfg.out_dir + "/report" + tag + ".csv";
        write_report_files(out.result.report, out.result.report_json_path,
                           out.result.report_csv_path);
    }
    out.summary = out.result.report;
    return out;
}

RunResult run_impl(const PipelineConfig& cfg, const std::string& ablated,
                   bool write_artifacts) {
    return execute(cfg, Stage::report, ablated, write_artifacts).result;
}

}  // namespace

const char* solver_name(SolverChoice solver) {
    return solver == SolverChoice::exact ? "exact" : "sgd";
}

SolverChoice parse_solver(const std::string& name) {
    if (name == "sgd") return SolverChoice::sgd;
    if (name == "exact") return SolverChoice::exact;
    throw Error("unknown solver '" + name + "' (expected sgd or exact)",
                "pipeline");
}

MetaMethod parse_method(const std::string& name) {
    if (name == "lle") return MetaMethod::lle;
    if (name == "conc") return MetaMethod::conc;
    if (name == "svd") return MetaMethod::svd;
    throw Error("unknown method '" + name + "' (expected lle, conc or svd)",
                "pipeline");
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path, "pipeline");
    PipelineConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path, line_no, "expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) throw ParseError(path, line_no, "empty key");

        if (key == "source") {
            const auto fields = split_ws(value);
            if (fields.size() != 3 && fields.size() != 4) {
                throw ParseError(path, line_no,
                                 "source needs 'name path format [scale]'");
            }
            SourceEntry src;
            src.name = fields[0];
            src.path = fields[1];
            src.format = parse_format(fields[2]);
            if (fields.size() == 4) {
                src.scale = parse_number<double>(fields[3], path, line_no);
                if (!(src.scale > 0.0)) {
                    throw ParseError(path, line_no, "scale must be positive");
                }
            }
            cfg.sources.push_back(std::move(src));
        } else if (key == "eval") {
            const auto fields = split_ws(value);
            if (fields.size() != 2 && fields.size() != 3) {
                throw ParseError(path, line_no,
                                 "eval needs 'task path [path2]'");
            }
            EvalEntry entry;
            entry.task = fields[0];
            entry.path = fields[1];
            if (entry.task != "similarity" && entry.task != "analogy" &&
                entry.task != "relation" && entry.task != "text") {
                throw ParseError(path, line_no,
                                 "unknown eval task '" + entry.task + "'");
            }
            if (entry.task == "text") {
                if (fields.size() != 3) {
                    throw ParseError(path, line_no,
                                     "text eval needs train and test paths");
                }
                entry.path2 = fields[2];
            } else if (fields.size() == 3) {
                throw ParseError(path, line_no,
                                 entry.task + " eval takes a single path");
            }
            cfg.evals.push_back(std::move(entry));
        } else if (key == "k") {
            cfg.k = parse_number<std::uint32_t>(value, path, line_no);
        } else if (key == "dim") {
            cfg.dim = parse_number<int>(value, path, line_no);
        } else if (key == "method") {
            cfg.method = parse_method(value);
        } else if (key == "solver") {
            cfg.solver = parse_solver(value);
        } else if (key == "row_normalize") {
            cfg.row_normalize = parse_bool_value(value, path, line_no);
        } else if (key == "include_self") {
            cfg.include_self = parse_bool_value(value, path, line_no);
        } else if (key == "seed") {
            cfg.seed = parse_number<std::uint64_t>(value, path, line_no);
        } else if (key == "threads") {
            cfg.threads = parse_number<int>(value, path, line_no);
        } else if (key == "out") {
            cfg.out_dir = value;
        } else if (key == "learning_rate") {
            cfg.solver_config.learning_rate =
                parse_number<double>(value, path, line_no);
        } else if (key == "max_iters") {
            cfg.solver_config.max_iters = parse_number<int>(value, path, line_no);
        } else if (key == "tolerance") {
            cfg.solver_config.tolerance =
                parse_number<double>(value, path, line_no);
        } else if (key == "eig_tol") {
            cfg.eig_tol = parse_number<double>(value, path, line_no);
        } else if (key == "max_restarts") {
            cfg.max_restarts = parse_number<int>(value, path, line_no);
        } else if (key == "dense_cutoff") {
            cfg.dense_cutoff = parse_number<std::size_t>(value, path, line_no);
        } else {
            throw ParseError(path, line_no, "unknown config key '" + key + "'");
        }
    }
    return cfg;
}

RunResult run(const PipelineConfig& config) {
    return run_impl(config, "", true);
}

nlohmann::ordered_json run_stage(const PipelineConfig& config, Stage upto) {
    const bool artifacts = upto == Stage::project || upto == Stage::report;
    return execute(config, upto, "", artifacts).summary;
}

std::string sweep(const PipelineConfig& config, const std::string& axis,
                  const std::vector<int>& values) {
    if (axis != "dimension" && axis != "neighbourhood") {
        throw Error("sweep axis must be 'dimension' or 'neighbourhood'",
                    "pipeline");
    }
    if (values.empty()) throw Error("sweep needs at least one value", "pipeline");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < 1) {
            throw Error("sweep values must be positive", "pipeline");
        }
        if (i > 0 && values[i] <= values[i - 1]) {
            throw Error("sweep values must be strictly ascending", "pipeline");
        }
    }
    std::vector<std::string> rows;
    for (int value : values) {
        PipelineConfig point = config;
        if (axis == "dimension") {
            point.dim = value;
        } else {
            point.k = static_cast<std::uint32_t>(value);
        }
        const std::string prefix =
            axis + "," + std::to_string(value) + ",";
        try {
            RunResult res = run_impl(point, "", false);
            const auto& evals = res.report.at("evaluations");
            if (evals.empty()) {
                rows.push_back(prefix + ",,,");
            }
            for (const auto& rec : evals) {
                std::string score = "NA";
                if (rec.contains("score") && !rec.at("score").is_null()) {
                    score = format_double(rec.at("score").get<double>());
                }
                rows.push_back(prefix +
                               csv_escape(rec.at("task").get<std::string>()) +
                               "," +
                               csv_escape(rec.at("dataset").get<std::string>()) +
                               "," + score + ",");
            }
        } catch (const std::exception& e) {
            rows.push_back(prefix + ",,," + csv_escape(e.what()));
        }
    }
    fs::create_directories(config.out_dir);
    const std::string csv_path = config.out_dir + "/sweep_" + axis + ".csv";
    atomic_write_file(csv_path, [&](std::ostream& out) {
        out << "axis,value,task,dataset,score,error\n";
        for (const auto& row : rows) out << row << '\n';
    });
    return csv_path;
}

RunResult ablate(const PipelineConfig& config, const std::string& hold_out) {
    if (config.sources.size() < 3) {
        throw Error("ablation needs at least three configured sources",
                    "pipeline");
    }
    PipelineConfig reduced = config;
    const auto it = std::find_if(
        reduced.sources.begin(), reduced.sources.end(),
        [&](const SourceEntry& s) { return s.name == hold_out; });
    if (it == reduced.sources.end()) {
        throw Error("unknown source name '" + hold_out + "'", "pipeline");
    }
    reduced.sources.erase(it);
    return run_impl(reduced, hold_out, true);
}

}  // namespace metaemb
