// End-to-end orchestration: configuration, stage sequencing with content-hash
// caching (ingest -> knn -> weights -> project, or the baseline combiners),
// evaluation, and report emission. Also the dimension/neighbourhood sweep and
// the hold-one-source-out ablation drivers.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "metaemb/baselines.hpp"
#include "metaemb/embedding_set.hpp"
#include "metaemb/project.hpp"
#include "metaemb/recon.hpp"

namespace metaemb {

struct SourceEntry {
    std::string name;
    std::string path;
    EmbFormat format = EmbFormat::glove_text;
    double scale = kDefaultScale;  // used by the conc/svd combiners
};

struct EvalEntry {
    std::string task;   // similarity | analogy | relation | text
    std::string path;
    std::string path2;  // text only: test split
};

enum class SolverChoice : std::uint8_t { sgd, exact };

struct PipelineConfig {
    std::vector<SourceEntry> sources;
    std::vector<EvalEntry> evals;
    std::uint32_t k = 1200;
    int dim = 300;
    bool include_self = false;
    bool row_normalize = true;
    MetaMethod method = MetaMethod::lle;
    SolverChoice solver = SolverChoice::sgd;
    SolverConfig solver_config;  // learning rate 0.01, 100 iterations
    double eig_tol = 1e-8;
    int max_restarts = 30;
    std::size_t dense_cutoff = 2000;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 1;
};

// Parses the key = value manifest (one `source = name path format [scale]`
// line per source, one `eval = task path [path2]` line per dataset).
PipelineConfig load_config(const std::string& path);

const char* solver_name(SolverChoice solver);
SolverChoice parse_solver(const std::string& name);
MetaMethod parse_method(const std::string& name);

struct RunResult {
    MetaEmbedding meta;
    nlohmann::ordered_json report;
    std::string report_json_path;  // empty when artifacts were not written
    std::string report_csv_path;
    std::string meta_cache_path;
};

// Executes the configured pipeline, reusing cached stage outputs whose
// content-hash keys match, and writes the meta-embedding and report files.
RunResult run(const PipelineConfig& config);

// Stage boundaries for the staged CLI entry points; `report` is the full run.
// knn/weights apply to the lle method only.
enum class Stage : std::uint8_t { ingest, knn, weights, project, eval, report };

// Runs the pipeline up to and including `upto`, sharing the same caches as
// run(), and returns a JSON summary of the deepest stage reached (the full
// report when `upto` is Stage::report). Meta-embedding exports and report
// files are written for the project and report stages respectively.
nlohmann::ordered_json run_stage(const PipelineConfig& config, Stage upto);

// Re-runs the pipeline once per value along one axis ("dimension" or
// "neighbourhood"), holding the other at its configured value; writes one CSV
// row per (value, task, dataset) and records per-point failures instead of
// aborting. Returns the path of the written CSV.
std::string sweep(const PipelineConfig& config, const std::string& axis,
                  const std::vector<int>& values);

// Runs the configured method with one source removed; the report is tagged
// with the ablated source name.
RunResult ablate(const PipelineConfig& config, const std::string& hold_out);

}  // namespace metaemb
