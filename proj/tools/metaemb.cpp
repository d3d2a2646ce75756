// Command-line front end for the meta-embedding pipeline. Every subcommand
// reads the same key = value config file; flags passed on the command line
// override the corresponding config keys. Failures print a JSON error object
// to stderr and exit nonzero.
#include <cstdint>
#include <iostream>
#include <list>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "metaemb/error.hpp"
#include "metaemb/pipeline.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    int threads = 1;
    std::uint32_t k = 1200;
    int dim = 300;
    std::string method;
    std::string solver;
    bool row_normalize = true;
    bool include_self = false;

    CLI::Option* o_config = nullptr;
    CLI::Option* o_out = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_threads = nullptr;
    CLI::Option* o_k = nullptr;
    CLI::Option* o_dim = nullptr;
    CLI::Option* o_method = nullptr;
    CLI::Option* o_solver = nullptr;
    CLI::Option* o_row_normalize = nullptr;
    CLI::Option* o_include_self = nullptr;
};

CommonFlags* add_common(CLI::App* cmd, std::list<CommonFlags>& store) {
    store.emplace_back();
    CommonFlags& f = store.back();
    f.o_config = cmd->add_option("--config", f.config, "key = value manifest file");
    f.o_out = cmd->add_option("--out", f.out, "output directory");
    f.o_seed = cmd->add_option("--seed", f.seed, "root random seed");
    f.o_threads =
        cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    f.o_k = cmd->add_option("--k", f.k, "neighbourhood size");
    f.o_dim = cmd->add_option("--dim", f.dim, "meta-embedding dimensionality");
    f.o_method = cmd->add_option("--method", f.method, "lle, conc or svd");
    f.o_solver = cmd->add_option("--solver", f.solver, "sgd or exact");
    f.o_row_normalize = cmd->add_option(
        "--row-normalize", f.row_normalize,
        "row-normalise the combined weight matrix (true/false)");
    f.o_include_self = cmd->add_option(
        "--include-self", f.include_self,
        "keep each word in its own neighbourhood (true/false)");
    return &f;
}

metaemb::PipelineConfig build_config(const CommonFlags& f) {
    metaemb::PipelineConfig cfg;
    if (f.o_config->count() > 0) cfg = metaemb::load_config(f.config);
    if (f.o_out->count() > 0) cfg.out_dir = f.out;
    if (f.o_seed->count() > 0) cfg.seed = f.seed;
    if (f.o_threads->count() > 0) cfg.threads = f.threads;
    if (f.o_k->count() > 0) cfg.k = f.k;
    if (f.o_dim->count() > 0) cfg.dim = f.dim;
    if (f.o_method->count() > 0) cfg.method = metaemb::parse_method(f.method);
    if (f.o_solver->count() > 0) cfg.solver = metaemb::parse_solver(f.solver);
    if (f.o_row_normalize->count() > 0) cfg.row_normalize = f.row_normalize;
    if (f.o_include_self->count() > 0) cfg.include_self = f.include_self;
    return cfg;
}

void print_json(const nlohmann::ordered_json& j) {
    std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"combine pre-trained word embeddings into a meta-embedding"};
    app.require_subcommand(1);
    std::list<CommonFlags> store;

    struct StageCommand {
        CLI::App* cmd;
        CommonFlags* flags;
        metaemb::Stage stage;
        int force_method;  // MetaMethod value, or -1 to keep the configured one
    };
    std::vector<StageCommand> stage_commands;
    auto add_stage = [&](const char* name, const char* desc,
                         metaemb::Stage upto, int force_method) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        stage_commands.push_back({cmd, add_common(cmd, store), upto, force_method});
    };
    add_stage("ingest", "load, normalise and cache the source embeddings",
              metaemb::Stage::ingest, -1);
    add_stage("knn", "build the per-source nearest-neighbour graph",
              metaemb::Stage::knn, -1);
    add_stage("weights", "fit the neighbourhood reconstruction weights",
              metaemb::Stage::weights, -1);
    add_stage("project", "compute the spectral meta-embedding",
              metaemb::Stage::project,
              static_cast<int>(metaemb::MetaMethod::lle));
    add_stage("conc", "compute the concatenation baseline",
              metaemb::Stage::project,
              static_cast<int>(metaemb::MetaMethod::conc));
    add_stage("svd", "compute the SVD baseline", metaemb::Stage::project,
              static_cast<int>(metaemb::MetaMethod::svd));
    add_stage("eval", "evaluate the configured meta-embedding",
              metaemb::Stage::eval, -1);
    add_stage("run", "run the full pipeline and write reports",
              metaemb::Stage::report, -1);

    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "re-run along one axis and collect a CSV score grid");
    CommonFlags* sweep_flags = add_common(sweep_cmd, store);
    std::string axis;
    std::vector<int> values;
    sweep_cmd->add_option("--axis", axis, "dimension or neighbourhood")
        ->required();
    sweep_cmd->add_option("--values", values, "ascending positive values")
        ->required()
        ->delimiter(',');

    CLI::App* ablate_cmd = app.add_subcommand(
        "ablate", "run the configured method with one source held out");
    CommonFlags* ablate_flags = add_common(ablate_cmd, store);
    std::string hold_out;
    ablate_cmd->add_option("--hold-out", hold_out, "name of the source to drop")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        for (const auto& sc : stage_commands) {
            if (!sc.cmd->parsed()) continue;
            metaemb::PipelineConfig cfg = build_config(*sc.flags);
            if (sc.force_method >= 0) {
                cfg.method = static_cast<metaemb::MetaMethod>(sc.force_method);
            }
            print_json(metaemb::run_stage(cfg, sc.stage));
            return 0;
        }
        if (sweep_cmd->parsed()) {
            const std::string csv =
                metaemb::sweep(build_config(*sweep_flags), axis, values);
            nlohmann::ordered_json j;
            j["csv"] = csv;
            print_json(j);
            return 0;
        }
        if (ablate_cmd->parsed()) {
            print_json(
                metaemb::ablate(build_config(*ablate_flags), hold_out).report);
            return 0;
        }
    } catch (const metaemb::Error& e) {
        nlohmann::ordered_json err;
        err["error"] = e.what();
        err["stage"] = e.stage();
        std::cerr << err.dump(2) << '\n';
        return 1;
    } catch (const std::exception& e) {
        nlohmann::ordered_json err;
        err["error"] = e.what();
        err["stage"] = "";
        std::cerr << err.dump(2) << '\n';
        return 1;
    }
    return 0;
}
