#include "aaflow/bench.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

// Every tunable the subcommands share, with the tuned defaults. A run echoes
// the resolved values into out_dir/config.json; --config preloads them so a
// later run reproduces the same non-timing outputs.
struct ResolvedConfig {
    std::string subcommand;

    // corpus
    std::uint64_t nodes = 20000;
    std::uint64_t files = 200;
    std::uint64_t node_chars = 800;
    std::string delimiter = "<<<NODE>>>";
    std::uint64_t seed = 42;

    // pipeline
    std::vector<std::string> modes;
    std::size_t workers = 16;
    std::size_t embed_workers = 32;
    std::size_t upsert_workers = 16;
    std::size_t embed_batch = 32;
    std::size_t upsert_batch = 64;
    std::size_t queue_size = 2;
    std::size_t coalesce_target = 128;
    double request_overhead_ms = 0.0;
    double per_item_ms = 0.0;
    std::size_t dim = 768;
    std::string metric = "ip";
    std::string manifest;

    // retrieval / conversational
    std::size_t cases = 200;
    std::size_t k = 10;
    std::size_t repeat_factor = 64;
    double cache_threshold = 0.95;

    // cost model
    double cost_n = 1000;
    double cost_b = 10;
    double cost_p = 4;
    double cost_alpha = 5;
    double cost_beta = 1;
    double ray_sigma = 0;
    double ray_delta = 0;
    double dask_gamma = 0;
    double dask_eta = 0;

    std::string out;
};

std::string default_out_dir() {
    if (const char* env = std::getenv("AAFLOW_OUT_DIR")) {
        return env;
    }
    return "aaflow_out";
}

json to_json(const ResolvedConfig& c) {
    return json{
        {"subcommand", c.subcommand},
        {"corpus",
         {{"nodes", c.nodes},
          {"files", c.files},
          {"node_chars", c.node_chars},
          {"delimiter", c.delimiter},
          {"seed", c.seed}}},
        {"pipeline",
         {{"modes", c.modes},
          {"workers", c.workers},
          {"embed_workers", c.embed_workers},
          {"upsert_workers", c.upsert_workers},
          {"embed_batch", c.embed_batch},
          {"upsert_batch", c.upsert_batch},
          {"queue_size", c.queue_size},
          {"coalesce_target", c.coalesce_target},
          {"request_overhead_ms", c.request_overhead_ms},
          {"per_item_ms", c.per_item_ms},
          {"dim", c.dim},
          {"metric", c.metric},
          {"manifest", c.manifest}}},
        {"bench",
         {{"cases", c.cases},
          {"k", c.k},
          {"repeat_factor", c.repeat_factor},
          {"cache_threshold", c.cache_threshold}}},
        {"cost",
         {{"n", c.cost_n},
          {"b", c.cost_b},
          {"p", c.cost_p},
          {"alpha", c.cost_alpha},
          {"beta", c.cost_beta},
          {"ray_sigma", c.ray_sigma},
          {"ray_delta", c.ray_delta},
          {"dask_gamma", c.dask_gamma},
          {"dask_eta", c.dask_eta}}},
        {"out", c.out},
    };
}

void apply_json(const json& j, ResolvedConfig& c) {
    const auto& corpus = j.at("corpus");
    c.nodes = corpus.at("nodes").get<std::uint64_t>();
    c.files = corpus.at("files").get<std::uint64_t>();
    c.node_chars = corpus.at("node_chars").get<std::uint64_t>();
    c.delimiter = corpus.at("delimiter").get<std::string>();
    c.seed = corpus.at("seed").get<std::uint64_t>();

    const auto& pipeline = j.at("pipeline");
    c.modes = pipeline.at("modes").get<std::vector<std::string>>();
    c.workers = pipeline.at("workers").get<std::size_t>();
    c.embed_workers = pipeline.at("embed_workers").get<std::size_t>();
    c.upsert_workers = pipeline.at("upsert_workers").get<std::size_t>();
    c.embed_batch = pipeline.at("embed_batch").get<std::size_t>();
    c.upsert_batch = pipeline.at("upsert_batch").get<std::size_t>();
    c.queue_size = pipeline.at("queue_size").get<std::size_t>();
    c.coalesce_target = pipeline.at("coalesce_target").get<std::size_t>();
    c.request_overhead_ms = pipeline.at("request_overhead_ms").get<double>();
    c.per_item_ms = pipeline.at("per_item_ms").get<double>();
    c.dim = pipeline.at("dim").get<std::size_t>();
    c.metric = pipeline.at("metric").get<std::string>();
    c.manifest = pipeline.at("manifest").get<std::string>();

    const auto& bench = j.at("bench");
    c.cases = bench.at("cases").get<std::size_t>();
    c.k = bench.at("k").get<std::size_t>();
    c.repeat_factor = bench.at("repeat_factor").get<std::size_t>();
    c.cache_threshold = bench.at("cache_threshold").get<double>();

    const auto& cost = j.at("cost");
    c.cost_n = cost.at("n").get<double>();
    c.cost_b = cost.at("b").get<double>();
    c.cost_p = cost.at("p").get<double>();
    c.cost_alpha = cost.at("alpha").get<double>();
    c.cost_beta = cost.at("beta").get<double>();
    c.ray_sigma = cost.at("ray_sigma").get<double>();
    c.ray_delta = cost.at("ray_delta").get<double>();
    c.dask_gamma = cost.at("dask_gamma").get<double>();
    c.dask_eta = cost.at("dask_eta").get<double>();
}

void write_config_echo(const ResolvedConfig& c) {
    const std::filesystem::path dir(c.out);
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "config.json", std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + (dir / "config.json").string());
    }
    out << to_json(c).dump(2) << "\n";
}

aaflow::CorpusSpec corpus_spec(const ResolvedConfig& c) {
    aaflow::CorpusSpec spec;
    spec.total_nodes = c.nodes;
    spec.file_count = c.files;
    spec.node_chars = c.node_chars;
    spec.delimiter = c.delimiter;
    spec.seed = c.seed;
    return spec;
}

aaflow::PipelineConfig pipeline_config(const ResolvedConfig& c) {
    aaflow::PipelineConfig cfg;
    cfg.workers = c.workers;
    cfg.embed_workers = c.embed_workers;
    cfg.upsert_workers = c.upsert_workers;
    cfg.embed_batch = c.embed_batch;
    cfg.upsert_batch = c.upsert_batch;
    cfg.queue_capacity = c.queue_size;
    cfg.coalesce_target = c.coalesce_target;
    cfg.latency = {c.request_overhead_ms, c.per_item_ms};
    cfg.dim = c.dim;
    cfg.metric = aaflow::parse_metric(c.metric);
    cfg.seed = c.seed;
    return cfg;
}

int run_gen_corpus(const ResolvedConfig& c) {
    const auto manifest = aaflow::generate_corpus(corpus_spec(c), c.out);
    std::cout << "generated " << manifest.spec.total_nodes << " nodes across "
              << manifest.files.size() << " files under " << c.out << "\n";
    return 0;
}

int run_ingest(const ResolvedConfig& c) {
    aaflow::IngestBenchOptions options;
    options.corpus = corpus_spec(c);
    options.manifest_path = c.manifest;
    options.base = pipeline_config(c);
    options.out_dir = c.out;
    if (c.modes.empty()) {
        options.modes = aaflow::all_modes();
    } else {
        for (const auto& name : c.modes) {
            options.modes.push_back(aaflow::parse_mode(name));
        }
    }
    const auto report = aaflow::run_ingest_bench(options);
    for (const auto& row : report.rows) {
        const auto& t = row.result.timings;
        std::cout << aaflow::mode_name(row.result.config.mode) << ": total "
                  << t.total_s << " s over " << t.chunk_count << " chunks\n";
    }
    std::cout << "wrote " << report.summary_csv.string() << "\n";
    return 0;
}

int run_retrieval(const ResolvedConfig& c) {
    aaflow::RetrievalBenchOptions options;
    options.corpus = corpus_spec(c);
    options.dim = c.dim;
    options.metric = aaflow::parse_metric(c.metric);
    options.lookups = c.cases;
    options.repeat_factor = c.repeat_factor;
    options.k = c.k;
    options.cache_threshold = c.cache_threshold;
    options.seed = c.seed;
    options.out_dir = c.out;
    const auto report = aaflow::run_retrieval_bench(options);
    std::cout << "aaflow: hit_rate " << report.memory_mode.hit_rate << ", total_ms "
              << report.memory_mode.total_ms << "\n";
    std::cout << "baseline: hit_rate " << report.baseline.hit_rate << ", total_ms "
              << report.baseline.total_ms << "\n";
    std::cout << "wrote " << report.summary_csv.string() << "\n";
    return 0;
}

int run_conv(const ResolvedConfig& c) {
    aaflow::ConvBenchOptions options;
    options.corpus = corpus_spec(c);
    options.dim = c.dim;
    options.metric = aaflow::parse_metric(c.metric);
    options.cases = c.cases;
    options.k = c.k;
    options.seed = c.seed;
    options.out_dir = c.out;
    const auto report = aaflow::run_conv_bench(options);
    std::cout << "aaflow: top1 " << report.memory_mode.top1 << ", hit@" << report.memory_mode.k
              << " " << report.memory_mode.hit_at_k << ", mrr " << report.memory_mode.mrr << "\n";
    std::cout << "baseline: top1 " << report.baseline.top1 << ", hit@" << report.baseline.k << " "
              << report.baseline.hit_at_k << ", mrr " << report.baseline.mrr << "\n";
    std::cout << "wrote " << report.summary_csv.string() << "\n";
    return 0;
}

int run_cost(const ResolvedConfig& c) {
    aaflow::CostPredictOptions options;
    options.params.n = c.cost_n;
    options.params.b = c.cost_b;
    options.params.p = c.cost_p;
    options.params.alpha = c.cost_alpha;
    options.params.beta = c.cost_beta;
    options.params.ray_sigma = c.ray_sigma;
    options.params.ray_delta = c.ray_delta;
    options.params.dask_gamma = c.dask_gamma;
    options.params.dask_eta = c.dask_eta;
    options.out_dir = c.out;
    const auto rows = aaflow::run_cost_predict(options);
    for (const auto& row : rows) {
        std::cout << row.model << ": " << row.predicted_ms << " ms\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    ResolvedConfig cfg;
    cfg.out = default_out_dir();

    // --config preloads defaults; explicit flags still override.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            std::ifstream in(argv[i + 1], std::ios::binary);
            if (!in) {
                std::cerr << "error: cannot open config file " << argv[i + 1] << "\n";
                return 1;
            }
            try {
                json j;
                in >> j;
                apply_json(j, cfg);
            } catch (const std::exception& e) {
                std::cerr << "error: bad config file " << argv[i + 1] << ": " << e.what() << "\n";
                return 1;
            }
        }
    }

    CLI::App app{"ingestion pipeline and retrieval benchmark harness"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "load defaults from a previous run's config.json");

    auto add_corpus_flags = [&cfg](CLI::App* cmd) {
        cmd->add_option("--nodes", cfg.nodes, "total logical nodes N");
        cmd->add_option("--files", cfg.files, "number of corpus files");
        cmd->add_option("--node-chars", cfg.node_chars, "characters per node");
        cmd->add_option("--delimiter", cfg.delimiter, "node delimiter");
        cmd->add_option("--seed", cfg.seed, "generation seed");
    };
    auto add_embed_flags = [&cfg](CLI::App* cmd) {
        cmd->add_option("--dim", cfg.dim, "embedding dimension");
        cmd->add_option("--metric", cfg.metric, "similarity metric (l2|ip)");
    };
    auto add_out_flag = [&cfg, &config_path](CLI::App* cmd) {
        cmd->add_option("--out", cfg.out, "output directory (default $AAFLOW_OUT_DIR)");
        cmd->add_option("--config", config_path,
                        "load defaults from a previous run's config.json");
    };

    CLI::App* gen = app.add_subcommand("gen-corpus", "generate the synthetic corpus");
    add_corpus_flags(gen);
    add_out_flag(gen);

    CLI::App* ingest = app.add_subcommand("ingest-bench", "run the ingestion pipeline benchmark");
    add_corpus_flags(ingest);
    add_embed_flags(ingest);
    add_out_flag(ingest);
    ingest->add_option("--manifest", cfg.manifest, "existing corpus manifest (skips generation)");
    ingest->add_option("--mode", cfg.modes, "execution mode, repeatable (default: all)");
    ingest->add_option("--workers", cfg.workers, "transform / async worker count");
    ingest->add_option("--embed-workers", cfg.embed_workers, "streaming embed pool size");
    ingest->add_option("--upsert-workers", cfg.upsert_workers, "streaming upsert pool size");
    ingest->add_option("--embed-batch", cfg.embed_batch, "embedding batch size BE");
    ingest->add_option("--upsert-batch", cfg.upsert_batch, "upsert batch size BU");
    ingest->add_option("--queue-size", cfg.queue_size, "bounded queue capacity");
    ingest->add_option("--coalesce-target", cfg.coalesce_target, "bulk upsert coalesce target");
    ingest->add_option("--request-overhead-ms", cfg.request_overhead_ms,
                       "simulated per-request embed overhead");
    ingest->add_option("--per-item-ms", cfg.per_item_ms, "simulated per-item embed cost");

    CLI::App* retrieval =
        app.add_subcommand("retrieval-bench", "semantic cache and hybrid retrieval latency");
    add_corpus_flags(retrieval);
    add_embed_flags(retrieval);
    add_out_flag(retrieval);
    retrieval->add_option("--cases", cfg.cases, "total lookups / retrieval requests");
    retrieval->add_option("--repeat-factor", cfg.repeat_factor, "lookups per distinct query");
    retrieval->add_option("--k", cfg.k, "retrieval depth");

    CLI::App* conv =
        app.add_subcommand("conv-bench", "conversational retrieval quality benchmark");
    add_corpus_flags(conv);
    add_embed_flags(conv);
    add_out_flag(conv);
    conv->add_option("--cases", cfg.cases, "number of conversational cases");
    conv->add_option("--k", cfg.k, "hit@k depth");

    CLI::App* cost = app.add_subcommand("cost-predict", "analytic execution-model predictions");
    add_out_flag(cost);
    cost->add_option("--n", cfg.cost_n, "item count N");
    cost->add_option("--b", cfg.cost_b, "batch size");
    cost->add_option("--p", cfg.cost_p, "worker count P");
    cost->add_option("--alpha", cfg.cost_alpha, "per-batch overhead ms");
    cost->add_option("--beta", cfg.cost_beta, "per-item cost ms");
    cost->add_option("--ray-sigma", cfg.ray_sigma, "ray object-store overhead per batch");
    cost->add_option("--ray-delta", cfg.ray_delta, "ray result collection overhead");
    cost->add_option("--dask-gamma", cfg.dask_gamma, "dask graph management overhead");
    cost->add_option("--dask-eta", cfg.dask_eta, "dask communication overhead");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            cfg.subcommand = "gen-corpus";
            write_config_echo(cfg);
            return run_gen_corpus(cfg);
        }
        if (ingest->parsed()) {
            cfg.subcommand = "ingest-bench";
            write_config_echo(cfg);
            return run_ingest(cfg);
        }
        if (retrieval->parsed()) {
            cfg.subcommand = "retrieval-bench";
            write_config_echo(cfg);
            return run_retrieval(cfg);
        }
        if (conv->parsed()) {
            cfg.subcommand = "conv-bench";
            write_config_echo(cfg);
            return run_conv(cfg);
        }
        if (cost->parsed()) {
            cfg.subcommand = "cost-predict";
            write_config_echo(cfg);
            return run_cost(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
