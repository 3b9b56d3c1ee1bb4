#pragma once

#include "aaflow/corpus.hpp"
#include "aaflow/costmodel.hpp"
#include "aaflow/evalmetrics.hpp"
#include "aaflow/memory.hpp"
#include "aaflow/pipeline.hpp"
#include "aaflow/vecindex.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace aaflow {

// SHA-256 over the index contents sorted by id; insertion-order independent.
std::string index_content_hash(const FlatIndex& index);

struct IngestBenchOptions {
    CorpusSpec corpus;                    // used when manifest_path is empty
    std::filesystem::path manifest_path;  // reuse an existing corpus when set
    std::vector<ExecutionMode> modes;
    PipelineConfig base;                  // per-mode runs override .mode
    std::filesystem::path out_dir;
    std::string config_label = "default";
};

struct IngestBenchRow {
    BenchmarkResult result;
    std::string index_hash;
};

struct IngestBenchReport {
    std::vector<IngestBenchRow> rows;
    std::filesystem::path summary_csv;
};

IngestBenchReport run_ingest_bench(const IngestBenchOptions& options);

struct RetrievalBenchOptions {
    CorpusSpec corpus;
    std::size_t dim = 768;
    Metric metric = Metric::InnerProduct;
    std::size_t lookups = 1600;     // total warm lookups / retrieval requests
    std::size_t repeat_factor = 64; // lookups per distinct query
    std::size_t k = 10;
    double cache_threshold = 0.95;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
};

struct RetrievalBenchReport {
    LatencySummary memory_mode; // hierarchical memory on
    LatencySummary baseline;    // thin path, no memory load/store
    std::filesystem::path summary_csv;
};

RetrievalBenchReport run_retrieval_bench(const RetrievalBenchOptions& options);

struct ConvBenchOptions {
    CorpusSpec corpus;
    std::size_t dim = 768;
    Metric metric = Metric::InnerProduct;
    std::size_t cases = 200;
    std::size_t k = 10;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
};

struct ConvBenchReport {
    QualitySummary memory_mode;
    QualitySummary baseline;
    std::vector<RankOutcome> memory_outcomes;
    std::vector<RankOutcome> baseline_outcomes;
    std::filesystem::path summary_csv;
    std::filesystem::path rankings_csv;
    std::filesystem::path index_snapshot;
};

ConvBenchReport run_conv_bench(const ConvBenchOptions& options);

struct CostPredictOptions {
    CostParams params;
    std::filesystem::path out_dir;
};

struct CostPredictRow {
    std::string model;
    double predicted_ms = 0.0;
};

std::vector<CostPredictRow> run_cost_predict(const CostPredictOptions& options);

} // namespace aaflow
