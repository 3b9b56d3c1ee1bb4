#pragma once

#include "aaflow/corpus.hpp"
#include "aaflow/embedder.hpp"
#include "aaflow/vecindex.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace aaflow {

enum class ExecutionMode {
    Sequential,         // all stages serial, embed batch size 1
    ReaderParallel,     // parallel file loading only, rest serial
    PipelineParallelSync, // stage barriers, parallel inside each stage
    AsyncParallelOnly,  // embeds concurrent bounded by workers, upserts after
    Streaming,          // bounded queues, persistent embed/upsert pools
};

std::string mode_name(ExecutionMode mode);
ExecutionMode parse_mode(const std::string& name);
const std::vector<ExecutionMode>& all_modes();

struct PipelineConfig {
    ExecutionMode mode = ExecutionMode::Streaming;
    std::size_t workers = 16;        // transform / async concurrency bound
    std::size_t embed_workers = 32;  // streaming embed pool
    std::size_t upsert_workers = 16; // streaming upsert pool
    std::size_t embed_batch = 32;    // BE
    std::size_t upsert_batch = 64;   // BU
    std::size_t queue_capacity = 2;
    std::size_t coalesce_target = 128;
    LatencyParams latency;
    std::size_t dim = 768;
    Metric metric = Metric::InnerProduct;
    std::uint64_t seed = 0;
    double watchdog_interval_s = 30.0;
};

void validate(const PipelineConfig& config);

// Wall-clock stage measurements. In barrier modes each stage value is the
// stage's wall span and total_s ~>= their sum. In Streaming mode stage values
// are attributed busy time: the sum of per-item handling durations (including
// the blocked handoff to the next stage) divided by the stage's worker count,
// so overlapped runs report total_s below the stage sum.
struct StageTimings {
    double load_s = 0.0;
    double transform_s = 0.0;
    double embed_s = 0.0;
    double upsert_s = 0.0;
    double total_s = 0.0;
    std::uint64_t chunk_count = 0;

    double stage_sum_s() const { return load_s + transform_s + embed_s + upsert_s; }
};

struct BenchmarkResult {
    PipelineConfig config;
    StageTimings timings;
    std::size_t index_size = 0;
    std::map<std::string, double> speedup_vs; // mode name -> other_total / this_total
};

// Runs Load -> Transform -> Embed -> Upsert for the configured mode, filling
// the (empty) index with exactly one vector per chunk. The final (id, vector)
// entry set is identical across all modes for the same corpus and seed.
// Embeddings are normalized for the inner-product metric and raw for L2.
// A watchdog aborts the run with stage diagnostics when no item moves for
// watchdog_interval_s.
BenchmarkResult run_pipeline(const PipelineConfig& config, const CorpusManifest& manifest,
                             VectorIndex& index);

// Monotonic wall time of one closure, in seconds.
double measure_stage_s(const std::function<void()>& work);

} // namespace aaflow
