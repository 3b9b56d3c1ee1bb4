#include "aaflow/pipeline.hpp"

#include "aaflow/channel.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace aaflow {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Busy-nanosecond accumulator per stage, shared across that stage's workers.
struct StageAccumulator {
    std::atomic<std::uint64_t> nanos{0};

    void add(Clock::time_point start) {
        const auto d = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start);
        nanos.fetch_add(static_cast<std::uint64_t>(d.count()), std::memory_order_relaxed);
    }
    double seconds_per_worker(std::size_t workers) const {
        return static_cast<double>(nanos.load()) * 1e-9 / static_cast<double>(std::max<std::size_t>(1, workers));
    }
};

EmbeddingVector finalize_vector(EmbeddingVector v, Metric metric) {
    return metric == Metric::InnerProduct ? normalize(v) : v;
}

std::string read_file_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("pipeline load: cannot open file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Global chunk ids come from the manifest's per-file node counts, so workers
// can number chunks without coordinating: id = offset[doc] + chunk_index.
std::vector<std::uint64_t> chunk_id_offsets(const CorpusManifest& manifest) {
    std::vector<std::uint64_t> offsets(manifest.files.size(), 0);
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < manifest.files.size(); ++i) {
        offsets[i] = acc;
        acc += manifest.files[i].node_count;
    }
    return offsets;
}

std::vector<std::vector<ChunkRecord>> make_embed_batches(std::vector<ChunkRecord> chunks,
                                                         std::size_t batch_size) {
    std::vector<std::vector<ChunkRecord>> batches;
    std::vector<ChunkRecord> current;
    current.reserve(batch_size);
    for (auto& chunk : chunks) {
        current.push_back(std::move(chunk));
        if (current.size() == batch_size) {
            batches.push_back(std::move(current));
            current = {};
            current.reserve(batch_size);
        }
    }
    if (!current.empty()) {
        batches.push_back(std::move(current));
    }
    return batches;
}

std::vector<IndexEntry> embed_chunk_batch(const std::vector<ChunkRecord>& batch,
                                          const PipelineConfig& cfg) {
    std::vector<std::string> texts;
    texts.reserve(batch.size());
    for (const auto& c : batch) {
        texts.push_back(c.text);
    }
    std::vector<EmbeddingVector> vectors = embed_batch(texts, cfg.dim, cfg.latency);
    std::vector<IndexEntry> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out.push_back({batch[i].chunk_id, finalize_vector(std::move(vectors[i]), cfg.metric)});
    }
    return out;
}

// Parallel split with deterministic ordering: worker w takes doc w, w+P, ...
// and results are spliced back in document order.
std::vector<ChunkRecord> transform_parallel(const std::vector<Document>& docs,
                                            const std::string& delimiter, std::size_t workers,
                                            const std::vector<std::uint64_t>& offsets) {
    std::vector<std::vector<ChunkRecord>> per_doc(docs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= docs.size()) {
                return;
            }
            auto chunks = split_by_delimiter(docs[i], delimiter);
            for (auto& c : chunks) {
                c.chunk_id = offsets[docs[i].doc_index] + c.chunk_index;
            }
            per_doc[i] = std::move(chunks);
        }
    };
    std::vector<std::thread> threads;
    const std::size_t count = std::max<std::size_t>(1, std::min(workers, docs.size()));
    for (std::size_t t = 0; t < count; ++t) {
        threads.emplace_back(work);
    }
    for (auto& t : threads) {
        t.join();
    }
    std::vector<ChunkRecord> all;
    for (auto& chunks : per_doc) {
        for (auto& c : chunks) {
            all.push_back(std::move(c));
        }
    }
    return all;
}

// Embeds batches with up to `bound` concurrent calls; results keep batch order.
std::vector<std::vector<IndexEntry>> embed_bounded(
    const std::vector<std::vector<ChunkRecord>>& batches, const PipelineConfig& cfg,
    std::size_t bound) {
    std::vector<std::vector<IndexEntry>> results(batches.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= batches.size()) {
                return;
            }
            try {
                results[i] = embed_chunk_batch(batches[i], cfg);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const std::size_t count = std::max<std::size_t>(1, std::min(bound, batches.size()));
    for (std::size_t t = 0; t < count; ++t) {
        threads.emplace_back(work);
    }
    for (auto& t : threads) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
    return results;
}

void upsert_serial(VectorIndex& index, std::vector<IndexEntry> entries, std::size_t batch_size) {
    for (auto& batch : coalesce_upserts(std::move(entries), batch_size)) {
        index.add_batch(batch);
    }
}

// ---------------------------------------------------------------------------
// Streaming mode

struct StreamBatch {
    std::vector<ChunkRecord> chunks;
};

struct StreamState {
    explicit StreamState(const PipelineConfig& cfg)
        : abort(std::make_shared<AbortToken>()),
          doc_ch(cfg.queue_capacity, abort, &progress),
          chunk_ch(cfg.queue_capacity, abort, &progress),
          embed_in_ch(cfg.queue_capacity, abort, &progress),
          embed_out_ch(cfg.queue_capacity, abort, &progress),
          upsert_ch(cfg.queue_capacity, abort, &progress) {}

    std::atomic<std::uint64_t> progress{0};
    std::shared_ptr<AbortToken> abort;

    BoundedChannel<Document> doc_ch;
    // Chunks travel per document; handing off one chunk at a time would cost
    // a wakeup per node and stall the embed pool during ramp-up.
    BoundedChannel<std::vector<ChunkRecord>> chunk_ch;
    BoundedChannel<StreamBatch> embed_in_ch;
    BoundedChannel<std::vector<IndexEntry>> embed_out_ch;
    BoundedChannel<std::vector<IndexEntry>> upsert_ch;

    StageAccumulator load_busy, transform_busy, embed_busy, upsert_busy;
    std::atomic<std::uint64_t> chunks_emitted{0};
    std::atomic<std::uint64_t> entries_upserted{0};

    std::mutex error_mutex;
    std::exception_ptr first_error;

    void record_error(std::exception_ptr e) {
        try {
            std::rethrow_exception(e);
        } catch (const PipelineAborted&) {
            return; // cascade from an already-tripped abort, not a root cause
        } catch (const std::exception& ex) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) {
                first_error = e;
            }
            abort->trip(std::string("worker failure: ") + ex.what());
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) {
                first_error = e;
            }
            abort->trip("worker failure");
        }
    }
};

StageTimings run_streaming(const PipelineConfig& cfg, const CorpusManifest& manifest,
                           VectorIndex& index) {
    StreamState st(cfg);
    const std::vector<std::uint64_t> offsets = chunk_id_offsets(manifest);
    const auto run_start = Clock::now();

    // Loader: one worker reads manifest files in order.
    std::thread loader([&] {
        try {
            for (std::size_t i = 0; i < manifest.files.size(); ++i) {
                const auto t0 = Clock::now();
                Document doc{i, manifest.files[i].path, read_file_or_throw(manifest.files[i].path)};
                st.doc_ch.send(std::move(doc));
                st.load_busy.add(t0);
            }
        } catch (...) {
            st.record_error(std::current_exception());
        }
        st.doc_ch.close();
    });

    // Transform pool: split documents into globally numbered chunks.
    std::atomic<std::size_t> transform_live{cfg.workers};
    std::vector<std::thread> transformers;
    for (std::size_t w = 0; w < cfg.workers; ++w) {
        transformers.emplace_back([&] {
            try {
                for (;;) {
                    auto doc = st.doc_ch.recv();
                    if (!doc) {
                        break;
                    }
                    const auto t0 = Clock::now();
                    auto chunks = split_by_delimiter(*doc, manifest.spec.delimiter);
                    for (auto& c : chunks) {
                        c.chunk_id = offsets[doc->doc_index] + c.chunk_index;
                    }
                    st.chunks_emitted.fetch_add(chunks.size(), std::memory_order_relaxed);
                    st.chunk_ch.send(std::move(chunks));
                    st.transform_busy.add(t0);
                }
            } catch (...) {
                st.record_error(std::current_exception());
            }
            if (transform_live.fetch_sub(1) == 1) {
                st.chunk_ch.close();
            }
        });
    }

    // Batcher: regroups per-document chunk lists into embed micro-batches.
    std::thread batcher([&] {
        try {
            StreamBatch batch;
            batch.chunks.reserve(cfg.embed_batch);
            for (;;) {
                auto chunks = st.chunk_ch.recv();
                if (!chunks) {
                    break;
                }
                for (auto& chunk : *chunks) {
                    batch.chunks.push_back(std::move(chunk));
                    if (batch.chunks.size() == cfg.embed_batch) {
                        st.embed_in_ch.send(std::move(batch));
                        batch = StreamBatch{};
                        batch.chunks.reserve(cfg.embed_batch);
                    }
                }
            }
            if (!batch.chunks.empty()) {
                st.embed_in_ch.send(std::move(batch));
            }
        } catch (...) {
            st.record_error(std::current_exception());
        }
        st.embed_in_ch.close();
    });

    // Embed pool.
    std::atomic<std::size_t> embed_live{cfg.embed_workers};
    std::vector<std::thread> embedders;
    for (std::size_t w = 0; w < cfg.embed_workers; ++w) {
        embedders.emplace_back([&] {
            try {
                for (;;) {
                    auto batch = st.embed_in_ch.recv();
                    if (!batch) {
                        break;
                    }
                    const auto t0 = Clock::now();
                    auto entries = embed_chunk_batch(batch->chunks, cfg);
                    st.embed_out_ch.send(std::move(entries));
                    st.embed_busy.add(t0);
                }
            } catch (...) {
                st.record_error(std::current_exception());
            }
            if (embed_live.fetch_sub(1) == 1) {
                st.embed_out_ch.close();
            }
        });
    }

    // Coalescer: regroups embed output into bulk upsert batches.
    std::thread coalescer([&] {
        try {
            std::vector<IndexEntry> pending;
            pending.reserve(cfg.coalesce_target);
            for (;;) {
                auto entries = st.embed_out_ch.recv();
                if (!entries) {
                    break;
                }
                for (auto& e : *entries) {
                    pending.push_back(std::move(e));
                    if (pending.size() == cfg.coalesce_target) {
                        st.upsert_ch.send(std::move(pending));
                        pending = {};
                        pending.reserve(cfg.coalesce_target);
                    }
                }
            }
            if (!pending.empty()) {
                st.upsert_ch.send(std::move(pending));
            }
        } catch (...) {
            st.record_error(std::current_exception());
        }
        st.upsert_ch.close();
    });

    // Upsert pool. Writes to the shared index are serialized; a sharded
    // index could take per-shard locks, but correctness only needs one.
    std::mutex index_mutex;
    std::vector<std::thread> upserters;
    for (std::size_t w = 0; w < cfg.upsert_workers; ++w) {
        upserters.emplace_back([&] {
            try {
                for (;;) {
                    auto batch = st.upsert_ch.recv();
                    if (!batch) {
                        break;
                    }
                    const auto t0 = Clock::now();
                    {
                        std::lock_guard<std::mutex> lock(index_mutex);
                        index.add_batch(*batch);
                    }
                    st.entries_upserted.fetch_add(batch->size(), std::memory_order_relaxed);
                    st.upsert_busy.add(t0);
                }
            } catch (...) {
                st.record_error(std::current_exception());
            }
        });
    }

    // Watchdog: trips the abort token when nothing has moved for too long.
    std::atomic<bool> done{false};
    std::thread watchdog([&] {
        std::uint64_t last_progress = st.progress.load();
        auto last_change = Clock::now();
        while (!done.load()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
            const std::uint64_t now_progress = st.progress.load();
            if (now_progress != last_progress) {
                last_progress = now_progress;
                last_change = Clock::now();
                continue;
            }
            if (seconds_since(last_change) > cfg.watchdog_interval_s) {
                std::ostringstream diag;
                diag << "no pipeline progress for " << cfg.watchdog_interval_s << "s"
                     << " (docs queued " << st.doc_ch.pending() << ", chunks queued "
                     << st.chunk_ch.pending() << ", embed batches queued "
                     << st.embed_in_ch.pending() << ", upsert batches queued "
                     << st.upsert_ch.pending() << ", chunks emitted "
                     << st.chunks_emitted.load() << ", entries upserted "
                     << st.entries_upserted.load() << ")";
                st.abort->trip(diag.str());
                return;
            }
        }
    });

    loader.join();
    for (auto& t : transformers) {
        t.join();
    }
    batcher.join();
    for (auto& t : embedders) {
        t.join();
    }
    coalescer.join();
    for (auto& t : upserters) {
        t.join();
    }
    // End-to-end time stops when the last upsert lands; watchdog teardown
    // (up to one poll interval) is not part of the run.
    const double total_s = seconds_since(run_start);
    done.store(true);
    watchdog.join();

    if (st.first_error) {
        std::rethrow_exception(st.first_error);
    }
    if (st.abort->tripped()) {
        throw std::runtime_error("pipeline deadlock watchdog: " + st.abort->reason);
    }

    StageTimings t;
    t.total_s = total_s;
    t.load_s = st.load_busy.seconds_per_worker(1);
    t.transform_s = st.transform_busy.seconds_per_worker(cfg.workers);
    t.embed_s = st.embed_busy.seconds_per_worker(cfg.embed_workers);
    t.upsert_s = st.upsert_busy.seconds_per_worker(cfg.upsert_workers);
    t.chunk_count = st.chunks_emitted.load();
    return t;
}

// ---------------------------------------------------------------------------
// Barrier modes

StageTimings run_barriered(const PipelineConfig& cfg, const CorpusManifest& manifest,
                           VectorIndex& index) {
    const auto run_start = Clock::now();
    StageTimings t;

    const std::size_t load_workers =
        cfg.mode == ExecutionMode::Sequential ? 1 : cfg.workers;
    std::vector<Document> docs;
    t.load_s = measure_stage_s([&] { docs = load_documents(manifest, load_workers); });

    std::vector<ChunkRecord> chunks;
    const std::vector<std::uint64_t> offsets = chunk_id_offsets(manifest);
    if (cfg.mode == ExecutionMode::Sequential || cfg.mode == ExecutionMode::ReaderParallel) {
        t.transform_s = measure_stage_s([&] { chunks = split_all(docs, manifest.spec.delimiter); });
    } else {
        t.transform_s = measure_stage_s(
            [&] { chunks = transform_parallel(docs, manifest.spec.delimiter, cfg.workers, offsets); });
    }
    t.chunk_count = chunks.size();

    const std::size_t embed_batch =
        cfg.mode == ExecutionMode::Sequential ? 1 : cfg.embed_batch;
    auto batches = make_embed_batches(std::move(chunks), embed_batch);

    std::vector<std::vector<IndexEntry>> embedded;
    switch (cfg.mode) {
    case ExecutionMode::Sequential:
    case ExecutionMode::ReaderParallel: {
        t.embed_s = measure_stage_s([&] {
            embedded.reserve(batches.size());
            for (const auto& batch : batches) {
                embedded.push_back(embed_chunk_batch(batch, cfg));
            }
        });
        break;
    }
    case ExecutionMode::PipelineParallelSync:
    case ExecutionMode::AsyncParallelOnly: {
        t.embed_s = measure_stage_s([&] { embedded = embed_bounded(batches, cfg, cfg.workers); });
        break;
    }
    case ExecutionMode::Streaming:
        break; // handled elsewhere
    }

    std::vector<IndexEntry> entries;
    for (auto& batch : embedded) {
        for (auto& e : batch) {
            entries.push_back(std::move(e));
        }
    }
    t.upsert_s = measure_stage_s([&] { upsert_serial(index, std::move(entries), cfg.upsert_batch); });

    t.total_s = seconds_since(run_start);
    return t;
}

} // namespace

std::string mode_name(ExecutionMode mode) {
    switch (mode) {
    case ExecutionMode::Sequential: return "sequential";
    case ExecutionMode::ReaderParallel: return "reader_parallel";
    case ExecutionMode::PipelineParallelSync: return "pipeline_parallel_sync";
    case ExecutionMode::AsyncParallelOnly: return "async_parallel_only";
    case ExecutionMode::Streaming: return "streaming";
    }
    return "unknown";
}

ExecutionMode parse_mode(const std::string& name) {
    for (const auto mode : all_modes()) {
        if (mode_name(mode) == name) {
            return mode;
        }
    }
    std::string valid;
    for (const auto mode : all_modes()) {
        if (!valid.empty()) {
            valid += ", ";
        }
        valid += mode_name(mode);
    }
    throw std::invalid_argument("unknown mode '" + name + "' (valid: " + valid + ")");
}

const std::vector<ExecutionMode>& all_modes() {
    static const std::vector<ExecutionMode> modes = {
        ExecutionMode::Sequential, ExecutionMode::ReaderParallel,
        ExecutionMode::PipelineParallelSync, ExecutionMode::AsyncParallelOnly,
        ExecutionMode::Streaming};
    return modes;
}

void validate(const PipelineConfig& config) {
    if (config.workers < 1 || config.embed_workers < 1 || config.upsert_workers < 1) {
        throw std::invalid_argument("pipeline config: worker counts must be >= 1");
    }
    if (config.embed_batch < 1 || config.upsert_batch < 1 || config.coalesce_target < 1) {
        throw std::invalid_argument("pipeline config: batch sizes must be >= 1");
    }
    if (config.queue_capacity < 1) {
        throw std::invalid_argument("pipeline config: queue_capacity must be >= 1");
    }
    if (config.dim < 1) {
        throw std::invalid_argument("pipeline config: dim must be >= 1");
    }
    if (config.latency.request_overhead_ms < 0 || config.latency.per_item_ms < 0) {
        throw std::invalid_argument("pipeline config: latency params must be >= 0");
    }
}

double measure_stage_s(const std::function<void()>& work) {
    const auto t0 = Clock::now();
    work();
    return seconds_since(t0);
}

BenchmarkResult run_pipeline(const PipelineConfig& config, const CorpusManifest& manifest,
                             VectorIndex& index) {
    validate(config);
    if (index.size() != 0) {
        throw std::invalid_argument("run_pipeline: index must start empty");
    }

    BenchmarkResult result;
    result.config = config;
    result.timings = config.mode == ExecutionMode::Streaming
                         ? run_streaming(config, manifest, index)
                         : run_barriered(config, manifest, index);
    result.index_size = index.size();
    if (result.index_size != result.timings.chunk_count) {
        throw std::runtime_error("run_pipeline: index size " + std::to_string(result.index_size) +
                                 " != chunk count " + std::to_string(result.timings.chunk_count));
    }
    return result;
}

} // namespace aaflow
