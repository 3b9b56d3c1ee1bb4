#pragma once

#include "aaflow/embedder.hpp"
#include "aaflow/vecindex.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aaflow {

// One slot of the bounded short-term buffer. The stored embedding is the
// gate-scaled candidate, kept literally as written.
struct StmEntry {
    EmbeddingVector embedding;
    std::string text;
    std::uint64_t step = 0;

    bool operator==(const StmEntry& other) const = default;
};

struct LtmEntry {
    std::string summary;
    double gate_value = 0.0; // always > the write threshold for stored entries
    std::uint64_t step = 0;

    bool operator==(const LtmEntry& other) const = default;
};

struct EpisodeTurn {
    std::string query;
    std::string output_digest;

    bool operator==(const EpisodeTurn& other) const = default;
};

struct Episode {
    std::string episode_id;
    EmbeddingVector summary_embedding; // gate-scaled normalized mean state
    std::vector<EpisodeTurn> turns;

    bool operator==(const Episode& other) const = default;
};

// Sigmoid write-gate parameters. Weight vectors are dim-length, sampled
// uniformly from [-1, 1) by a seeded generator so they are reproducible.
struct GateParams {
    std::vector<float> stm_weights;
    std::vector<float> ltm_weights;
    std::vector<float> em_weights;
    double stm_bias = 0.0;
    double ltm_bias = 0.0;
    double em_bias = 0.0;
    double ltm_threshold = 0.5; // tau_L, in (0,1)
    std::uint64_t seed = 0;

    static GateParams from_seed(std::uint64_t seed, std::size_t dim, double tau_l = 0.5);
};

struct GateValues {
    double stm = 0.0;
    double ltm = 0.0;
    double em = 0.0;
};

// Recurrent agent state; unit L2 norm after every step.
struct AgentState {
    EmbeddingVector h;
    std::uint64_t step = 0;

    static AgentState initial(std::size_t dim);
};

struct FusionWeights {
    double kb = 0.6;
    double stm = 0.25;
    double ltm = 0.15;
};

enum class ContextSource : char {
    KnowledgeBase = 'K',
    ShortTerm = 'S',
    LongTerm = 'L',
};

struct FusedEntry {
    ContextSource source = ContextSource::KnowledgeBase;
    std::uint64_t id = 0;
    double similarity = 0.0;  // metric similarity (negated squared distance for L2)
    double fused_score = 0.0; // source weight * similarity
    EmbeddingVector embedding;
};

// Tri-source retrieval result. merged is sorted by fused score descending;
// ties break by source priority KB > STM > LTM, then ascending id.
struct FusedContext {
    std::vector<SearchHit> kb_hits;
    std::vector<SearchHit> stm_hits;
    std::vector<SearchHit> ltm_hits;
    std::vector<FusedEntry> merged;
    FusionWeights weights;
};

struct OutputRecord {
    std::int64_t top_id = -1; // -1 when the fused context is empty
    char top_source = '-';
    std::string state_digest; // hex SHA-256 over the state's float32 bytes

    bool operator==(const OutputRecord& other) const = default;
};

// The hierarchical memory triple: bounded STM buffer, thresholded LTM store
// backed by a flat index, and the per-episode summary list.
struct MemoryState {
    MemoryState(std::size_t dim, std::size_t stm_capacity, Metric metric)
        : dim(dim), stm_capacity(stm_capacity), ltm_index(dim, metric) {}

    std::size_t dim;
    std::size_t stm_capacity; // N_S
    std::deque<StmEntry> stm;
    FlatIndex ltm_index;                     // embeddings, id == step
    std::map<std::uint64_t, LtmEntry> ltm;   // metadata keyed by step
    std::vector<Episode> episodes;

    Metric metric() const { return ltm_index.metric(); }
};

bool operator==(const MemoryState& a, const MemoryState& b);

// Concatenated texts of the most recent min(|stm|, depth) entries, most
// recent first, joined by single spaces.
std::string memory_digest(const MemoryState& m, std::size_t depth = 4);

// Memory-conditioned query encoding: the query text is extended with the
// memory digest before hashing, then normalized. With empty memory this is
// exactly the plain normalized text embedding.
EmbeddingVector encode_query(const std::string& text, const MemoryState& m, std::size_t dim);

std::vector<SearchHit> search_stm(const MemoryState& m, const EmbeddingVector& query,
                                  std::size_t k);

FusedContext fuse_context(const EmbeddingVector& query, const VectorIndex* kb,
                          const MemoryState& m, std::vector<SearchHit> kb_hits,
                          std::vector<SearchHit> stm_hits, std::vector<SearchHit> ltm_hits,
                          const FusionWeights& weights);

FusedContext retrieve_fused(const EmbeddingVector& query, const VectorIndex* kb,
                            const MemoryState& m, std::size_t kb_k, std::size_t stm_k,
                            std::size_t ltm_k, const FusionWeights& weights);

// h_t = normalize(0.5*h_{t-1} + 0.5*centroid({z} u retrieved embeddings)).
// The output pairs the best fused id with a digest of the new state.
std::pair<AgentState, OutputRecord> agent_step(const AgentState& state,
                                               const EmbeddingVector& query_encoding,
                                               const FusedContext& ctx);

// Sigmoid gates over the agent state. Feedback folds into the LTM gate
// through the last weight component. All values lie strictly in (0,1).
GateValues write_gates(const AgentState& state, double feedback, const GateParams& params);

// Appends the gate-scaled candidate and drops the oldest entries until the
// buffer is back within capacity. A zero gate still occupies a slot.
void stm_update(MemoryState& m, const EmbeddingVector& candidate, const std::string& text,
                double gate, std::uint64_t step);

// Conditional write: stored only when gate > threshold (strict).
// Returns whether the entry was written.
bool ltm_update(MemoryState& m, const EmbeddingVector& candidate, const std::string& summary,
                double gate, double threshold, std::uint64_t step);

struct StepTrace {
    std::string query;
    EmbeddingVector state;
    OutputRecord output;
};

// At episode end, appends one Episode whose summary embedding is the gate-
// scaled normalized mean of the per-turn states. No-op when the flag is
// unset; an empty history with the flag set is skipped. Returns whether an
// episode was appended.
bool episodic_update(MemoryState& m, std::span<const StepTrace> history, double gate,
                     bool end_of_episode);

// Returns followup extended with the session's most recent STM texts (most
// recent first, capped at `depth`); unchanged when memory is empty.
std::string expand_query_with_memory(const std::string& followup, const MemoryState& m,
                                     std::size_t depth = 4);

// Embedding-similarity cache over previously answered queries.
class SemanticCache {
public:
    explicit SemanticCache(double similarity_threshold = 0.95)
        : threshold_(similarity_threshold) {}

    struct Hit {
        std::string payload;
        double similarity = 0.0;
    };

    void insert(EmbeddingVector query_embedding, std::string payload);
    // Best entry with cosine >= threshold, else miss.
    std::optional<Hit> lookup(const EmbeddingVector& query) const;

    std::size_t size() const { return entries_.size(); }
    double threshold() const { return threshold_; }

private:
    struct Entry {
        EmbeddingVector query_embedding;
        std::string payload;
    };

    double threshold_;
    std::vector<Entry> entries_;
};

// Inspection-only JSON dump (stm texts and steps, ltm metadata, episode
// summaries); not a stability contract.
std::string memory_dump_json(const MemoryState& m);

// Canonical content hash of the full memory state, for replay comparisons.
std::string memory_fingerprint(const MemoryState& m);

struct MemoryUpdateConfig {
    std::size_t dim = 768;
    std::size_t stm_capacity = 16;
    Metric metric = Metric::InnerProduct;
    FusionWeights fusion;
    std::size_t kb_k = 10;
    std::size_t stm_k = 4;
    std::size_t ltm_k = 4;
};

// Drives the full memory-aware update for a sequence of interactions:
// encode, tri-source retrieval, agent step, gated STM/LTM writes, episodic
// summarization at episode ends (STM clears afterwards; LTM and episodes
// persist for the life of the session object).
class MemorySession {
public:
    MemorySession(const MemoryUpdateConfig& config, GateParams gates);

    struct StepResult {
        OutputRecord output;
        GateValues gates;
        EmbeddingVector query_encoding;
        double memory_load_ms = 0.0;
        double memory_store_ms = 0.0;
        bool wrote_ltm = false;
        bool closed_episode = false;
    };

    StepResult step(const std::string& query, double feedback, bool end_of_episode,
                    const VectorIndex* kb);

    const MemoryState& memory() const { return memory_; }
    const AgentState& agent() const { return agent_; }
    const GateParams& gates() const { return gates_; }
    const MemoryUpdateConfig& config() const { return config_; }

private:
    MemoryUpdateConfig config_;
    GateParams gates_;
    MemoryState memory_;
    AgentState agent_;
    std::vector<StepTrace> episode_trace_;
    std::uint64_t next_step_ = 1;
};

} // namespace aaflow
