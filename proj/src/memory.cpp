#include "aaflow/memory.hpp"

#include "aaflow/rng.hpp"
#include "aaflow/sha256.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace aaflow {
namespace {

// Stable sigmoid, clamped to the open interval so saturation at extreme
// pre-activations cannot produce an exact 0 or 1.
double sigmoid(double x) {
    double y;
    if (x >= 0) {
        y = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        y = e / (1.0 + e);
    }
    y = std::min(y, std::nextafter(1.0, 0.0));
    y = std::max(y, std::nextafter(0.0, 1.0));
    return y;
}

double weighted_sum(const std::vector<float>& weights, const EmbeddingVector& h) {
    const std::size_t n = std::min(weights.size(), h.values.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(weights[i]) * static_cast<double>(h.values[i]);
    }
    return acc;
}

// Similarity on the fused scale: higher is better for both metrics.
double fused_similarity(Metric metric, float score) {
    return metric == Metric::L2 ? -static_cast<double>(score) : static_cast<double>(score);
}

int source_priority(ContextSource s) {
    switch (s) {
    case ContextSource::KnowledgeBase: return 0;
    case ContextSource::ShortTerm: return 1;
    case ContextSource::LongTerm: return 2;
    }
    return 3;
}

std::string state_digest(const EmbeddingVector& h) {
    Sha256 hasher;
    for (const float x : h.values) {
        std::uint32_t bits;
        std::memcpy(&bits, &x, sizeof(bits));
        const std::uint8_t le[4] = {
            static_cast<std::uint8_t>(bits),
            static_cast<std::uint8_t>(bits >> 8),
            static_cast<std::uint8_t>(bits >> 16),
            static_cast<std::uint8_t>(bits >> 24),
        };
        hasher.update(le, 4);
    }
    return Sha256::hex(hasher.finish());
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

} // namespace

GateParams GateParams::from_seed(std::uint64_t seed, std::size_t dim, double tau_l) {
    if (tau_l <= 0.0 || tau_l >= 1.0) {
        throw std::invalid_argument("GateParams: tau_l must lie in (0,1)");
    }
    GateParams p;
    p.seed = seed;
    p.ltm_threshold = tau_l;
    Rng rng(seed);
    auto sample = [&rng, dim] {
        std::vector<float> w(dim);
        for (auto& x : w) {
            x = static_cast<float>(rng.next_symmetric());
        }
        return w;
    };
    p.stm_weights = sample();
    p.ltm_weights = sample();
    p.em_weights = sample();
    p.stm_bias = rng.next_symmetric();
    p.ltm_bias = rng.next_symmetric();
    p.em_bias = rng.next_symmetric();
    return p;
}

AgentState AgentState::initial(std::size_t dim) {
    AgentState s;
    s.h = normalize(embed_text("", dim));
    s.step = 0;
    return s;
}

bool operator==(const MemoryState& a, const MemoryState& b) {
    return a.dim == b.dim && a.stm_capacity == b.stm_capacity && a.stm == b.stm &&
           a.ltm == b.ltm && a.episodes == b.episodes &&
           a.ltm_index.metric() == b.ltm_index.metric() &&
           std::equal(a.ltm_index.entries().begin(), a.ltm_index.entries().end(),
                      b.ltm_index.entries().begin(), b.ltm_index.entries().end(),
                      [](const IndexEntry& x, const IndexEntry& y) {
                          return x.id == y.id && x.vector == y.vector;
                      }) &&
           a.ltm_index.size() == b.ltm_index.size();
}

std::string memory_digest(const MemoryState& m, std::size_t depth) {
    const std::size_t take = std::min(depth, m.stm.size());
    std::string digest;
    for (std::size_t i = 0; i < take; ++i) {
        const auto& entry = m.stm[m.stm.size() - 1 - i]; // most recent first
        if (!digest.empty()) {
            digest += " ";
        }
        digest += entry.text;
    }
    return digest;
}

EmbeddingVector encode_query(const std::string& text, const MemoryState& m, std::size_t dim) {
    const std::string digest = memory_digest(m);
    if (digest.empty()) {
        return normalize(embed_text(text, dim));
    }
    return normalize(embed_text(text + " " + digest, dim));
}

std::vector<SearchHit> search_stm(const MemoryState& m, const EmbeddingVector& query,
                                  std::size_t k) {
    if (k == 0 || m.stm.empty()) {
        return {};
    }
    const Metric metric = m.metric();
    std::vector<SearchHit> hits;
    hits.reserve(m.stm.size());
    for (const auto& entry : m.stm) {
        const float score = metric == Metric::L2 ? squared_l2(query, entry.embedding)
                                                 : dot(query, entry.embedding);
        hits.push_back({entry.step, score});
    }
    auto cmp = [metric](const SearchHit& a, const SearchHit& b) {
        return ranks_before(metric, a, b);
    };
    const std::size_t keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                      cmp);
    hits.resize(keep);
    return hits;
}

FusedContext fuse_context(const EmbeddingVector& query, const VectorIndex* kb,
                          const MemoryState& m, std::vector<SearchHit> kb_hits,
                          std::vector<SearchHit> stm_hits, std::vector<SearchHit> ltm_hits,
                          const FusionWeights& weights) {
    (void)query;
    FusedContext ctx;
    ctx.weights = weights;
    ctx.kb_hits = std::move(kb_hits);
    ctx.stm_hits = std::move(stm_hits);
    ctx.ltm_hits = std::move(ltm_hits);

    const Metric metric = m.metric();
    auto push = [&](ContextSource source, const SearchHit& hit, double weight,
                    const EmbeddingVector* embedding) {
        if (embedding == nullptr) {
            return;
        }
        FusedEntry e;
        e.source = source;
        e.id = hit.id;
        e.similarity = fused_similarity(metric, hit.score);
        e.fused_score = weight * e.similarity;
        e.embedding = *embedding;
        ctx.merged.push_back(std::move(e));
    };

    for (const auto& hit : ctx.kb_hits) {
        push(ContextSource::KnowledgeBase, hit, weights.kb, kb ? kb->find(hit.id) : nullptr);
    }
    for (const auto& hit : ctx.stm_hits) {
        const auto it = std::find_if(m.stm.begin(), m.stm.end(),
                                     [&](const StmEntry& e) { return e.step == hit.id; });
        push(ContextSource::ShortTerm, hit, weights.stm, it == m.stm.end() ? nullptr : &it->embedding);
    }
    for (const auto& hit : ctx.ltm_hits) {
        push(ContextSource::LongTerm, hit, weights.ltm, m.ltm_index.find(hit.id));
    }

    std::sort(ctx.merged.begin(), ctx.merged.end(), [](const FusedEntry& a, const FusedEntry& b) {
        if (a.fused_score != b.fused_score) {
            return a.fused_score > b.fused_score;
        }
        if (source_priority(a.source) != source_priority(b.source)) {
            return source_priority(a.source) < source_priority(b.source);
        }
        return a.id < b.id;
    });
    return ctx;
}

FusedContext retrieve_fused(const EmbeddingVector& query, const VectorIndex* kb,
                            const MemoryState& m, std::size_t kb_k, std::size_t stm_k,
                            std::size_t ltm_k, const FusionWeights& weights) {
    std::vector<SearchHit> kb_hits;
    if (kb != nullptr && kb_k > 0 && kb->size() > 0) {
        kb_hits = kb->search(query, kb_k);
    }
    std::vector<SearchHit> stm_hits = search_stm(m, query, stm_k);
    std::vector<SearchHit> ltm_hits;
    if (ltm_k > 0 && m.ltm_index.size() > 0) {
        ltm_hits = m.ltm_index.search(query, ltm_k);
    }
    return fuse_context(query, kb, m, std::move(kb_hits), std::move(stm_hits),
                        std::move(ltm_hits), weights);
}

std::pair<AgentState, OutputRecord> agent_step(const AgentState& state,
                                               const EmbeddingVector& query_encoding,
                                               const FusedContext& ctx) {
    const std::size_t dim = state.h.dim();
    std::vector<double> centroid(dim, 0.0);
    std::size_t members = 0;

    auto accumulate = [&](const EmbeddingVector& v) {
        for (std::size_t i = 0; i < dim; ++i) {
            centroid[i] += static_cast<double>(v.values[i]);
        }
        ++members;
    };
    accumulate(query_encoding);
    for (const auto& entry : ctx.merged) {
        accumulate(entry.embedding);
    }

    EmbeddingVector next;
    next.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const double c = centroid[i] / static_cast<double>(members);
        next.values[i] =
            static_cast<float>(0.5 * static_cast<double>(state.h.values[i]) + 0.5 * c);
    }

    AgentState updated;
    updated.h = normalize(next);
    updated.step = state.step + 1;

    OutputRecord output;
    if (!ctx.merged.empty()) {
        output.top_id = static_cast<std::int64_t>(ctx.merged.front().id);
        output.top_source = static_cast<char>(ctx.merged.front().source);
    }
    output.state_digest = state_digest(updated.h);
    return {std::move(updated), std::move(output)};
}

GateValues write_gates(const AgentState& state, double feedback, const GateParams& params) {
    GateValues g;
    g.stm = sigmoid(weighted_sum(params.stm_weights, state.h) + params.stm_bias);
    const double feedback_term =
        params.ltm_weights.empty() ? 0.0
                                   : feedback * static_cast<double>(params.ltm_weights.back());
    g.ltm = sigmoid(weighted_sum(params.ltm_weights, state.h) + feedback_term + params.ltm_bias);
    g.em = sigmoid(weighted_sum(params.em_weights, state.h) + params.em_bias);
    return g;
}

void stm_update(MemoryState& m, const EmbeddingVector& candidate, const std::string& text,
                double gate, std::uint64_t step) {
    if (m.stm_capacity < 1) {
        throw std::invalid_argument("stm_update: capacity must be >= 1");
    }
    StmEntry entry;
    entry.embedding.values.resize(candidate.values.size());
    for (std::size_t i = 0; i < candidate.values.size(); ++i) {
        entry.embedding.values[i] = static_cast<float>(gate * candidate.values[i]);
    }
    entry.text = text;
    entry.step = step;
    m.stm.push_back(std::move(entry));
    while (m.stm.size() > m.stm_capacity) {
        m.stm.pop_front();
    }
}

bool ltm_update(MemoryState& m, const EmbeddingVector& candidate, const std::string& summary,
                double gate, double threshold, std::uint64_t step) {
    if (threshold <= 0.0 || threshold >= 1.0) {
        throw std::invalid_argument("ltm_update: threshold must lie in (0,1)");
    }
    if (!(gate > threshold)) {
        return false;
    }
    IndexEntry entry;
    entry.id = step;
    entry.vector = candidate;
    m.ltm_index.add_batch(std::span<const IndexEntry>(&entry, 1));
    m.ltm.emplace(step, LtmEntry{summary, gate, step});
    return true;
}

bool episodic_update(MemoryState& m, std::span<const StepTrace> history, double gate,
                     bool end_of_episode) {
    if (!end_of_episode || history.empty()) {
        return false;
    }
    const std::size_t dim = history.front().state.dim();
    std::vector<double> mean(dim, 0.0);
    for (const auto& trace : history) {
        for (std::size_t i = 0; i < dim; ++i) {
            mean[i] += static_cast<double>(trace.state.values[i]);
        }
    }
    EmbeddingVector summary;
    summary.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        summary.values[i] = static_cast<float>(mean[i] / static_cast<double>(history.size()));
    }
    summary = normalize(summary);
    for (auto& x : summary.values) {
        x = static_cast<float>(gate * x);
    }

    Episode episode;
    episode.episode_id = "ep_" + std::to_string(m.episodes.size());
    episode.summary_embedding = std::move(summary);
    episode.turns.reserve(history.size());
    for (const auto& trace : history) {
        episode.turns.push_back({trace.query, trace.output.state_digest});
    }
    m.episodes.push_back(std::move(episode));
    return true;
}

std::string expand_query_with_memory(const std::string& followup, const MemoryState& m,
                                     std::size_t depth) {
    const std::string digest = memory_digest(m, depth);
    if (digest.empty()) {
        return followup;
    }
    return followup + " " + digest;
}

void SemanticCache::insert(EmbeddingVector query_embedding, std::string payload) {
    entries_.push_back({std::move(query_embedding), std::move(payload)});
}

std::optional<SemanticCache::Hit> SemanticCache::lookup(const EmbeddingVector& query) const {
    std::optional<Hit> best;
    for (const auto& entry : entries_) {
        const double sim = static_cast<double>(cosine(query, entry.query_embedding));
        if (sim < threshold_) {
            continue;
        }
        if (!best || sim > best->similarity) {
            best = Hit{entry.payload, sim};
        }
    }
    return best;
}

std::string memory_dump_json(const MemoryState& m) {
    nlohmann::json j;
    j["stm_capacity"] = m.stm_capacity;
    j["dim"] = m.dim;
    j["stm"] = nlohmann::json::array();
    for (const auto& e : m.stm) {
        j["stm"].push_back({{"step", e.step}, {"text", e.text}});
    }
    j["ltm"] = nlohmann::json::array();
    for (const auto& [step, e] : m.ltm) {
        j["ltm"].push_back({{"step", step}, {"summary", e.summary}, {"gate", e.gate_value}});
    }
    j["episodes"] = nlohmann::json::array();
    for (const auto& ep : m.episodes) {
        nlohmann::json turns = nlohmann::json::array();
        for (const auto& t : ep.turns) {
            turns.push_back({{"query", t.query}, {"output_digest", t.output_digest}});
        }
        j["episodes"].push_back({{"episode_id", ep.episode_id}, {"turns", std::move(turns)}});
    }
    return j.dump(2);
}

std::string memory_fingerprint(const MemoryState& m) {
    Sha256 hasher;
    auto mix_u64 = [&hasher](std::uint64_t v) {
        std::uint8_t le[8];
        for (int i = 0; i < 8; ++i) {
            le[i] = static_cast<std::uint8_t>(v >> (8 * i));
        }
        hasher.update(le, 8);
    };
    auto mix_str = [&](const std::string& s) {
        mix_u64(s.size());
        hasher.update(s.data(), s.size());
    };
    auto mix_vec = [&](const EmbeddingVector& v) {
        mix_u64(v.values.size());
        for (const float x : v.values) {
            std::uint32_t bits;
            std::memcpy(&bits, &x, sizeof(bits));
            std::uint8_t le[4] = {
                static_cast<std::uint8_t>(bits),
                static_cast<std::uint8_t>(bits >> 8),
                static_cast<std::uint8_t>(bits >> 16),
                static_cast<std::uint8_t>(bits >> 24),
            };
            hasher.update(le, 4);
        }
    };

    mix_u64(m.stm.size());
    for (const auto& e : m.stm) {
        mix_u64(e.step);
        mix_str(e.text);
        mix_vec(e.embedding);
    }
    mix_u64(m.ltm.size());
    for (const auto& [step, e] : m.ltm) {
        mix_u64(step);
        mix_str(e.summary);
        std::uint64_t gate_bits;
        std::memcpy(&gate_bits, &e.gate_value, sizeof(gate_bits));
        mix_u64(gate_bits);
        if (const EmbeddingVector* v = m.ltm_index.find(step)) {
            mix_vec(*v);
        }
    }
    mix_u64(m.episodes.size());
    for (const auto& ep : m.episodes) {
        mix_str(ep.episode_id);
        mix_vec(ep.summary_embedding);
        mix_u64(ep.turns.size());
        for (const auto& t : ep.turns) {
            mix_str(t.query);
            mix_str(t.output_digest);
        }
    }
    return Sha256::hex(hasher.finish());
}

MemorySession::MemorySession(const MemoryUpdateConfig& config, GateParams gates)
    : config_(config), gates_(std::move(gates)),
      memory_(config.dim, config.stm_capacity, config.metric),
      agent_(AgentState::initial(config.dim)) {}

MemorySession::StepResult MemorySession::step(const std::string& query, double feedback,
                                              bool end_of_episode, const VectorIndex* kb) {
    StepResult result;

    const EmbeddingVector encoding = encode_query(query, memory_, config_.dim);

    // Memory-side retrieval is timed separately from the KB search.
    const auto load_start = std::chrono::steady_clock::now();
    std::vector<SearchHit> stm_hits = search_stm(memory_, encoding, config_.stm_k);
    std::vector<SearchHit> ltm_hits;
    if (config_.ltm_k > 0 && memory_.ltm_index.size() > 0) {
        ltm_hits = memory_.ltm_index.search(encoding, config_.ltm_k);
    }
    result.memory_load_ms = elapsed_ms(load_start);

    std::vector<SearchHit> kb_hits;
    if (kb != nullptr && config_.kb_k > 0 && kb->size() > 0) {
        kb_hits = kb->search(encoding, config_.kb_k);
    }

    FusedContext ctx = fuse_context(encoding, kb, memory_, std::move(kb_hits),
                                    std::move(stm_hits), std::move(ltm_hits), config_.fusion);

    auto [next_agent, output] = agent_step(agent_, encoding, ctx);
    agent_ = std::move(next_agent);
    result.gates = write_gates(agent_, feedback, gates_);

    const std::uint64_t step_id = next_step_++;
    const auto store_start = std::chrono::steady_clock::now();
    stm_update(memory_, encoding, query, result.gates.stm, step_id);
    result.wrote_ltm =
        ltm_update(memory_, encoding, query, result.gates.ltm, gates_.ltm_threshold, step_id);
    episode_trace_.push_back({query, agent_.h, output});
    if (end_of_episode) {
        result.closed_episode =
            episodic_update(memory_, episode_trace_, result.gates.em, true);
        episode_trace_.clear();
        memory_.stm.clear(); // session scope: STM does not survive the episode
    }
    result.memory_store_ms = elapsed_ms(store_start);

    result.output = std::move(output);
    result.query_encoding = encoding;
    return result;
}

} // namespace aaflow
