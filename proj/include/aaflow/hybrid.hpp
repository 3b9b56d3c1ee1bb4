#pragma once

#include "aaflow/corpus.hpp"
#include "aaflow/embedder.hpp"
#include "aaflow/vecindex.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace aaflow {

// Lowercased [a-z0-9_]+ runs of length >= 4. Short runs are dropped so query
// phrasing cannot collide with fragments of random corpus text.
std::vector<std::string> lexical_tokens(std::string_view text);

struct HybridWeights {
    double vector_weight = 1.0;
    double lexical_weight = 1.0;
};

// Dual-path retrieval over a chunk corpus: dense similarity from the hash
// embedder plus a sparse keyword score. The lexical side scores each chunk by
// the summed idf (ln(1 + N/df)) of the query tokens it contains, so a query
// sharing a corpus-unique token with exactly one chunk ranks that chunk first
// regardless of embedding noise.
class HybridRetriever {
public:
    HybridRetriever(const std::vector<ChunkRecord>& chunks, std::size_t dim, Metric metric,
                    HybridWeights weights = {});

    std::vector<SearchHit> retrieve(const std::string& query_text, std::size_t k) const;

    // Rank (1-based) of `target` in the full ranking for the query, for
    // quality evaluation. Always present since the scan is exhaustive.
    std::uint32_t rank_of(const std::string& query_text, std::uint64_t target_id) const;

    const FlatIndex& index() const { return index_; }
    std::size_t chunk_count() const { return ids_.size(); }

    EmbeddingVector embed_query(const std::string& query_text) const;

private:
    std::vector<double> combined_scores(const std::string& query_text) const;

    std::size_t dim_;
    Metric metric_;
    HybridWeights weights_;
    FlatIndex index_;
    std::vector<std::uint64_t> ids_; // position -> chunk id
    std::unordered_map<std::uint64_t, std::size_t> id_to_pos_;
    std::unordered_map<std::string, std::vector<std::size_t>> postings_;
};

} // namespace aaflow
