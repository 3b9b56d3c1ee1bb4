#include "aaflow/hybrid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace aaflow {
namespace {

constexpr std::size_t kMinTokenLength = 4;

bool token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

} // namespace

std::vector<std::string> lexical_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.size() >= kMinTokenLength) {
            tokens.push_back(current);
        }
        current.clear();
    };
    for (const char c : text) {
        if (token_char(c)) {
            current.push_back(
                static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

HybridRetriever::HybridRetriever(const std::vector<ChunkRecord>& chunks, std::size_t dim,
                                 Metric metric, HybridWeights weights)
    : dim_(dim), metric_(metric), weights_(weights), index_(dim, metric) {
    ids_.reserve(chunks.size());
    std::vector<IndexEntry> entries;
    entries.reserve(chunks.size());
    for (const auto& chunk : chunks) {
        EmbeddingVector v = embed_text(chunk.text, dim_);
        if (metric_ == Metric::InnerProduct) {
            v = normalize(v);
        }
        entries.push_back({chunk.chunk_id, std::move(v)});

        const std::size_t pos = ids_.size();
        id_to_pos_.emplace(chunk.chunk_id, pos);
        ids_.push_back(chunk.chunk_id);

        // Each chunk counts once per distinct token.
        std::set<std::string> seen;
        for (auto& token : lexical_tokens(chunk.text)) {
            seen.insert(std::move(token));
        }
        for (const auto& token : seen) {
            postings_[token].push_back(pos);
        }
    }
    index_.add_batch(entries);
}

EmbeddingVector HybridRetriever::embed_query(const std::string& query_text) const {
    EmbeddingVector v = embed_text(query_text, dim_);
    if (metric_ == Metric::InnerProduct) {
        v = normalize(v);
    }
    return v;
}

std::vector<double> HybridRetriever::combined_scores(const std::string& query_text) const {
    const EmbeddingVector query = embed_query(query_text);
    const auto& entries = index_.entries();
    const double n = static_cast<double>(entries.size());

    // L2 distances are unbounded, so they are squashed through 1/(1+d^2); the
    // transform is strictly monotone, keeping the pure-vector ranking intact
    // while bounding the dense term so a corpus-unique keyword always wins.
    std::vector<double> scores(entries.size(), 0.0);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const double sim =
            metric_ == Metric::L2
                ? 1.0 / (1.0 + static_cast<double>(squared_l2(query, entries[i].vector)))
                : static_cast<double>(dot(query, entries[i].vector));
        scores[i] = weights_.vector_weight * sim;
    }

    std::set<std::string> query_tokens;
    for (auto& token : lexical_tokens(query_text)) {
        query_tokens.insert(std::move(token));
    }
    for (const auto& token : query_tokens) {
        const auto it = postings_.find(token);
        if (it == postings_.end()) {
            continue;
        }
        const double idf = std::log(1.0 + n / static_cast<double>(it->second.size()));
        for (const std::size_t pos : it->second) {
            scores[pos] += weights_.lexical_weight * idf;
        }
    }
    return scores;
}

std::vector<SearchHit> HybridRetriever::retrieve(const std::string& query_text,
                                                 std::size_t k) const {
    if (k < 1) {
        throw std::invalid_argument("HybridRetriever::retrieve: k must be >= 1");
    }
    const std::vector<double> scores = combined_scores(query_text);

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    auto cmp = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return ids_[a] < ids_[b];
    };
    const std::size_t keep = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                      order.end(), cmp);

    std::vector<SearchHit> hits;
    hits.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        hits.push_back({ids_[order[i]], static_cast<float>(scores[order[i]])});
    }
    return hits;
}

std::uint32_t HybridRetriever::rank_of(const std::string& query_text,
                                       std::uint64_t target_id) const {
    const auto it = id_to_pos_.find(target_id);
    if (it == id_to_pos_.end()) {
        throw std::invalid_argument("HybridRetriever::rank_of: unknown chunk id " +
                                    std::to_string(target_id));
    }
    const std::vector<double> scores = combined_scores(query_text);
    const std::size_t target_pos = it->second;
    const double target_score = scores[target_pos];

    std::uint32_t rank = 1;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (i == target_pos) {
            continue;
        }
        if (scores[i] > target_score ||
            (scores[i] == target_score && ids_[i] < ids_[target_pos])) {
            ++rank;
        }
    }
    return rank;
}

} // namespace aaflow
