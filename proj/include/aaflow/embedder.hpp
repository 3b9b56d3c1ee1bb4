#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace aaflow {

// Fixed-dimension float32 vector deterministically derived from text.
struct EmbeddingVector {
    std::vector<float> values;
    bool normalized = false;

    std::size_t dim() const { return values.size(); }
    bool operator==(const EmbeddingVector& other) const = default;
};

// Affine latency model for the simulated remote embedding service:
// latency(batch) = request_overhead_ms + per_item_ms * batch_size.
struct LatencyParams {
    double request_overhead_ms = 0.0;
    double per_item_ms = 0.0;
};

// Deterministic hash embedder. The byte stream is d_0 = SHA-256(text),
// d_k = SHA-256(d_0 || k as 4-byte big-endian) for k >= 1, concatenated until
// at least 4*dim bytes are available. Each consecutive 4-byte big-endian
// unsigned u maps to 2*(u / 2^32) - 1, so every raw component lies in [-1, 1).
// Throws std::invalid_argument when dim == 0.
EmbeddingVector embed_text(std::string_view text, std::size_t dim);

double simulated_latency_ms(std::size_t batch_size, const LatencyParams& p);

// Embeds every text and occupies the calling thread for the simulated batch
// latency. Stateless: splitting a batch changes timing only, never values.
std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts, std::size_t dim,
                                         const LatencyParams& p);

// Unit L2 norm, direction preserved. Throws std::domain_error on zero norm
// (unreachable for hash-derived vectors).
EmbeddingVector normalize(const EmbeddingVector& v);

float dot(const EmbeddingVector& a, const EmbeddingVector& b);
float squared_l2(const EmbeddingVector& a, const EmbeddingVector& b);
float cosine(const EmbeddingVector& a, const EmbeddingVector& b);
double l2_norm(const EmbeddingVector& v);

} // namespace aaflow
