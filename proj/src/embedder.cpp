#include "aaflow/embedder.hpp"

#include "aaflow/sha256.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace aaflow {

EmbeddingVector embed_text(std::string_view text, std::size_t dim) {
    if (dim == 0) {
        throw std::invalid_argument("embed_text: dim must be >= 1");
    }

    const Sha256::Digest base = Sha256::hash(text);

    const std::size_t needed = 4 * dim;
    std::vector<std::uint8_t> stream;
    stream.reserve(needed + 32);
    stream.insert(stream.end(), base.begin(), base.end());

    std::uint32_t counter = 1;
    while (stream.size() < needed) {
        Sha256 h;
        h.update(base.data(), base.size());
        const std::uint8_t ctr_be[4] = {
            static_cast<std::uint8_t>(counter >> 24),
            static_cast<std::uint8_t>(counter >> 16),
            static_cast<std::uint8_t>(counter >> 8),
            static_cast<std::uint8_t>(counter),
        };
        h.update(ctr_be, 4);
        const Sha256::Digest next = h.finish();
        stream.insert(stream.end(), next.begin(), next.end());
        ++counter;
    }

    EmbeddingVector out;
    out.values.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const std::uint32_t u = (std::uint32_t(stream[4 * i]) << 24) |
                                (std::uint32_t(stream[4 * i + 1]) << 16) |
                                (std::uint32_t(stream[4 * i + 2]) << 8) |
                                std::uint32_t(stream[4 * i + 3]);
        out.values[i] = static_cast<float>(2.0 * (static_cast<double>(u) / 4294967296.0) - 1.0);
    }
    return out;
}

double simulated_latency_ms(std::size_t batch_size, const LatencyParams& p) {
    return p.request_overhead_ms + p.per_item_ms * static_cast<double>(batch_size);
}

namespace {

// Occupies the calling thread for exactly the requested duration: a coarse
// sleep up to the last ~1.5 ms, then a spin to the deadline. Plain sleep_for
// overshoots by the kernel timer slack on every call, which compounds over
// thousands of serial batch calls.
void occupy_for_ms(double latency_ms) {
    using Clock = std::chrono::steady_clock;
    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double, std::milli>(latency_ms));
    const auto coarse = deadline - std::chrono::microseconds(1500);
    if (coarse > Clock::now()) {
        std::this_thread::sleep_until(coarse);
    }
    while (Clock::now() < deadline) {
    }
}

} // namespace

std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts, std::size_t dim,
                                         const LatencyParams& p) {
    if (texts.empty()) {
        throw std::invalid_argument("embed_batch: texts must be non-empty");
    }
    const double latency = simulated_latency_ms(texts.size(), p);
    if (latency > 0.0) {
        occupy_for_ms(latency);
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        out.push_back(embed_text(t, dim));
    }
    return out;
}

double l2_norm(const EmbeddingVector& v) {
    double acc = 0.0;
    for (const float x : v.values) {
        acc += static_cast<double>(x) * static_cast<double>(x);
    }
    return std::sqrt(acc);
}

EmbeddingVector normalize(const EmbeddingVector& v) {
    const double norm = l2_norm(v);
    if (norm <= 0.0) {
        throw std::domain_error("normalize: zero-norm vector");
    }
    EmbeddingVector out;
    out.values.resize(v.values.size());
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        out.values[i] = static_cast<float>(static_cast<double>(v.values[i]) / norm);
    }
    out.normalized = true;
    return out;
}

float dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        acc += a.values[i] * b.values[i];
    }
    return acc;
}

float squared_l2(const EmbeddingVector& a, const EmbeddingVector& b) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const float d = a.values[i] - b.values[i];
        acc += d * d;
    }
    return acc;
}

float cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0f;
    }
    return static_cast<float>(static_cast<double>(dot(a, b)) / (na * nb));
}

} // namespace aaflow
