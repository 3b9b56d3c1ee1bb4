#include "aaflow/evalmetrics.hpp"

#include <stdexcept>

namespace aaflow {
namespace {

double ratio(std::size_t hits, std::size_t total) {
    if (total == 0) {
        throw std::invalid_argument("metrics: empty outcome set");
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

} // namespace

double top1(std::span<const RankOutcome> outcomes) {
    std::size_t hits = 0;
    for (const auto& o : outcomes) {
        if (o.rank && *o.rank == 1) {
            ++hits;
        }
    }
    return ratio(hits, outcomes.size());
}

double hit_at_k(std::span<const RankOutcome> outcomes, std::size_t k) {
    std::size_t hits = 0;
    for (const auto& o : outcomes) {
        if (o.rank && *o.rank <= k) {
            ++hits;
        }
    }
    return ratio(hits, outcomes.size());
}

double mrr(std::span<const RankOutcome> outcomes) {
    if (outcomes.empty()) {
        throw std::invalid_argument("metrics: empty outcome set");
    }
    double sum = 0.0;
    for (const auto& o : outcomes) {
        if (o.rank) {
            sum += 1.0 / static_cast<double>(*o.rank);
        }
    }
    return sum / static_cast<double>(outcomes.size());
}

QualitySummary summarize_quality(std::span<const RankOutcome> outcomes, std::size_t k) {
    QualitySummary s;
    s.count = outcomes.size();
    s.k = k;
    s.top1 = top1(outcomes);
    s.hit_at_k = hit_at_k(outcomes, k);
    s.mrr = mrr(outcomes);
    return s;
}

double mean(std::span<const double> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("mean: empty input");
    }
    double sum = 0.0;
    for (const double x : samples) {
        sum += x;
    }
    return sum / static_cast<double>(samples.size());
}

LatencySummary summarize_latency(std::span<const LatencySample> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("summarize_latency: empty input");
    }
    LatencySummary s;
    s.count = samples.size();
    std::size_t hits = 0;
    for (const auto& x : samples) {
        s.lookup_ms += x.lookup_ms;
        s.retrieval_ms += x.retrieval_ms;
        s.memory_load_ms += x.memory_load_ms;
        s.memory_store_ms += x.memory_store_ms;
        s.total_ms += x.total_ms;
        hits += x.cache_hit ? 1 : 0;
    }
    const auto n = static_cast<double>(samples.size());
    s.lookup_ms /= n;
    s.retrieval_ms /= n;
    s.memory_load_ms /= n;
    s.memory_store_ms /= n;
    s.total_ms /= n;
    s.hit_rate = static_cast<double>(hits) / n;
    return s;
}

} // namespace aaflow
