#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace aaflow {

// Rank of the first correct result for one case; absent when the correct
// chunk is not found within the evaluated depth.
struct RankOutcome {
    std::uint64_t case_id = 0;
    std::optional<std::uint32_t> rank;
};

struct QualitySummary {
    std::size_t count = 0;
    double top1 = 0.0;
    double hit_at_k = 0.0;
    double mrr = 0.0;
    std::size_t k = 10;
};

// Per-query latency fields; aggregates are arithmetic means.
struct LatencySample {
    double lookup_ms = 0.0;
    double retrieval_ms = 0.0;
    double memory_load_ms = 0.0;
    double memory_store_ms = 0.0;
    double total_ms = 0.0;
    bool cache_hit = false;
};

struct LatencySummary {
    std::size_t count = 0;
    double hit_rate = 0.0;
    double lookup_ms = 0.0;
    double retrieval_ms = 0.0;
    double memory_load_ms = 0.0;
    double memory_store_ms = 0.0;
    double total_ms = 0.0;
};

// Fraction of cases ranked first.
double top1(std::span<const RankOutcome> outcomes);

// Fraction of cases ranked within the top k. Absent ranks count as misses.
double hit_at_k(std::span<const RankOutcome> outcomes, std::size_t k);

// Mean reciprocal rank; a case with no correct result contributes 0.
double mrr(std::span<const RankOutcome> outcomes);

QualitySummary summarize_quality(std::span<const RankOutcome> outcomes, std::size_t k);

// Arithmetic mean; throws std::invalid_argument on empty input.
double mean(std::span<const double> samples);

LatencySummary summarize_latency(std::span<const LatencySample> samples);

} // namespace aaflow
