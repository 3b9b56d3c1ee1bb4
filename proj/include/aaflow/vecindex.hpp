#pragma once

#include "aaflow/embedder.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace aaflow {

// L2 ranks ascending by squared distance; InnerProduct ranks descending by
// dot product. Scores are stored without a square root for L2.
enum class Metric { L2, InnerProduct };

std::string metric_name(Metric m);
Metric parse_metric(const std::string& name);

struct SearchHit {
    std::uint64_t id = 0;
    float score = 0.0f;

    bool operator==(const SearchHit& other) const = default;
};

struct IndexEntry {
    std::uint64_t id = 0;
    EmbeddingVector vector;
};

// True when `a` ranks strictly before `b` under the metric; ties break by
// ascending id so results are fully deterministic.
bool ranks_before(Metric metric, const SearchHit& a, const SearchHit& b);

class VectorIndex {
public:
    virtual ~VectorIndex() = default;

    virtual void add_batch(std::span<const IndexEntry> items) = 0;
    virtual std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k) const = 0;
    virtual const EmbeddingVector* find(std::uint64_t id) const = 0;
    virtual std::size_t size() const = 0;
    virtual std::size_t dim() const = 0;
    virtual Metric metric() const = 0;
};

// Exact flat index: brute-force scan over all entries, insertion order
// preserved. Searching an empty index returns no hits.
class FlatIndex : public VectorIndex {
public:
    FlatIndex(std::size_t dim, Metric metric) : dim_(dim), metric_(metric) {}

    void add_batch(std::span<const IndexEntry> items) override;
    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k) const override;
    const EmbeddingVector* find(std::uint64_t id) const override;
    std::size_t size() const override { return entries_.size(); }
    std::size_t dim() const override { return dim_; }
    Metric metric() const override { return metric_; }

    const std::vector<IndexEntry>& entries() const { return entries_; }

    // Snapshot format: magic "AAFVIDX1", u32 dim, u8 metric, u64 count, then
    // little-endian (id: u64, dim x f32) records in canonical id order.
    void save_snapshot(const std::filesystem::path& path) const;
    static FlatIndex load_snapshot(const std::filesystem::path& path);

private:
    std::size_t dim_;
    Metric metric_;
    std::vector<IndexEntry> entries_;
    std::unordered_map<std::uint64_t, std::size_t> positions_;
};

// Entries routed to shards by id % shard_count. Search takes each shard's
// local top-k and merges, which is indistinguishable from a flat search over
// the union.
class ShardedIndex : public VectorIndex {
public:
    ShardedIndex(std::size_t dim, Metric metric, std::size_t shard_count);

    void add_batch(std::span<const IndexEntry> items) override;
    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k) const override;
    const EmbeddingVector* find(std::uint64_t id) const override;
    std::size_t size() const override;
    std::size_t dim() const override { return dim_; }
    Metric metric() const override { return metric_; }

    std::size_t shard_count() const { return shards_.size(); }
    const FlatIndex& shard(std::size_t i) const { return shards_[i]; }

private:
    std::size_t dim_;
    Metric metric_;
    std::vector<FlatIndex> shards_;
};

// Groups pending upserts into batches of exactly `target` items (the last
// batch may be smaller). Order-preserving; nothing is lost or duplicated.
std::vector<std::vector<IndexEntry>> coalesce_upserts(std::vector<IndexEntry> pending,
                                                      std::size_t target);

} // namespace aaflow
