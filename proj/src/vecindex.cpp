#include "aaflow/vecindex.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace aaflow {
namespace {

constexpr char kSnapshotMagic[8] = {'A', 'A', 'F', 'V', 'I', 'D', 'X', '1'};

void write_u32_le(std::ofstream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) {
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    }
    out.write(buf, 4);
}

void write_u64_le(std::ofstream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) {
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    }
    out.write(buf, 8);
}

std::uint32_t read_u32_le(std::ifstream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= std::uint32_t(buf[i]) << (8 * i);
    }
    return v;
}

std::uint64_t read_u64_le(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= std::uint64_t(buf[i]) << (8 * i);
    }
    return v;
}

float score_for(Metric metric, const EmbeddingVector& query, const EmbeddingVector& entry) {
    return metric == Metric::L2 ? squared_l2(query, entry) : dot(query, entry);
}

} // namespace

std::string metric_name(Metric m) {
    return m == Metric::L2 ? "l2" : "ip";
}

Metric parse_metric(const std::string& name) {
    if (name == "l2") {
        return Metric::L2;
    }
    if (name == "ip") {
        return Metric::InnerProduct;
    }
    throw std::invalid_argument("unknown metric: " + name + " (expected l2 or ip)");
}

bool ranks_before(Metric metric, const SearchHit& a, const SearchHit& b) {
    if (a.score != b.score) {
        return metric == Metric::L2 ? a.score < b.score : a.score > b.score;
    }
    return a.id < b.id;
}

void FlatIndex::add_batch(std::span<const IndexEntry> items) {
    for (const auto& item : items) {
        if (item.vector.dim() != dim_) {
            throw std::invalid_argument("FlatIndex::add_batch: vector dim " +
                                        std::to_string(item.vector.dim()) + " != index dim " +
                                        std::to_string(dim_));
        }
        if (positions_.contains(item.id)) {
            throw std::runtime_error("FlatIndex::add_batch: duplicate id " +
                                     std::to_string(item.id));
        }
    }
    for (const auto& item : items) {
        positions_.emplace(item.id, entries_.size());
        entries_.push_back(item);
    }
}

std::vector<SearchHit> FlatIndex::search(const EmbeddingVector& query, std::size_t k) const {
    if (k < 1) {
        throw std::invalid_argument("FlatIndex::search: k must be >= 1");
    }
    if (entries_.empty()) {
        return {};
    }
    if (query.dim() != dim_) {
        throw std::invalid_argument("FlatIndex::search: query dim mismatch");
    }

    std::vector<SearchHit> hits;
    hits.reserve(entries_.size());
    for (const auto& entry : entries_) {
        hits.push_back({entry.id, score_for(metric_, query, entry.vector)});
    }
    const std::size_t keep = std::min(k, hits.size());
    auto cmp = [this](const SearchHit& a, const SearchHit& b) { return ranks_before(metric_, a, b); };
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                      cmp);
    hits.resize(keep);
    return hits;
}

const EmbeddingVector* FlatIndex::find(std::uint64_t id) const {
    const auto it = positions_.find(id);
    return it == positions_.end() ? nullptr : &entries_[it->second].vector;
}

void FlatIndex::save_snapshot(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("save_snapshot: cannot write " + path.string());
    }
    // Canonical id order keeps snapshot bytes stable even when inserts raced.
    std::vector<const IndexEntry*> sorted;
    sorted.reserve(entries_.size());
    for (const auto& e : entries_) {
        sorted.push_back(&e);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const IndexEntry* a, const IndexEntry* b) { return a->id < b->id; });

    out.write(kSnapshotMagic, sizeof(kSnapshotMagic));
    write_u32_le(out, static_cast<std::uint32_t>(dim_));
    out.put(metric_ == Metric::L2 ? '\0' : '\1');
    write_u64_le(out, entries_.size());
    for (const IndexEntry* e : sorted) {
        write_u64_le(out, e->id);
        for (const float x : e->vector.values) {
            std::uint32_t bits;
            std::memcpy(&bits, &x, sizeof(bits));
            write_u32_le(out, bits);
        }
    }
    if (!out) {
        throw std::runtime_error("save_snapshot: write failed for " + path.string());
    }
}

FlatIndex FlatIndex::load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_snapshot: cannot open " + path.string());
    }
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kSnapshotMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("load_snapshot: bad magic in " + path.string());
    }
    const std::uint32_t dim = read_u32_le(in);
    const int metric_byte = in.get();
    const std::uint64_t count = read_u64_le(in);

    FlatIndex index(dim, metric_byte == 0 ? Metric::L2 : Metric::InnerProduct);
    std::vector<IndexEntry> batch;
    batch.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        IndexEntry entry;
        entry.id = read_u64_le(in);
        entry.vector.values.resize(dim);
        for (std::uint32_t d = 0; d < dim; ++d) {
            const std::uint32_t bits = read_u32_le(in);
            float x;
            std::memcpy(&x, &bits, sizeof(x));
            entry.vector.values[d] = x;
        }
        batch.push_back(std::move(entry));
    }
    if (!in) {
        throw std::runtime_error("load_snapshot: truncated snapshot " + path.string());
    }
    index.add_batch(batch);
    return index;
}

ShardedIndex::ShardedIndex(std::size_t dim, Metric metric, std::size_t shard_count)
    : dim_(dim), metric_(metric) {
    if (shard_count < 1) {
        throw std::invalid_argument("ShardedIndex: shard_count must be >= 1");
    }
    shards_.reserve(shard_count);
    for (std::size_t i = 0; i < shard_count; ++i) {
        shards_.emplace_back(dim, metric);
    }
}

void ShardedIndex::add_batch(std::span<const IndexEntry> items) {
    std::vector<std::vector<IndexEntry>> routed(shards_.size());
    for (const auto& item : items) {
        routed[item.id % shards_.size()].push_back(item);
    }
    for (std::size_t s = 0; s < shards_.size(); ++s) {
        if (!routed[s].empty()) {
            shards_[s].add_batch(routed[s]);
        }
    }
}

std::vector<SearchHit> ShardedIndex::search(const EmbeddingVector& query, std::size_t k) const {
    if (k < 1) {
        throw std::invalid_argument("ShardedIndex::search: k must be >= 1");
    }
    std::vector<SearchHit> merged;
    for (const auto& shard : shards_) {
        if (shard.size() == 0) {
            continue;
        }
        auto local = shard.search(query, k);
        merged.insert(merged.end(), local.begin(), local.end());
    }
    auto cmp = [this](const SearchHit& a, const SearchHit& b) { return ranks_before(metric_, a, b); };
    std::sort(merged.begin(), merged.end(), cmp);
    if (merged.size() > k) {
        merged.resize(k);
    }
    return merged;
}

const EmbeddingVector* ShardedIndex::find(std::uint64_t id) const {
    return shards_[id % shards_.size()].find(id);
}

std::size_t ShardedIndex::size() const {
    std::size_t total = 0;
    for (const auto& shard : shards_) {
        total += shard.size();
    }
    return total;
}

std::vector<std::vector<IndexEntry>> coalesce_upserts(std::vector<IndexEntry> pending,
                                                      std::size_t target) {
    if (target < 1) {
        throw std::invalid_argument("coalesce_upserts: target must be >= 1");
    }
    std::vector<std::vector<IndexEntry>> batches;
    std::size_t i = 0;
    while (i < pending.size()) {
        const std::size_t take = std::min(target, pending.size() - i);
        std::vector<IndexEntry> batch;
        batch.reserve(take);
        for (std::size_t j = 0; j < take; ++j) {
            batch.push_back(std::move(pending[i + j]));
        }
        batches.push_back(std::move(batch));
        i += take;
    }
    return batches;
}

} // namespace aaflow
