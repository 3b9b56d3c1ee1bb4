#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace aaflow {

// Parameters for the reproducible synthetic corpus. The generated alphabet is
// printable ASCII minus the delimiter's characters, so delimiter occurrences
// in a file count logical node boundaries exactly.
struct CorpusSpec {
    std::uint64_t total_nodes = 0;
    std::uint64_t file_count = 0;
    std::uint64_t node_chars = 0;
    std::string delimiter = "<<<NODE>>>";
    std::uint64_t seed = 0;
};

struct ManifestEntry {
    std::string path;
    std::uint64_t node_count = 0;
};

struct CorpusManifest {
    CorpusSpec spec;
    std::vector<ManifestEntry> files;
};

struct Document {
    std::uint64_t doc_index = 0;
    std::string path;
    std::string raw_text;
};

// One logical node of text. chunk_id is globally dense over [0, N) once the
// full corpus has been split.
struct ChunkRecord {
    std::uint64_t chunk_id = 0;
    std::uint64_t doc_index = 0;
    std::uint64_t chunk_index = 0;
    std::string text;
    std::map<std::string, std::string> metadata;
};

// Two-turn retrieval case. turn1_query carries the topic token that uniquely
// identifies the gold chunk; the follow-up is elliptical and does not.
struct ConversationCase {
    std::uint64_t case_id = 0;
    std::string turn1_query;
    std::string followup_query;
    std::uint64_t gold_chunk_id = 0;
    std::string session_id;
};

// Throws std::invalid_argument when fields violate their invariants
// (total_nodes >= file_count >= 1, node_chars >= 1, non-empty delimiter).
void validate(const CorpusSpec& spec);

// Writes file_count files named doc_{i:05}.txt under out_dir plus
// manifest.json. Node distribution: floor(N/F) per file, the first N mod F
// files hold one extra. Byte-identical output for identical specs.
CorpusManifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest load_manifest(const std::filesystem::path& path);

// Reads every manifest file. Results are ordered by doc_index regardless of
// reader_workers. Throws std::runtime_error naming the path on a missing file.
std::vector<Document> load_documents(const CorpusManifest& manifest, std::size_t reader_workers);

// Splits raw text on the delimiter: chunk count == occurrences + 1, and
// joining the chunk texts with the delimiter reproduces raw_text exactly.
// An empty document yields one empty chunk. chunk_id is local (== chunk_index)
// until renumbered by split_all.
std::vector<ChunkRecord> split_by_delimiter(const Document& doc, std::string_view delimiter);

// Splits every document and assigns dense global chunk ids in document order.
std::vector<ChunkRecord> split_all(const std::vector<Document>& docs, std::string_view delimiter);

std::string topic_token(std::uint64_t case_id, std::uint64_t seed);

// Samples n_cases distinct gold chunks, injects each case's topic token at the
// head of its gold chunk text (length-preserving), and emits the two-turn
// query pair per case. Deterministic under seed. Throws std::invalid_argument
// when n_cases exceeds the chunk count or chunk texts are too short to hold a
// token.
std::vector<ConversationCase> build_conversational_cases(std::vector<ChunkRecord>& chunks,
                                                         std::size_t n_cases, std::uint64_t seed);

} // namespace aaflow
