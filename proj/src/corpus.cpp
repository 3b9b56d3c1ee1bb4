#include "aaflow/corpus.hpp"

#include "aaflow/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace aaflow {
namespace {

// Elliptical follow-up shared across cases. Words are long enough that an
// accidental token collision with random corpus text is vanishingly unlikely.
constexpr const char* kFollowupTemplate = "summarize the central property discussed previously";

std::string build_alphabet(const std::string& delimiter) {
    std::string alphabet;
    for (char c = 0x20; c <= 0x7e; ++c) {
        if (delimiter.find(c) == std::string::npos) {
            alphabet.push_back(c);
        }
    }
    return alphabet;
}

std::string doc_file_name(std::uint64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "doc_%05llu.txt", static_cast<unsigned long long>(index));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_documents: cannot open file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void validate(const CorpusSpec& spec) {
    if (spec.file_count < 1) {
        throw std::invalid_argument("corpus spec: file_count must be >= 1");
    }
    if (spec.total_nodes < spec.file_count) {
        throw std::invalid_argument("corpus spec: total_nodes must be >= file_count");
    }
    if (spec.node_chars < 1) {
        throw std::invalid_argument("corpus spec: node_chars must be >= 1");
    }
    if (spec.delimiter.empty()) {
        throw std::invalid_argument("corpus spec: delimiter must be non-empty");
    }
}

CorpusManifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir) {
    validate(spec);
    std::filesystem::create_directories(out_dir);

    const std::string alphabet = build_alphabet(spec.delimiter);
    if (alphabet.empty()) {
        throw std::invalid_argument("corpus spec: delimiter excludes the whole alphabet");
    }

    Rng rng(spec.seed);
    const std::uint64_t base_nodes = spec.total_nodes / spec.file_count;
    const std::uint64_t remainder = spec.total_nodes % spec.file_count;

    CorpusManifest manifest;
    manifest.spec = spec;
    manifest.files.reserve(spec.file_count);

    for (std::uint64_t f = 0; f < spec.file_count; ++f) {
        const std::uint64_t nodes_here = base_nodes + (f < remainder ? 1 : 0);
        std::string text;
        text.reserve(nodes_here * (spec.node_chars + spec.delimiter.size()));
        for (std::uint64_t n = 0; n < nodes_here; ++n) {
            if (n > 0) {
                text += spec.delimiter;
            }
            for (std::uint64_t c = 0; c < spec.node_chars; ++c) {
                text.push_back(alphabet[rng.next_below(alphabet.size())]);
            }
        }

        const std::filesystem::path path = out_dir / doc_file_name(f);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("generate_corpus: cannot write " + path.string());
        }
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) {
            throw std::runtime_error("generate_corpus: write failed for " + path.string());
        }
        manifest.files.push_back({path.string(), nodes_here});
    }

    save_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
    nlohmann::json j;
    j["spec"] = {
        {"total_nodes", manifest.spec.total_nodes}, {"file_count", manifest.spec.file_count},
        {"node_chars", manifest.spec.node_chars},   {"delimiter", manifest.spec.delimiter},
        {"seed", manifest.spec.seed},
    };
    j["files"] = nlohmann::json::array();
    for (const auto& f : manifest.files) {
        j["files"].push_back({{"path", f.path}, {"nodes", f.node_count}});
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("save_manifest: cannot write " + path.string());
    }
    out << j.dump(2) << "\n";
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_manifest: cannot open " + path.string());
    }
    nlohmann::json j;
    in >> j;

    CorpusManifest manifest;
    manifest.spec.total_nodes = j.at("spec").at("total_nodes").get<std::uint64_t>();
    manifest.spec.file_count = j.at("spec").at("file_count").get<std::uint64_t>();
    manifest.spec.node_chars = j.at("spec").at("node_chars").get<std::uint64_t>();
    manifest.spec.delimiter = j.at("spec").at("delimiter").get<std::string>();
    manifest.spec.seed = j.at("spec").at("seed").get<std::uint64_t>();
    for (const auto& f : j.at("files")) {
        manifest.files.push_back({f.at("path").get<std::string>(), f.at("nodes").get<std::uint64_t>()});
    }
    return manifest;
}

std::vector<Document> load_documents(const CorpusManifest& manifest, std::size_t reader_workers) {
    std::vector<Document> docs(manifest.files.size());
    if (manifest.files.empty()) {
        return docs;
    }
    reader_workers = std::max<std::size_t>(1, reader_workers);

    if (reader_workers == 1) {
        for (std::size_t i = 0; i < manifest.files.size(); ++i) {
            docs[i] = Document{i, manifest.files[i].path, read_file(manifest.files[i].path)};
        }
        return docs;
    }

    // Workers pull the next file index; each result lands in its doc_index
    // slot, so the output order never depends on scheduling.
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= manifest.files.size() || failed.load()) {
                return;
            }
            try {
                docs[i] = Document{i, manifest.files[i].path, read_file(manifest.files[i].path)};
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) {
                    first_error = e.what();
                }
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    const std::size_t count = std::min(reader_workers, manifest.files.size());
    threads.reserve(count);
    for (std::size_t t = 0; t < count; ++t) {
        threads.emplace_back(worker);
    }
    for (auto& t : threads) {
        t.join();
    }
    if (failed.load()) {
        throw std::runtime_error(first_error);
    }
    return docs;
}

std::vector<ChunkRecord> split_by_delimiter(const Document& doc, std::string_view delimiter) {
    std::vector<ChunkRecord> chunks;
    std::size_t pos = 0;
    std::uint64_t chunk_index = 0;
    for (;;) {
        const std::size_t hit =
            delimiter.empty() ? std::string::npos : doc.raw_text.find(delimiter, pos);
        const std::size_t end = (hit == std::string::npos) ? doc.raw_text.size() : hit;
        ChunkRecord chunk;
        chunk.chunk_id = chunk_index;
        chunk.doc_index = doc.doc_index;
        chunk.chunk_index = chunk_index;
        chunk.text = doc.raw_text.substr(pos, end - pos);
        chunk.metadata["doc_index"] = std::to_string(doc.doc_index);
        chunk.metadata["chunk_index"] = std::to_string(chunk_index);
        chunks.push_back(std::move(chunk));
        ++chunk_index;
        if (hit == std::string::npos) {
            break;
        }
        pos = hit + delimiter.size();
    }
    return chunks;
}

std::vector<ChunkRecord> split_all(const std::vector<Document>& docs, std::string_view delimiter) {
    std::vector<ChunkRecord> all;
    std::uint64_t next_id = 0;
    for (const auto& doc : docs) {
        auto chunks = split_by_delimiter(doc, delimiter);
        for (auto& c : chunks) {
            c.chunk_id = next_id++;
            all.push_back(std::move(c));
        }
    }
    return all;
}

std::string topic_token(std::uint64_t case_id, std::uint64_t seed) {
    return "topic_" + std::to_string(case_id) + "_" + std::to_string(seed);
}

std::vector<ConversationCase> build_conversational_cases(std::vector<ChunkRecord>& chunks,
                                                         std::size_t n_cases, std::uint64_t seed) {
    if (n_cases > chunks.size()) {
        throw std::invalid_argument("build_conversational_cases: n_cases exceeds chunk count");
    }
    std::vector<ConversationCase> cases;
    if (n_cases == 0) {
        return cases;
    }

    // Partial Fisher-Yates over chunk positions picks distinct gold chunks.
    Rng rng(seed);
    std::vector<std::size_t> positions(chunks.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        positions[i] = i;
    }
    for (std::size_t i = 0; i < n_cases; ++i) {
        const std::size_t j = i + rng.next_below(positions.size() - i);
        std::swap(positions[i], positions[j]);
    }

    cases.reserve(n_cases);
    for (std::size_t i = 0; i < n_cases; ++i) {
        ChunkRecord& gold = chunks[positions[i]];
        const std::string token = topic_token(i, seed);
        if (gold.text.size() < token.size() + 1) {
            throw std::invalid_argument(
                "build_conversational_cases: node_chars too small to hold a topic token");
        }
        // Length-preserving injection at the chunk head.
        gold.text.replace(0, token.size() + 1, token + " ");

        ConversationCase c;
        c.case_id = i;
        c.turn1_query = "describe " + token;
        c.followup_query = kFollowupTemplate;
        c.gold_chunk_id = gold.chunk_id;
        c.session_id = "session_" + std::to_string(i);
        cases.push_back(std::move(c));
    }
    return cases;
}

} // namespace aaflow
