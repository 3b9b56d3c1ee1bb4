#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aaflow/corpus.hpp"
#include "aaflow/rng.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace aaflow;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("aaflow_corpus_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

} // namespace

TEST_CASE("node distribution 20000 nodes over 200 files") {
    CorpusSpec spec;
    spec.total_nodes = 20000;
    spec.file_count = 200;
    spec.node_chars = 8;
    spec.seed = 7;
    const auto manifest = generate_corpus(spec, temp_dir("dist"));
    REQUIRE(manifest.files.size() == 200);
    for (const auto& f : manifest.files) {
        CHECK(f.node_count == 100);
    }
}

TEST_CASE("minimal corpus") {
    CorpusSpec spec;
    spec.total_nodes = 1;
    spec.file_count = 1;
    spec.node_chars = 1;
    spec.seed = 1;
    const auto manifest = generate_corpus(spec, temp_dir("min"));
    REQUIRE(manifest.files.size() == 1);
    const std::string text = slurp(manifest.files[0].path);
    CHECK(text.size() == 1);
    CHECK(count_occurrences(text, spec.delimiter) == 0);
}

TEST_CASE("floor plus remainder split for 7 nodes over 3 files") {
    CorpusSpec spec;
    spec.total_nodes = 7;
    spec.file_count = 3;
    spec.node_chars = 4;
    spec.seed = 2;
    const auto manifest = generate_corpus(spec, temp_dir("rem"));
    REQUIRE(manifest.files.size() == 3);
    CHECK(manifest.files[0].node_count == 3);
    CHECK(manifest.files[1].node_count == 2);
    CHECK(manifest.files[2].node_count == 2);
}

TEST_CASE("generation is byte-identical across runs") {
    CorpusSpec spec;
    spec.total_nodes = 64;
    spec.file_count = 5;
    spec.node_chars = 100;
    spec.seed = 99;
    const auto m1 = generate_corpus(spec, temp_dir("det1"));
    const auto m2 = generate_corpus(spec, temp_dir("det2"));
    REQUIRE(m1.files.size() == m2.files.size());
    for (std::size_t i = 0; i < m1.files.size(); ++i) {
        CHECK(slurp(m1.files[i].path) == slurp(m2.files[i].path));
    }
}

TEST_CASE("delimiter never appears inside node text and accounting holds") {
    CorpusSpec spec;
    spec.total_nodes = 500;
    spec.file_count = 20;
    spec.node_chars = 50;
    spec.seed = 5;
    const auto manifest = generate_corpus(spec, temp_dir("acct"));
    std::uint64_t total = 0;
    for (const auto& f : manifest.files) {
        const std::string text = slurp(f.path);
        const std::size_t delims = count_occurrences(text, spec.delimiter);
        CHECK(delims == f.node_count - 1);
        total += delims + 1;
    }
    CHECK(total == spec.total_nodes);
}

TEST_CASE("manifest round-trip") {
    CorpusSpec spec;
    spec.total_nodes = 12;
    spec.file_count = 4;
    spec.node_chars = 16;
    spec.seed = 3;
    const auto dir = temp_dir("manifest");
    const auto manifest = generate_corpus(spec, dir);
    const auto loaded = load_manifest(dir / "manifest.json");
    CHECK(loaded.spec.total_nodes == spec.total_nodes);
    CHECK(loaded.spec.delimiter == spec.delimiter);
    CHECK(loaded.spec.seed == spec.seed);
    REQUIRE(loaded.files.size() == manifest.files.size());
    for (std::size_t i = 0; i < loaded.files.size(); ++i) {
        CHECK(loaded.files[i].path == manifest.files[i].path);
        CHECK(loaded.files[i].node_count == manifest.files[i].node_count);
    }
}

TEST_CASE("load order is independent of reader workers") {
    CorpusSpec spec;
    spec.total_nodes = 40;
    spec.file_count = 10;
    spec.node_chars = 30;
    spec.seed = 11;
    const auto manifest = generate_corpus(spec, temp_dir("load"));
    const auto serial = load_documents(manifest, 1);
    const auto parallel = load_documents(manifest, 8);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].doc_index == i);
        CHECK(parallel[i].doc_index == i);
        CHECK(serial[i].raw_text == parallel[i].raw_text);
    }
}

TEST_CASE("empty manifest loads to an empty list") {
    CorpusManifest manifest;
    CHECK(load_documents(manifest, 4).empty());
}

TEST_CASE("missing file error names the path") {
    CorpusManifest manifest;
    manifest.files.push_back({"/nonexistent/aaflow_missing.txt", 1});
    CHECK_THROWS_WITH_AS(load_documents(manifest, 1),
                         doctest::Contains("/nonexistent/aaflow_missing.txt"),
                         std::runtime_error);
}

TEST_CASE("split on delimiter") {
    Document doc{0, "mem", "aaa|bbb"};
    auto chunks = split_by_delimiter(doc, "|");
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].text == "aaa");
    CHECK(chunks[1].text == "bbb");
    CHECK(chunks[0].metadata.at("doc_index") == "0");
    CHECK(chunks[1].metadata.at("chunk_index") == "1");

    Document plain{3, "mem", "no delimiter here"};
    auto single = split_by_delimiter(plain, "|");
    REQUIRE(single.size() == 1);
    CHECK(single[0].text == plain.raw_text);
    CHECK(single[0].doc_index == 3);

    Document empty{1, "mem", ""};
    auto empty_chunks = split_by_delimiter(empty, "|");
    REQUIRE(empty_chunks.size() == 1);
    CHECK(empty_chunks[0].text.empty());
}

TEST_CASE("split then join is the identity") {
    Rng rng(17);
    for (int round = 0; round < 30; ++round) {
        std::string text;
        const std::size_t pieces = rng.next_below(6);
        for (std::size_t i = 0; i <= pieces; ++i) {
            if (i > 0) {
                text += "<<<NODE>>>";
            }
            const std::size_t len = rng.next_below(12);
            for (std::size_t c = 0; c < len; ++c) {
                text.push_back(static_cast<char>('a' + rng.next_below(26)));
            }
        }
        Document doc{0, "mem", text};
        const auto chunks = split_by_delimiter(doc, "<<<NODE>>>");
        CHECK(chunks.size() == pieces + 1);
        std::string rejoined;
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            if (i > 0) {
                rejoined += "<<<NODE>>>";
            }
            rejoined += chunks[i].text;
        }
        CHECK(rejoined == text);
    }
}

TEST_CASE("generated corpus splits to exactly N chunks of node_chars") {
    CorpusSpec spec;
    spec.total_nodes = 500;
    spec.file_count = 20;
    spec.node_chars = 64;
    spec.seed = 21;
    const auto manifest = generate_corpus(spec, temp_dir("split_n"));
    const auto docs = load_documents(manifest, 1);
    const auto chunks = split_all(docs, spec.delimiter);
    REQUIRE(chunks.size() == 500);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        CHECK(chunks[i].chunk_id == i);
        CHECK(chunks[i].text.size() == spec.node_chars);
    }
}

TEST_CASE("conversational cases") {
    CorpusSpec spec;
    spec.total_nodes = 60;
    spec.file_count = 4;
    spec.node_chars = 80;
    spec.seed = 31;
    const auto manifest = generate_corpus(spec, temp_dir("cases"));
    const auto docs = load_documents(manifest, 1);

    SUBCASE("zero cases") {
        auto chunks = split_all(docs, spec.delimiter);
        CHECK(build_conversational_cases(chunks, 0, 1).empty());
    }

    SUBCASE("eight cases with distinct golds") {
        auto chunks = split_all(docs, spec.delimiter);
        const auto cases = build_conversational_cases(chunks, 8, 7);
        REQUIRE(cases.size() == 8);
        std::set<std::uint64_t> golds;
        for (const auto& c : cases) {
            golds.insert(c.gold_chunk_id);
            const std::string token = topic_token(c.case_id, 7);
            CHECK(c.turn1_query.find(token) != std::string::npos);
            CHECK(c.followup_query.find(token) == std::string::npos);
            CHECK(chunks[c.gold_chunk_id].text.rfind(token, 0) == 0);
            CHECK(chunks[c.gold_chunk_id].text.size() == spec.node_chars);
        }
        CHECK(golds.size() == 8);
    }

    SUBCASE("deterministic under seed") {
        auto chunks_a = split_all(docs, spec.delimiter);
        auto chunks_b = split_all(docs, spec.delimiter);
        const auto a = build_conversational_cases(chunks_a, 10, 5);
        const auto b = build_conversational_cases(chunks_b, 10, 5);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].gold_chunk_id == b[i].gold_chunk_id);
            CHECK(a[i].turn1_query == b[i].turn1_query);
        }
        for (std::size_t i = 0; i < chunks_a.size(); ++i) {
            CHECK(chunks_a[i].text == chunks_b[i].text);
        }
    }

    SUBCASE("too many cases rejected") {
        auto chunks = split_all(docs, spec.delimiter);
        CHECK_THROWS_AS(build_conversational_cases(chunks, chunks.size() + 1, 1),
                        std::invalid_argument);
    }
}

TEST_CASE("invalid specs rejected") {
    CorpusSpec bad;
    bad.total_nodes = 1;
    bad.file_count = 2;
    bad.node_chars = 10;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);

    CorpusSpec zero_chars;
    zero_chars.total_nodes = 2;
    zero_chars.file_count = 1;
    zero_chars.node_chars = 0;
    CHECK_THROWS_AS(validate(zero_chars), std::invalid_argument);
}
