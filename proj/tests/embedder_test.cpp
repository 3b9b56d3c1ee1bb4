#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aaflow/embedder.hpp"
#include "aaflow/sha256.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

using namespace aaflow;

namespace {

// Independent derivation oracle: re-expands the digest chain and maps bytes
// to components without going through embed_text.
std::vector<float> oracle_embed(const std::string& text, std::size_t dim) {
    std::vector<std::uint8_t> stream;
    const Sha256::Digest base = Sha256::hash(text);
    stream.insert(stream.end(), base.begin(), base.end());
    std::uint32_t counter = 1;
    while (stream.size() < 4 * dim) {
        Sha256 h;
        h.update(base.data(), base.size());
        const std::uint8_t be[4] = {
            static_cast<std::uint8_t>(counter >> 24), static_cast<std::uint8_t>(counter >> 16),
            static_cast<std::uint8_t>(counter >> 8), static_cast<std::uint8_t>(counter)};
        h.update(be, 4);
        const auto d = h.finish();
        stream.insert(stream.end(), d.begin(), d.end());
        ++counter;
    }
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const std::uint32_t u = (std::uint32_t(stream[4 * i]) << 24) |
                                (std::uint32_t(stream[4 * i + 1]) << 16) |
                                (std::uint32_t(stream[4 * i + 2]) << 8) |
                                std::uint32_t(stream[4 * i + 3]);
        out[i] = static_cast<float>(2.0 * (static_cast<double>(u) / 4294967296.0) - 1.0);
    }
    return out;
}

} // namespace

TEST_CASE("first component of embed_text(a) matches the published digest") {
    // SHA-256("a") begins ca978112, so the first mapped component is fixed.
    const auto v = embed_text("a", 4);
    const auto expected = static_cast<float>(2.0 * (static_cast<double>(0xCA978112u) / 4294967296.0) - 1.0);
    CHECK(v.values[0] == expected);
}

TEST_CASE("full leading digest of embed_text(a)") {
    // Remaining words of SHA-256("a") = ca978112 ca1bbdca fac231b3 9a23dc4d
    //                                   a786eff8 147c4e72 b9807785 afee48bb
    const std::uint32_t words[8] = {0xCA978112u, 0xCA1BBDCAu, 0xFAC231B3u, 0x9A23DC4Du,
                                    0xA786EFF8u, 0x147C4E72u, 0xB9807785u, 0xAFEE48BBu};
    const auto v = embed_text("a", 8);
    for (std::size_t i = 0; i < 8; ++i) {
        const auto expected =
            static_cast<float>(2.0 * (static_cast<double>(words[i]) / 4294967296.0) - 1.0);
        CHECK(v.values[i] == expected);
    }
}

TEST_CASE("digest chaining beyond one block matches the oracle") {
    for (const std::size_t dim : {1u, 8u, 9u, 20u, 64u, 100u}) {
        const auto v = embed_text("chained expansion", dim);
        const auto expected = oracle_embed("chained expansion", dim);
        REQUIRE(v.values.size() == dim);
        for (std::size_t i = 0; i < dim; ++i) {
            CHECK(v.values[i] == expected[i]);
        }
    }
}

TEST_CASE("determinism and distinctness") {
    CHECK(embed_text("t", 32) == embed_text("t", 32));
    const auto a = embed_text("a", 4);
    const auto b = embed_text("b", 4);
    bool any_diff = false;
    for (std::size_t i = 0; i < 4; ++i) {
        any_diff = any_diff || a.values[i] != b.values[i];
    }
    CHECK(any_diff);
}

TEST_CASE("raw components stay inside [-1, 1)") {
    for (int i = 0; i < 50; ++i) {
        const auto v = embed_text("range check " + std::to_string(i), 16);
        for (const float x : v.values) {
            CHECK(x >= -1.0f);
            CHECK(x < 1.0f);
        }
    }
}

TEST_CASE("dim zero rejected") {
    CHECK_THROWS_AS(embed_text("x", 0), std::invalid_argument);
}

TEST_CASE("simulated latency formula") {
    CHECK(simulated_latency_ms(32, {5, 1}) == doctest::Approx(37.0));
    CHECK(simulated_latency_ms(1, {0, 0}) == doctest::Approx(0.0));
    CHECK(simulated_latency_ms(64, {5, 0.5}) == doctest::Approx(37.0));
}

TEST_CASE("embed_batch values are stateless") {
    const std::vector<std::string> texts = {"one", "two", "three", "four"};
    const auto all = embed_batch(texts, 8, {});
    REQUIRE(all.size() == 4);
    CHECK(all[0] == embed_text("one", 8));

    const auto first = embed_batch({"one", "two"}, 8, {});
    const auto second = embed_batch({"three", "four"}, 8, {});
    CHECK(all[0] == first[0]);
    CHECK(all[1] == first[1]);
    CHECK(all[2] == second[0]);
    CHECK(all[3] == second[1]);
}

TEST_CASE("embed_batch charges the affine latency") {
    const auto start = std::chrono::steady_clock::now();
    (void)embed_batch({"x", "y"}, 4, {10, 5});
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    CHECK(ms >= 20.0); // 10 + 5*2
    CHECK(ms < 120.0);
}

TEST_CASE("normalize") {
    EmbeddingVector v;
    v.values = {3.0f, 4.0f};
    const auto n = normalize(v);
    CHECK(n.values[0] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(n.values[1] == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(n.normalized);

    const auto again = normalize(n);
    CHECK(std::abs(again.values[0] - n.values[0]) < 1e-6f);
    CHECK(std::abs(again.values[1] - n.values[1]) < 1e-6f);
    CHECK(l2_norm(again) == doctest::Approx(1.0).epsilon(1e-6));

    EmbeddingVector zero;
    zero.values = {0.0f, 0.0f};
    CHECK_THROWS_AS(normalize(zero), std::domain_error);
}
